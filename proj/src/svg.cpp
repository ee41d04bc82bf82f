#include <sstream>
#include <unordered_map>

#include "claimaudit/graph.hpp"

namespace claimaudit {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

const char* fill_for(Color c) {
  switch (c) {
    case Color::kGreen:
      return "#2e9d45";
    case Color::kOrange:
      return "#f08c00";
    case Color::kRed:
      return "#d62828";
  }
  return "#d62828";
}

}  // namespace

std::string render_svg(const GraphDocument& doc, int size_px) {
  const double margin = 40.0;
  const double plot = static_cast<double>(size_px) - 2.0 * margin;
  auto sx = [&](double x) { return margin + x * plot; };
  auto sy = [&](double y) { return margin + (1.0 - y) * plot; };

  std::unordered_map<std::string, const NodePosition*> pos;
  for (const auto& p : doc.positions) pos[p.claim_id] = &p;

  std::ostringstream svg;
  svg.precision(6);
  svg << std::fixed;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_px << "\" height=\"" << size_px
      << "\" viewBox=\"0 0 " << size_px << ' ' << size_px << "\">\n";
  svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot << "\" height=\"" << plot
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<line x1=\"" << sx(doc.thresholds.tau_nli) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(doc.thresholds.tau_nli)
      << "\" y2=\"" << sy(1) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  svg << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(doc.thresholds.tau_sim) << "\" x2=\"" << sx(1) << "\" y2=\""
      << sy(doc.thresholds.tau_sim) << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  svg << "<text x=\"" << size_px / 2 << "\" y=\"" << size_px - 10 << "\" text-anchor=\"middle\" font-size=\"12\">NLI score</text>\n";
  svg << "<text x=\"14\" y=\"" << size_px / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << size_px / 2 << ")\">avg similarity</text>\n";

  for (const auto& e : doc.graph.edges) {
    const auto a = pos.find(e.output_claim_id);
    const auto b = pos.find(e.source_claim_id);
    if (a == pos.end() || b == pos.end()) continue;
    svg << "<line x1=\"" << sx(a->second->x) << "\" y1=\"" << sy(a->second->y) << "\" x2=\"" << sx(b->second->x)
        << "\" y2=\"" << sy(b->second->y) << "\" stroke=\"#999\" stroke-width=\"" << 0.5 + 2.0 * e.sim01() << "\"/>\n";
  }
  const double r = doc.layout.node_radius * plot;
  for (const auto& node : doc.graph.nodes) {
    const auto it = pos.find(node.claim.id);
    if (it == pos.end()) continue;
    const char* fill = node.assessment ? fill_for(node.assessment->color) : "#ffffff";
    svg << "<circle cx=\"" << sx(it->second->x) << "\" cy=\"" << sy(it->second->y) << "\" r=\"" << r << "\" fill=\""
        << fill << "\" stroke=\"#333\"><title>" << escape_xml(node.claim.text) << "</title></circle>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace claimaudit
