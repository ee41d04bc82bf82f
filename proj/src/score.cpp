#include "claimaudit/score.hpp"

#include <cmath>

#include "claimaudit/errors.hpp"

namespace claimaudit {

namespace {

void require_unit(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw InputError(std::string(what) + " must lie in [0,1], got " + std::to_string(v));
  }
}

}  // namespace

std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::kHighReliability:
      return "HighReliability";
    case Quadrant::kSuspiciousContent:
      return "SuspiciousContent";
    case Quadrant::kPlausibleButUnsupported:
      return "PlausibleButUnsupported";
    case Quadrant::kPotentialHallucination:
      return "PotentialHallucination";
  }
  return "PotentialHallucination";
}

std::string to_string(Color c) {
  switch (c) {
    case Color::kGreen:
      return "green";
    case Color::kOrange:
      return "orange";
    case Color::kRed:
      return "red";
  }
  return "red";
}

Quadrant quadrant_from_string(std::string_view s) {
  if (s == "HighReliability") return Quadrant::kHighReliability;
  if (s == "SuspiciousContent") return Quadrant::kSuspiciousContent;
  if (s == "PlausibleButUnsupported") return Quadrant::kPlausibleButUnsupported;
  if (s == "PotentialHallucination") return Quadrant::kPotentialHallucination;
  throw InputError("unknown quadrant '" + std::string(s) + "'");
}

Color color_from_string(std::string_view s) {
  if (s == "green") return Color::kGreen;
  if (s == "orange") return Color::kOrange;
  if (s == "red") return Color::kRed;
  throw InputError("unknown color '" + std::string(s) + "'");
}

void ConfidenceWeights::validate() const {
  if (!(w_nli >= 0.0 && w_sim >= 0.0)) throw InputError("confidence weights must be non-negative");
  if (std::abs(w_nli + w_sim - 1.0) > 1e-12) throw InputError("confidence weights must sum to 1");
}

void QuadrantThresholds::validate() const {
  if (!(tau_nli > 0.0 && tau_nli < 1.0) || !(tau_sim > 0.0 && tau_sim < 1.0)) {
    throw InputError("quadrant thresholds must lie strictly inside (0,1)");
  }
}

void ColorBands::validate() const {
  if (!(orange_min >= 0.0 && orange_min <= green_min && green_min <= 1.0)) {
    throw InputError("color bands must satisfy 0 <= orange_min <= green_min <= 1");
  }
}

double confidence(double nli, double avg_sim, const ConfidenceWeights& w) {
  w.validate();
  require_unit(nli, "nli");
  require_unit(avg_sim, "avg_sim");
  return w.w_nli * nli + w.w_sim * avg_sim;
}

Quadrant classify_quadrant(double nli, double avg_sim, const QuadrantThresholds& t, const QuadrantTable& table) {
  require_unit(nli, "nli");
  require_unit(avg_sim, "avg_sim");
  const bool high_nli = nli >= t.tau_nli;
  const bool high_sim = avg_sim >= t.tau_sim;
  if (high_nli) return high_sim ? table.high_nli_high_sim : table.high_nli_low_sim;
  return high_sim ? table.low_nli_high_sim : table.low_nli_low_sim;
}

Color assign_color(double conf, const ColorBands& bands) {
  require_unit(conf, "confidence");
  if (conf >= bands.green_min) return Color::kGreen;
  if (conf >= bands.orange_min) return Color::kOrange;
  return Color::kRed;
}

ClaimAssessment assess_claim(std::string claim_id, double nli, double avg_sim, const ConfidenceWeights& w,
                             const QuadrantThresholds& t, const ColorBands& bands, const QuadrantTable& table) {
  ClaimAssessment a;
  a.claim_id = std::move(claim_id);
  a.nli = nli;
  a.avg_sim = avg_sim;
  a.confidence = confidence(nli, avg_sim, w);
  a.quadrant = classify_quadrant(nli, avg_sim, t, table);
  a.color = assign_color(a.confidence, bands);
  return a;
}

ResponseMetrics response_metrics(const std::vector<ClaimAssessment>& assessments, const ConfidenceWeights& w) {
  if (assessments.empty()) throw InputError("response_metrics: no assessments");
  double nli = 0.0;
  double sim = 0.0;
  for (const auto& a : assessments) {
    nli += a.nli;
    sim += a.avg_sim;
  }
  const auto n = static_cast<double>(assessments.size());
  ResponseMetrics m;
  m.avg_nli = nli / n;
  m.avg_sim = sim / n;
  m.combined = w.w_nli * m.avg_nli + w.w_sim * m.avg_sim;
  return m;
}

nlohmann::json to_json(const ConfidenceWeights& w) { return {{"w_nli", w.w_nli}, {"w_sim", w.w_sim}}; }
nlohmann::json to_json(const QuadrantThresholds& t) { return {{"tau_nli", t.tau_nli}, {"tau_sim", t.tau_sim}}; }
nlohmann::json to_json(const QuadrantTable& t) {
  return {{"high_nli_high_sim", to_string(t.high_nli_high_sim)},
          {"high_nli_low_sim", to_string(t.high_nli_low_sim)},
          {"low_nli_high_sim", to_string(t.low_nli_high_sim)},
          {"low_nli_low_sim", to_string(t.low_nli_low_sim)}};
}
nlohmann::json to_json(const ColorBands& b) { return {{"green_min", b.green_min}, {"orange_min", b.orange_min}}; }
nlohmann::json to_json(const ResponseMetrics& m) {
  return {{"avg_nli", m.avg_nli}, {"avg_sim", m.avg_sim}, {"combined", m.combined}};
}

ConfidenceWeights weights_from_json(const nlohmann::json& j) {
  return {j.at("w_nli").get<double>(), j.at("w_sim").get<double>()};
}
QuadrantThresholds thresholds_from_json(const nlohmann::json& j) {
  return {j.at("tau_nli").get<double>(), j.at("tau_sim").get<double>()};
}
QuadrantTable quadrant_table_from_json(const nlohmann::json& j) {
  return {quadrant_from_string(j.at("high_nli_high_sim").get<std::string>()),
          quadrant_from_string(j.at("high_nli_low_sim").get<std::string>()),
          quadrant_from_string(j.at("low_nli_high_sim").get<std::string>()),
          quadrant_from_string(j.at("low_nli_low_sim").get<std::string>())};
}
ColorBands bands_from_json(const nlohmann::json& j) {
  return {j.at("green_min").get<double>(), j.at("orange_min").get<double>()};
}
ResponseMetrics metrics_from_json(const nlohmann::json& j) {
  return {j.at("avg_nli").get<double>(), j.at("avg_sim").get<double>(), j.at("combined").get<double>()};
}

}  // namespace claimaudit
