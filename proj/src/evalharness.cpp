#include "claimaudit/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"

namespace claimaudit {

using nlohmann::json;

namespace {

std::string first_string(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    const auto it = j.find(k);
    if (it != j.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

std::string id_part(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->is_string() ? it->get<std::string>() : it->dump();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
}

}  // namespace

SummEvalDataset parse_summeval(std::istream& in) {
  SummEvalDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");

    SummEvalRecord r;
    r.model_id = id_part(j, "model_id");
    r.record_id = id_part(j, "id") + "#" + r.model_id;
    r.source_text = first_string(j, {"text", "src", "source"});
    r.summary_text = first_string(j, {"decoded", "summary"});
    if (is_blank(r.source_text) || is_blank(r.summary_text)) {
      throw ParseError(line_no, "record " + r.record_id + " lacks source or summary text");
    }

    const auto ann = j.find("expert_annotations");
    if (ann == j.end() || !ann->is_array() || ann->empty()) {
      spdlog::warn("summeval line {}: no expert annotations, skipping {}", line_no, r.record_id);
      ++ds.skipped;
      continue;
    }
    try {
      for (const auto& a : *ann) r.expert_consistency.push_back(a.at("consistency").get<int>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad expert annotation: ") + e.what());
    }
    for (int v : r.expert_consistency) {
      if (v < 1 || v > 5) throw ParseError(line_no, "consistency rating " + std::to_string(v) + " outside 1..5");
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

SummEvalDataset load_summeval(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open SummEval file " + path.string());
  return parse_summeval(in);
}

TokenStats token_stats(const std::vector<SummEvalRecord>& records) {
  if (records.empty()) throw InputError("token_stats: no records");
  double summary = 0.0;
  double source = 0.0;
  for (const auto& r : records) {
    summary += static_cast<double>(count_whitespace_tokens(r.summary_text));
    source += static_cast<double>(count_whitespace_tokens(r.source_text));
  }
  const auto n = static_cast<double>(records.size());
  return {summary / n, source / n};
}

Label binarize_consistency(const std::vector<int>& ratings) {
  if (ratings.empty()) throw InputError("binarize_consistency: no ratings");
  for (int r : ratings) {
    if (r < 1 || r > 5) throw InputError("binarize_consistency: rating " + std::to_string(r) + " outside 1..5");
  }
  const bool unanimous = std::all_of(ratings.begin(), ratings.end(), [](int r) { return r == 5; });
  return unanimous ? Label::kConsistent : Label::kHallucinated;
}

ConfusionCounts confusion(const std::vector<Label>& preds, const std::vector<Label>& labels) {
  if (preds.size() != labels.size()) throw InputError("confusion: predictions and labels differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::kConsistent;
    const bool l = labels[i] == Label::kConsistent;
    if (p && l) ++c.tp;
    else if (!p && !l) ++c.tn;
    else if (p) ++c.fp;
    else ++c.fn;
  }
  return c;
}

double balanced_accuracy(const ConfusionCounts& c) {
  const std::size_t pos = c.tp + c.fn;
  const std::size_t neg = c.tn + c.fp;
  if (pos == 0 || neg == 0) throw MetricError("balanced accuracy is undefined when labels contain a single class");
  return 0.5 * (static_cast<double>(c.tp) / static_cast<double>(pos) +
                static_cast<double>(c.tn) / static_cast<double>(neg));
}

double balanced_accuracy(const std::vector<Label>& preds, const std::vector<Label>& labels) {
  return balanced_accuracy(confusion(preds, labels));
}

SweepResult sweep_threshold(const std::vector<double>& scores, const std::vector<Label>& labels) {
  if (scores.size() != labels.size()) throw InputError("sweep_threshold: scores and labels differ in length");
  SweepResult out;
  out.curve.reserve(99);
  std::vector<Label> preds(scores.size());
  bool first = true;
  for (int i = 1; i <= 99; ++i) {
    const double t = i / 100.0;
    for (std::size_t k = 0; k < scores.size(); ++k) preds[k] = scores[k] >= t ? Label::kConsistent : Label::kHallucinated;
    const double ba = balanced_accuracy(preds, labels);
    out.curve.emplace_back(t, ba);
    if (first || ba > out.best_balanced_accuracy) {
      out.best_threshold = t;
      out.best_balanced_accuracy = ba;
      first = false;
    }
  }
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kHhemBaseline:
      return "hhem_baseline";
    case Method::kGraphEvalPlus:
      return "grapheval_plus";
    case Method::kSici0:
      return "sici_0";
    case Method::kSici1:
      return "sici_1";
  }
  return "sici_0";
}

std::string valid_method_names() { return "hhem_baseline, grapheval_plus, sici_0, sici_1"; }

Method method_from_string(std::string_view s) {
  if (s == "hhem_baseline") return Method::kHhemBaseline;
  if (s == "grapheval_plus") return Method::kGraphEvalPlus;
  if (s == "sici_0") return Method::kSici0;
  if (s == "sici_1") return Method::kSici1;
  throw ConfigError("unknown method '" + std::string(s) + "' (valid: " + valid_method_names() + ")");
}

PipelineConfig pipeline_for(Method m, const PipelineConfig& base) {
  PipelineConfig cfg = base;
  switch (m) {
    case Method::kGraphEvalPlus:
      cfg.decompose.strategy = Strategy::kTriples;
      cfg.decompose.window_radius = 0;
      break;
    case Method::kSici0:
      cfg.decompose.strategy = Strategy::kSici;
      cfg.decompose.window_radius = 0;
      break;
    case Method::kSici1:
      cfg.decompose.strategy = Strategy::kSici;
      cfg.decompose.window_radius = 1;
      break;
    case Method::kHhemBaseline:
      break;
  }
  return cfg;
}

EvalReport run_method(const std::vector<SummEvalRecord>& records, Method method, const PipelineConfig& base,
                      ProviderSet& providers, const RunOptions& options) {
  if (records.empty()) throw InputError("run_method: no records");
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  PipelineConfig cfg = pipeline_for(method, base);
  cfg.threshold = options.threshold;
  cfg.validate();

  struct Slot {
    std::optional<ExampleResult> result;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(records.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  std::atomic<bool> abort{false};
  const std::size_t calls_before = providers.total_invocations();

  auto evaluate = [&](const SummEvalRecord& rec) {
    ExampleResult ex;
    ex.record_id = rec.record_id;
    ex.label = binarize_consistency(rec.expert_consistency);
    if (method == Method::kHhemBaseline) {
      ex.score = nli_score(rec.source_text, rec.summary_text, *providers.nli).entail;
    } else {
      const auto r = run_audit(rec.source_text, rec.summary_text, cfg, providers);
      ex.score = r.verdict.response_score;
      ex.failure_forced = r.verdict.failure_forced;
    }
    ex.pred = ex.score >= cfg.threshold && !ex.failure_forced ? Label::kConsistent : Label::kHallucinated;
    return ex;
  };

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      try {
        slots[i].result = evaluate(records[i]);
      } catch (const JudgmentError& e) {
        slots[i].error = e.what();
      } catch (const TransportError& e) {
        slots[i].error = e.what();
      } catch (const DecodeError& e) {
        slots[i].error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, records.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  const auto stop = std::chrono::steady_clock::now();
  if (fatal) std::rethrow_exception(fatal);

  EvalReport rep;
  rep.method_name = to_string(method);
  rep.threshold = cfg.threshold;
  rep.wall_clock_seconds = std::chrono::duration<double>(stop - start).count();
  rep.provider_invocations = providers.total_invocations() - calls_before;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i].result) {
      rep.per_example.push_back(std::move(*slots[i].result));
    } else {
      spdlog::warn("{}: unevaluable: {}", records[i].record_id, slots[i].error.value_or("unknown error"));
      rep.unevaluable.push_back({records[i].record_id, slots[i].error.value_or("unknown error")});
    }
  }
  std::stable_sort(rep.per_example.begin(), rep.per_example.end(),
                   [](const ExampleResult& a, const ExampleResult& b) { return a.record_id < b.record_id; });
  std::stable_sort(rep.unevaluable.begin(), rep.unevaluable.end(),
                   [](const Unevaluable& a, const Unevaluable& b) { return a.record_id < b.record_id; });

  std::vector<Label> preds;
  std::vector<Label> labels;
  for (const auto& ex : rep.per_example) {
    preds.push_back(ex.pred);
    labels.push_back(ex.label);
  }
  rep.counts = confusion(preds, labels);
  rep.n = rep.counts.total();
  try {
    rep.balanced_accuracy = balanced_accuracy(rep.counts);
  } catch (const MetricError& e) {
    spdlog::warn("{}: {}", rep.method_name, e.what());
  }
  return rep;
}

std::vector<std::size_t> load_subset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open subset file " + path.string());
  std::vector<std::size_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(std::string(t), &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != t.size()) throw ParseError(line_no, "expected a record index, got '" + std::string(t) + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<SummEvalRecord> select_subset(const std::vector<SummEvalRecord>& records,
                                          const std::vector<std::size_t>& indices) {
  std::vector<SummEvalRecord> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= records.size()) {
      throw InputError("subset index " + std::to_string(i) + " out of range (" + std::to_string(records.size()) +
                       " records)");
    }
    out.push_back(records[i]);
  }
  return out;
}

json to_json(const EvalReport& r, bool include_per_example) {
  json j = {{"method_name", r.method_name},
            {"n", r.n},
            {"tp", r.counts.tp},
            {"tn", r.counts.tn},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"balanced_accuracy", r.balanced_accuracy ? json(*r.balanced_accuracy) : json(nullptr)},
            {"threshold", r.threshold},
            {"wall_clock_seconds", r.wall_clock_seconds},
            {"provider_invocations", r.provider_invocations}};
  json unevaluable = json::array();
  for (const auto& u : r.unevaluable) unevaluable.push_back({{"record_id", u.record_id}, {"reason", u.reason}});
  j["unevaluable"] = std::move(unevaluable);
  if (include_per_example) {
    json rows = json::array();
    for (const auto& ex : r.per_example) {
      rows.push_back({{"record_id", ex.record_id},
                      {"score", ex.score},
                      {"pred", to_string(ex.pred)},
                      {"label", to_string(ex.label)},
                      {"failure_forced", ex.failure_forced}});
    }
    j["per_example"] = std::move(rows);
  }
  return j;
}

std::string per_example_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "record_id,score,pred,label,failure_forced\n";
  for (const auto& ex : r.per_example) {
    std::string id = ex.record_id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      id = quoted + "\"";
    }
    out << id << ',' << ex.score << ',' << to_string(ex.pred) << ',' << to_string(ex.label) << ','
        << (ex.failure_forced ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,balanced_accuracy\n";
  for (const auto& [t, ba] : s.curve) out << t << ',' << ba << '\n';
  return out.str();
}

void write_report(const std::filesystem::path& dir, const EvalReport& report, const json& config_snapshot,
                  const std::optional<SweepResult>& sweep) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create report directory " + dir.string() + ": " + ec.message());
  json j = to_json(report);
  if (sweep) {
    j["sweep"] = {{"best_threshold", sweep->best_threshold}, {"best_balanced_accuracy", sweep->best_balanced_accuracy}};
  }
  write_file(dir / "report.json", j.dump(2) + "\n");
  write_file(dir / "report.csv", per_example_csv(report));
  write_file(dir / "config.json", config_snapshot.dump(2) + "\n");
  if (sweep) write_file(dir / "sweep.csv", sweep_csv(*sweep));
}

}  // namespace claimaudit
