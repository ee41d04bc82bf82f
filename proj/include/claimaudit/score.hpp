#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace claimaudit {

enum class Quadrant { kHighReliability, kSuspiciousContent, kPlausibleButUnsupported, kPotentialHallucination };
enum class Color { kGreen, kOrange, kRed };

std::string to_string(Quadrant q);
std::string to_string(Color c);
Quadrant quadrant_from_string(std::string_view s);
Color color_from_string(std::string_view s);

struct ConfidenceWeights {
  double w_nli = 0.75;
  double w_sim = 0.25;

  void validate() const;
  bool operator==(const ConfidenceWeights&) const = default;
};

struct QuadrantThresholds {
  double tau_nli = 0.5;
  double tau_sim = 0.5;

  void validate() const;
  bool operator==(const QuadrantThresholds&) const = default;
};

// Which quadrant each (NLI high/low, similarity high/low) cell maps to.
struct QuadrantTable {
  Quadrant high_nli_high_sim = Quadrant::kHighReliability;
  Quadrant high_nli_low_sim = Quadrant::kPlausibleButUnsupported;
  Quadrant low_nli_high_sim = Quadrant::kSuspiciousContent;
  Quadrant low_nli_low_sim = Quadrant::kPotentialHallucination;
  bool operator==(const QuadrantTable&) const = default;
};

struct ColorBands {
  double green_min = 0.75;
  double orange_min = 0.5;

  void validate() const;
  bool operator==(const ColorBands&) const = default;
};

struct ClaimAssessment {
  std::string claim_id;
  double nli = 0.0;
  double avg_sim = 0.0;
  double confidence = 0.0;
  Quadrant quadrant = Quadrant::kPotentialHallucination;
  Color color = Color::kRed;

  bool operator==(const ClaimAssessment&) const = default;
};

struct ResponseMetrics {
  double avg_nli = 0.0;
  double avg_sim = 0.0;
  double combined = 0.0;

  bool operator==(const ResponseMetrics&) const = default;
};

double confidence(double nli, double avg_sim, const ConfidenceWeights& w = {});
Quadrant classify_quadrant(double nli, double avg_sim, const QuadrantThresholds& t = {}, const QuadrantTable& table = {});
Color assign_color(double confidence, const ColorBands& bands = {});

ClaimAssessment assess_claim(std::string claim_id, double nli, double avg_sim, const ConfidenceWeights& w = {},
                             const QuadrantThresholds& t = {}, const ColorBands& bands = {},
                             const QuadrantTable& table = {});

ResponseMetrics response_metrics(const std::vector<ClaimAssessment>& assessments, const ConfidenceWeights& w = {});

nlohmann::json to_json(const ConfidenceWeights& w);
nlohmann::json to_json(const QuadrantThresholds& t);
nlohmann::json to_json(const QuadrantTable& t);
nlohmann::json to_json(const ColorBands& b);
nlohmann::json to_json(const ResponseMetrics& m);
ConfidenceWeights weights_from_json(const nlohmann::json& j);
QuadrantThresholds thresholds_from_json(const nlohmann::json& j);
QuadrantTable quadrant_table_from_json(const nlohmann::json& j);
ColorBands bands_from_json(const nlohmann::json& j);
ResponseMetrics metrics_from_json(const nlohmann::json& j);

}  // namespace claimaudit
