#include "poseattack/classifier.hpp"

#include <algorithm>
#include <cmath>

namespace poseattack {

AlignmentParams preset_params(ThresholdPreset preset) {
  switch (preset) {
    case ThresholdPreset::deg10_m025: return {10.0, 0.25};
    case ThresholdPreset::deg30_m050: return {30.0, 0.5};
    case ThresholdPreset::deg60_m200: return {60.0, 2.0};
  }
  throw std::invalid_argument("unknown preset");
}

std::string preset_name(ThresholdPreset preset) {
  switch (preset) {
    case ThresholdPreset::deg10_m025: return "10deg0.25m";
    case ThresholdPreset::deg30_m050: return "30deg0.5m";
    case ThresholdPreset::deg60_m200: return "60deg2m";
  }
  throw std::invalid_argument("unknown preset");
}

ThresholdPreset preset_from_name(const std::string& name) {
  for (ThresholdPreset p : kAllPresets)
    if (preset_name(p) == name) return p;
  throw std::invalid_argument("unknown preset name: " + name);
}

namespace {

// Lower median: deterministic and never fabricates an unobserved value.
double lower_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

std::map<std::string, PresenceStats> train_stats(const std::vector<TrainingRun>& runs,
                                                 ThresholdPreset preset) {
  std::map<std::string, std::vector<double>> present, absent;
  for (const auto& run : runs) {
    if (!(run.epsilon >= 0.0 && run.epsilon <= 1.0))
      throw std::invalid_argument("training epsilon outside [0, 1] for " + run.object_id);
    (run.present ? present : absent)[run.object_id].push_back(run.epsilon);
    (run.present ? absent : present).try_emplace(run.object_id);
  }

  std::map<std::string, PresenceStats> out;
  for (const auto& [object_id, absent_eps] : absent) {
    if (absent_eps.empty())
      throw MissingAbsentDataError("object has no absent-labeled training runs: " + object_id);
    PresenceStats s;
    s.object_id = object_id;
    s.preset = preset;
    s.eps_absent = lower_median(absent_eps);
    s.n_train_absent = static_cast<int>(absent_eps.size());
    const auto& present_eps = present.at(object_id);
    if (!present_eps.empty()) {
      s.eps_present = lower_median(present_eps);
      s.n_train_present = static_cast<int>(present_eps.size());
    }
    out.emplace(object_id, std::move(s));
  }
  return out;
}

PresenceDecision classify(double epsilon, const PresenceStats& stats) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon outside [0, 1]");
  PresenceDecision d;
  d.object_id = stats.object_id;
  d.epsilon_observed = epsilon;
  if (stats.eps_present.has_value()) {
    d.rule_used = DecisionRule::two_sided;
    const bool present =
        std::abs(epsilon - *stats.eps_present) < std::abs(epsilon - stats.eps_absent);
    d.verdict = present ? Verdict::present : Verdict::absent;
  } else {
    d.rule_used = DecisionRule::fallback;
    d.verdict = epsilon > stats.eps_absent ? Verdict::present : Verdict::absent;
  }
  return d;
}

PrecisionRecall precision_recall(const std::vector<LabeledDecision>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("no decisions to score");
  PrecisionRecall pr;
  int positives = 0;
  for (const auto& d : decisions) {
    const bool predicted = d.decision.verdict == Verdict::present;
    if (d.truth_present) ++positives;
    if (predicted && d.truth_present) ++pr.tp;
    else if (predicted && !d.truth_present) ++pr.fp;
    else if (!predicted && d.truth_present) ++pr.fn;
    else ++pr.tn;
  }
  if (pr.tp + pr.fp > 0) {
    pr.precision = static_cast<double>(pr.tp) / (pr.tp + pr.fp);
  } else {
    pr.precision = 0.0;
    pr.precision_defined = false;
  }
  if (pr.tp + pr.fn > 0) {
    pr.recall = static_cast<double>(pr.tp) / (pr.tp + pr.fn);
  } else {
    pr.recall = 0.0;
    pr.recall_defined = false;
  }
  pr.random_guess_precision = static_cast<double>(positives) / decisions.size();
  return pr;
}

std::map<std::string, PrecisionRecall> precision_recall_per_scene(
    const std::vector<LabeledDecision>& decisions) {
  std::map<std::string, std::vector<LabeledDecision>> by_scene;
  for (const auto& d : decisions) by_scene[d.scene_id].push_back(d);
  std::map<std::string, PrecisionRecall> out;
  for (const auto& [scene_id, list] : by_scene) out.emplace(scene_id, precision_recall(list));
  return out;
}

}  // namespace poseattack
