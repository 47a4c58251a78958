// Presence/absence classification from inlier ratios. Per object the
// attacker trains two reference values over labeled scenes: eps_present
// (median inlier ratio where the object is present) and eps_absent (median
// where absent). A fresh observation is classified by which reference is
// strictly closer; when no present-labeled training scene exists the
// fallback rule "present iff epsilon > eps_absent" applies.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "poseattack/alignment.hpp"

namespace poseattack {

/// The three built-in (rotation, translation) inlier threshold regimes.
enum class ThresholdPreset { deg10_m025, deg30_m050, deg60_m200 };

constexpr ThresholdPreset kAllPresets[] = {ThresholdPreset::deg10_m025,
                                           ThresholdPreset::deg30_m050,
                                           ThresholdPreset::deg60_m200};

AlignmentParams preset_params(ThresholdPreset preset);
std::string preset_name(ThresholdPreset preset);  // e.g. "30deg0.5m"
ThresholdPreset preset_from_name(const std::string& name);

struct PresenceStats {
  std::string object_id;
  std::optional<double> eps_present;  // absent when no present-labeled runs exist
  double eps_absent = 0.0;
  ThresholdPreset preset = ThresholdPreset::deg30_m050;
  int n_train_present = 0;
  int n_train_absent = 0;
};

enum class Verdict { present, absent };
enum class DecisionRule { two_sided, fallback };

struct PresenceDecision {
  std::string object_id;
  double epsilon_observed = 0.0;
  Verdict verdict = Verdict::absent;
  DecisionRule rule_used = DecisionRule::two_sided;
};

struct TrainingRun {
  std::string object_id;
  std::string scene_id;
  double epsilon = 0.0;
  bool present = false;
};

struct MissingAbsentDataError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trains per-object medians. Lower-median convention for even counts.
/// Throws MissingAbsentDataError if any object has zero absent-labeled runs.
std::map<std::string, PresenceStats> train_stats(const std::vector<TrainingRun>& runs,
                                                 ThresholdPreset preset);

/// Two-sided rule when eps_present exists (exact tie -> absent), strict
/// fallback epsilon > eps_absent otherwise.
PresenceDecision classify(double epsilon, const PresenceStats& stats);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = true;  // false when TP+FP = 0 (value reported as 0)
  bool recall_defined = true;     // false when TP+FN = 0
  int tp = 0, fp = 0, tn = 0, fn = 0;
  /// Expected precision of random guessing = prevalence of positives.
  double random_guess_precision = 0.0;
};

struct LabeledDecision {
  PresenceDecision decision;
  bool truth_present = false;
  std::string scene_id;
};

PrecisionRecall precision_recall(const std::vector<LabeledDecision>& decisions);
std::map<std::string, PrecisionRecall> precision_recall_per_scene(
    const std::vector<LabeledDecision>& decisions);

}  // namespace poseattack
