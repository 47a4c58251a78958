// Attack orchestration: query the localization service with every pose of
// each object model, align the returned poses to the local ones, classify
// presence from the inlier ratio, and assemble a scene reconstruction.
// Responses are logged verbatim before any processing so every reported
// number can be recomputed offline from the logs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poseattack/classifier.hpp"
#include "poseattack/scenegen.hpp"
#include "poseattack/wire.hpp"

namespace poseattack {

struct PlacementError {
  double rot_deg = 0.0;
  double trans_m = 0.0;
  double scale_ratio = 1.0;
};

/// Rotation angle of R_est * R_gt^T, displacement of the object origin,
/// and s_est / s_gt.
PlacementError placement_error(const SimTransform& est, const SimTransform& gt);

enum class AttackMode { rigid, sim3, auto_detect };

std::string attack_mode_name(AttackMode mode);

struct AttackObject {
  ObjectModel model;
  std::optional<AlignmentParams> params_override;  // defaults to the plan preset
};

struct AttackPlan {
  std::string endpoint;  // host:port, used by the socket-backed overload
  std::vector<AttackObject> objects;
  ThresholdPreset preset = ThresholdPreset::deg30_m050;
  AttackMode mode = AttackMode::auto_detect;  // auto: sim3 iff the server withholds scale
  std::optional<std::map<std::string, PresenceStats>> stats;
  int ransac_max_iters = 2000;
  std::uint64_t rng_seed = 0;
  std::filesystem::path log_dir;  // empty: keep logs in memory only
};

enum class ObjectVerdict { present, absent, unclassified };

std::string verdict_name(ObjectVerdict v);

struct ObjectReport {
  std::string object_id;
  ObjectVerdict verdict = ObjectVerdict::unclassified;
  std::optional<DecisionRule> rule;
  double epsilon = 0.0;
  int n_queries = 0;
  int n_localized = 0;
  double localization_rate = 0.0;
  std::optional<SimTransform> placement;       // absent verdicts carry no placement
  std::optional<AlignmentResult> alignment;    // full result, audit
  std::optional<PlacementError> error_vs_gt;   // filled by annotate_with_ground_truth
  bool insufficient = false;  // too few localized responses to align
  std::filesystem::path log_path;
  PoseSet server_poses;  // localized responses, scene frame
};

struct SceneReconstruction {
  std::string scene_id;
  bool scale_withheld = false;
  AttackMode mode_used = AttackMode::rigid;
  ThresholdPreset preset = ThresholdPreset::deg30_m050;
  std::map<std::string, ObjectReport> objects;
  std::uint64_t total_requests = 0;
};

/// Transport abstraction so attacks run identically over a socket or
/// in-process against a ServerModel.
class QueryChannel {
 public:
  virtual ~QueryChannel() = default;
  virtual Handshake hello(const std::string& session_id) = 0;
  /// Returns the parsed response and the verbatim response line.
  virtual std::pair<LocalizeResponse, std::string> localize(const LocalizeRequest& req) = 0;
  virtual std::uint64_t request_count() const = 0;
};

class LoopbackChannel final : public QueryChannel {
 public:
  explicit LoopbackChannel(ServerModel model) : model_(std::move(model)) {}
  Handshake hello(const std::string& session_id) override;
  std::pair<LocalizeResponse, std::string> localize(const LocalizeRequest& req) override;
  std::uint64_t request_count() const override { return requests_; }

 private:
  ServerModel model_;
  std::uint64_t requests_ = 0;
};

class TcpChannel final : public QueryChannel {
 public:
  /// Throws ServerUnreachableError when the endpoint cannot be reached.
  explicit TcpChannel(const std::string& endpoint);
  Handshake hello(const std::string& session_id) override;
  std::pair<LocalizeResponse, std::string> localize(const LocalizeRequest& req) override;
  std::uint64_t request_count() const override { return requests_; }

 private:
  WireClient client_;
  std::uint64_t requests_ = 0;
};

/// Runs the full attack over the given channel. Each object is queried in
/// its own session; every local pose is sent exactly once.
SceneReconstruction run_attack(const AttackPlan& plan, QueryChannel& channel);
/// Socket-backed convenience overload targeting plan.endpoint.
SceneReconstruction run_attack(const AttackPlan& plan);

/// Fills error_vs_gt for every placed object whose class is in the scene.
/// withheld_scale maps the ground truth into the served frame when the
/// server scaled its translations.
void annotate_with_ground_truth(SceneReconstruction& rec, const SceneSpec& scene,
                                double withheld_scale = 1.0);

// ---------------------------------------------------------------------------
// Scenario suites, training and leave-one-scene-out evaluation
// ---------------------------------------------------------------------------

struct ScenarioBundle {
  SceneSpec scene;
  std::vector<ObjectClass> catalog;             // attacker-known classes
  std::map<std::string, ObjectModel> models;    // keyed by class_id
  PoseSet genuine_trajectory;                   // room-level queries, scene frame
};

/// True when the scene contains an instance of the class.
bool scene_contains(const SceneSpec& scene, const std::string& class_id);

struct SuiteConfig {
  std::uint64_t seed = 7;
  int n_scenes = 7;
  int queries_per_object = 24;
  int genuine_queries = 60;
  double default_similarity = 0.92;
  std::optional<double> similarity_override;  // force every instance's similarity
};

/// Default seven-scene suite over a ten-class catalog; each scene holds a
/// subset of classes so presence/absence varies per scene.
std::vector<ScenarioBundle> generate_suite(const SuiteConfig& config);

/// Builds an attack plan over every catalog object of a bundle.
AttackPlan plan_for_bundle(const ScenarioBundle& bundle, ThresholdPreset preset,
                           std::uint64_t seed);

/// Server model serving a bundle's scene.
ServerModel server_for_bundle(const ScenarioBundle& bundle, const RobustnessProfile& profile,
                              std::uint64_t seed, double withheld_scale = 1.0,
                              DefenseConfig defense = {});

/// Runs the attack on every training scenario in-process and trains the
/// per-object epsilon statistics. Throws std::logic_error when a scenario
/// matches exclude_scene_id (evaluation scenes must never be trained on).
std::map<std::string, PresenceStats> train_from_scenarios(
    const std::vector<ScenarioBundle>& scenarios, const RobustnessProfile& profile,
    ThresholdPreset preset, std::uint64_t seed,
    const std::optional<std::string>& exclude_scene_id = std::nullopt);

struct LosoEvaluation {
  std::vector<LabeledDecision> decisions;  // all scenes, all objects
  PrecisionRecall pooled;
  std::map<std::string, PrecisionRecall> per_scene;
};

/// Leave-one-scene-out protocol: each scene is classified with statistics
/// trained on the remaining scenes only. One attack pass per scene is
/// reused across folds.
LosoEvaluation leave_one_scene_out(const std::vector<ScenarioBundle>& scenarios,
                                   const RobustnessProfile& profile, ThresholdPreset preset,
                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Response logs and offline replay
// ---------------------------------------------------------------------------

struct AttackLog {
  std::string object_id;
  std::string session_id;
  AttackMode mode = AttackMode::rigid;
  AlignmentParams params;
  int ransac_max_iters = 2000;
  std::uint64_t ransac_seed = 0;
  bool scale_withheld = false;
  double epsilon = 0.0;  // as reported by the original run
  int n_queries = 0;
  struct Exchange {
    Json request;
    std::string response_raw;
  };
  std::vector<Exchange> exchanges;
};

std::string attack_log_to_jsonl(const AttackLog& log);
AttackLog attack_log_from_jsonl(const std::string& text);

struct ReplayResult {
  std::string object_id;
  double epsilon = 0.0;
  bool insufficient = false;
  std::optional<AlignmentResult> alignment;
  bool matches_logged_epsilon = false;
};

/// Recomputes the alignment from a verbatim response log; epsilon must
/// reproduce the logged value exactly.
ReplayResult replay_attack_log(const AttackLog& log);

struct InsufficientResponsesError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace poseattack
