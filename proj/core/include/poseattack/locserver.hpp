// Simulated localization service model: pose-surrogate queries against a
// scene of placed instances, a tiered robustness/noise model standing in
// for the matcher spectrum of real services, a generative inlier-histogram
// model, and the minimum-visible-objects defense filter.
//
// Everything here is a pure function of (inputs, rng); the wire layer
// derives one RNG per query from (server seed, session_id, query_id) so
// responses are replayable under any session interleaving.

#pragma once

#include <map>
#include <optional>
#include <string>

#include "poseattack/geometry.hpp"
#include "poseattack/scenegen.hpp"
#include "poseattack/seeds.hpp"

namespace poseattack {

/// Pseudo-class used by genuine room-level queries; localizes against the
/// scene frame itself rather than a placed instance.
inline constexpr const char* kRoomClassId = "__room__";
/// Background pseudo-instances included in inlier histograms.
inline constexpr const char* kFloorId = "__floor__";
inline constexpr const char* kWallsId = "__walls__";

enum class ProfileId { tier_high, tier_mid, tier_low };

std::string profile_name(ProfileId id);
ProfileId profile_from_name(const std::string& name);

/// Generative model for per-query inlier histograms.
struct HistogramModel {
  double visibility_radius_m = 3.0;
  int dominant_lo = 80, dominant_hi = 160;   // matched-object count, single-object query
  double neighbor_frac = 0.25;               // visible neighbor counts ~ U(0, frac * dominant)
  double background_frac = 0.2;              // background counts ~ U(0, frac * dominant)
  int genuine_lo = 20, genuine_hi = 120;     // per-visible-instance counts, room query
  double genuine_focus_prob = 0.2;           // room query that zooms into one object
  bool include_background = true;
};

struct RobustnessProfile {
  ProfileId profile_id = ProfileId::tier_high;
  double base_success = 0.95;
  double similarity_exponent = 1.5;
  NoiseSpec noise;
  double cross_class_confusion = 0.005;
  double room_similarity = 0.97;  // effective similarity of room-level queries
  HistogramModel histogram;

  double success_probability(double similarity) const;
};

/// The three built-in tiers, most to least robust. Construction asserts
/// that success probability is ordered tier_high >= tier_mid >= tier_low
/// over a similarity grid.
RobustnessProfile profile_preset(ProfileId id);

struct LocalizeRequest {
  std::string query_id;
  std::string session_id;
  struct Surrogate {
    std::string class_id;
    std::uint64_t appearance_seed = 0;
    Pose local_pose;
  } surrogate;
  int protocol_version = 1;
};

enum class LocalizeStatus { localized, not_localized, rejected_by_defense };

std::string status_name(LocalizeStatus s);

struct LocalizeResponse {
  std::string query_id;
  LocalizeStatus status = LocalizeStatus::not_localized;
  std::optional<Pose> pose;  // scene frame; present iff status == localized
  std::optional<std::map<std::string, int>> diagnostics;  // inlier counts, audit only
};

struct DefenseConfig {
  bool enabled = false;
  double fraction_x = 0.1;  // in (0, 1]
  int min_objects = 1;
  bool audit = false;  // attach inlier histograms to responses
};

/// Matching + success + noise model; no defense, no scale withholding.
/// Deterministic given the rng state.
LocalizeResponse localize(const LocalizeRequest& req, const SceneSpec& scene,
                          const RobustnessProfile& profile, Rng& rng);

/// Draws the per-instance inlier histogram for a query that localized.
/// Single-object queries concentrate on the matched instance with small
/// counts on visible neighbors; room queries spread comparable counts over
/// visible instances. Background pseudo-instances included when enabled.
std::map<std::string, int> synth_inlier_histogram(const LocalizeRequest& req,
                                                  const SceneSpec& scene,
                                                  const RobustnessProfile& profile, Rng& rng);

enum class DefenseVerdict { accept, reject };

/// Rejects when fewer than min_objects instances contribute at least
/// fraction_x of the top instance's inlier count.
DefenseVerdict defense_filter(const std::map<std::string, int>& hist, const DefenseConfig& cfg);

/// Number of instances contributing >= fraction_x of the maximum count.
int defense_support_count(const std::map<std::string, int>& hist, double fraction_x);

/// Full single-scene server state as loaded from config.
struct ServerModel {
  SceneSpec scene;
  RobustnessProfile profile;
  DefenseConfig defense;
  std::uint64_t seed = 0;
  double withheld_scale = 1.0;  // != 1: translations leave scaled, scale undisclosed

  bool scale_withheld() const { return withheld_scale != 1.0; }
};

/// Full pipeline for one query: derive the per-query RNG, localize, apply
/// the defense, then the scale-withholding transform. Pure function of
/// (model, request).
LocalizeResponse handle_query(const ServerModel& model, const LocalizeRequest& req);

}  // namespace poseattack
