#include "poseattack/locserver.hpp"

#include <algorithm>
#include <cmath>

namespace poseattack {

std::string profile_name(ProfileId id) {
  switch (id) {
    case ProfileId::tier_high: return "tier_high";
    case ProfileId::tier_mid: return "tier_mid";
    case ProfileId::tier_low: return "tier_low";
  }
  throw std::invalid_argument("unknown profile id");
}

ProfileId profile_from_name(const std::string& name) {
  if (name == "tier_high") return ProfileId::tier_high;
  if (name == "tier_mid") return ProfileId::tier_mid;
  if (name == "tier_low") return ProfileId::tier_low;
  throw std::invalid_argument("unknown profile name: " + name);
}

std::string status_name(LocalizeStatus s) {
  switch (s) {
    case LocalizeStatus::localized: return "localized";
    case LocalizeStatus::not_localized: return "not_localized";
    case LocalizeStatus::rejected_by_defense: return "rejected_by_defense";
  }
  throw std::invalid_argument("unknown status");
}

double RobustnessProfile::success_probability(double similarity) const {
  if (!(similarity >= 0.0 && similarity <= 1.0))
    throw std::invalid_argument("similarity outside [0, 1]");
  return base_success * std::pow(similarity, similarity_exponent);
}

namespace {

RobustnessProfile make_tier(ProfileId id) {
  RobustnessProfile p;
  p.profile_id = id;
  switch (id) {
    case ProfileId::tier_high:
      p.base_success = 0.95;
      p.similarity_exponent = 1.5;
      p.noise = {1.5, 0.04, 0.15, 0};
      p.cross_class_confusion = 0.005;
      break;
    case ProfileId::tier_mid:
      p.base_success = 0.85;
      p.similarity_exponent = 2.0;
      p.noise = {3.0, 0.08, 0.25, 0};
      p.cross_class_confusion = 0.02;
      break;
    case ProfileId::tier_low:
      p.base_success = 0.70;
      p.similarity_exponent = 2.7;
      p.noise = {6.0, 0.15, 0.40, 0};
      p.cross_class_confusion = 0.05;
      break;
  }
  return p;
}

}  // namespace

RobustnessProfile profile_preset(ProfileId id) {
  // The tier family must stay ordered in success at every similarity.
  const RobustnessProfile high = make_tier(ProfileId::tier_high);
  const RobustnessProfile mid = make_tier(ProfileId::tier_mid);
  const RobustnessProfile low = make_tier(ProfileId::tier_low);
  for (int i = 0; i <= 20; ++i) {
    const double s = i / 20.0;
    if (high.success_probability(s) < mid.success_probability(s) ||
        mid.success_probability(s) < low.success_probability(s))
      throw std::logic_error("robustness tiers are not success-ordered");
  }
  return make_tier(id);
}

namespace {

struct MatchOutcome {
  bool is_room = false;
  const PlacedInstance* instance = nullptr;  // null for room queries
  double similarity = 0.0;
};

// Candidate selection plus the cross-class confusion roll. Consumes a fixed
// number of draws per branch so localize and histogram synthesis agree on
// the match when run from the same rng state.
std::optional<MatchOutcome> match_query(const LocalizeRequest& req, const SceneSpec& scene,
                                        const RobustnessProfile& profile, Rng& rng) {
  if (req.surrogate.class_id == kRoomClassId) {
    MatchOutcome m;
    m.is_room = true;
    m.similarity = profile.room_similarity;
    return m;
  }

  const PlacedInstance* best = nullptr;
  for (const auto& inst : scene.instances) {
    if (inst.class_id != req.surrogate.class_id) continue;
    if (!best || inst.similarity > best->similarity ||
        (inst.similarity == best->similarity && inst.instance_id < best->instance_id))
      best = &inst;
  }
  const double best_sim = best ? best->similarity : 0.0;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < profile.cross_class_confusion * (1.0 - best_sim)) {
    std::vector<const PlacedInstance*> others;
    for (const auto& inst : scene.instances)
      if (&inst != best) others.push_back(&inst);
    if (!others.empty()) {
      std::uniform_int_distribution<size_t> pick(0, others.size() - 1);
      best = others[pick(rng)];
    }
  }
  if (!best) return std::nullopt;

  MatchOutcome m;
  m.instance = best;
  m.similarity = best->similarity;
  return m;
}

NoiseSpec scaled_noise(const NoiseSpec& noise, double similarity) {
  NoiseSpec out = noise;
  const double f = 2.0 - similarity;  // less similar objects localize less accurately
  out.sigma_rot_deg *= f;
  out.sigma_trans_m *= f;
  return out;
}

LocalizeResponse localize_matched(const LocalizeRequest& req, const SceneSpec& scene,
                                  const RobustnessProfile& profile,
                                  const std::optional<MatchOutcome>& match, Rng& rng) {
  LocalizeResponse resp;
  resp.query_id = req.query_id;
  if (!match.has_value()) return resp;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) >= profile.success_probability(match->similarity)) return resp;

  const Pose ground_truth = match->is_room
                                ? req.surrogate.local_pose
                                : apply_transform(match->instance->placement, req.surrogate.local_pose);
  resp.status = LocalizeStatus::localized;
  resp.pose = perturb(ground_truth, scaled_noise(profile.noise, match->similarity), scene.bounds, rng);
  return resp;
}

int uniform_count(Rng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

std::vector<const PlacedInstance*> visible_from(const SceneSpec& scene, const Eigen::Vector3d& p,
                                                double radius, const PlacedInstance* exclude) {
  std::vector<const PlacedInstance*> out;
  for (const auto& inst : scene.instances) {
    if (&inst == exclude) continue;
    if ((inst.placement.translation - p).norm() <= radius) out.push_back(&inst);
  }
  return out;
}

std::map<std::string, int> histogram_for_match(const LocalizeRequest& req, const SceneSpec& scene,
                                               const RobustnessProfile& profile,
                                               const MatchOutcome& match, Rng& rng) {
  const HistogramModel& hm = profile.histogram;
  std::map<std::string, int> hist;
  auto add = [&hist](const std::string& id, int count) {
    if (count > 0) hist[id] += count;
  };

  if (match.is_room) {
    const Eigen::Vector3d camera = req.surrogate.local_pose.camera_center();
    const auto visible = visible_from(scene, camera, hm.visibility_radius_m, nullptr);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool focused = !visible.empty() && u(rng) < hm.genuine_focus_prob;
    if (focused) {
      // Genuine user zooming into a single object: looks like an attack query.
      std::uniform_int_distribution<size_t> pick(0, visible.size() - 1);
      const PlacedInstance* target = visible[pick(rng)];
      const int dominant = uniform_count(rng, hm.dominant_lo, hm.dominant_hi);
      add(target->instance_id, dominant);
      for (const auto* inst : visible)
        if (inst != target)
          add(inst->instance_id,
              uniform_count(rng, 0, static_cast<int>(hm.neighbor_frac * dominant)));
      if (hm.include_background) {
        add(kFloorId, uniform_count(rng, 0, static_cast<int>(hm.background_frac * dominant)));
        add(kWallsId, uniform_count(rng, 0, static_cast<int>(hm.background_frac * dominant)));
      }
    } else {
      for (const auto* inst : visible)
        add(inst->instance_id, uniform_count(rng, hm.genuine_lo, hm.genuine_hi));
      if (hm.include_background) {
        add(kFloorId, uniform_count(rng, hm.genuine_lo, hm.genuine_hi));
        add(kWallsId, uniform_count(rng, hm.genuine_lo, hm.genuine_hi));
      }
    }
    return hist;
  }

  // Single-object query: dominant count on the matched instance, small
  // counts on whatever is partially visible around it.
  const int dominant = std::max(1, static_cast<int>(std::lround(
                                       uniform_count(rng, hm.dominant_lo, hm.dominant_hi) *
                                       (0.5 + 0.5 * match.similarity))));
  add(match.instance->instance_id, dominant);
  const auto visible = visible_from(scene, match.instance->placement.translation,
                                    hm.visibility_radius_m, match.instance);
  for (const auto* inst : visible)
    add(inst->instance_id, uniform_count(rng, 0, static_cast<int>(hm.neighbor_frac * dominant)));
  if (hm.include_background) {
    add(kFloorId, uniform_count(rng, 0, static_cast<int>(hm.background_frac * dominant)));
    add(kWallsId, uniform_count(rng, 0, static_cast<int>(hm.background_frac * dominant)));
  }
  return hist;
}

}  // namespace

LocalizeResponse localize(const LocalizeRequest& req, const SceneSpec& scene,
                          const RobustnessProfile& profile, Rng& rng) {
  const auto match = match_query(req, scene, profile, rng);
  return localize_matched(req, scene, profile, match, rng);
}

std::map<std::string, int> synth_inlier_histogram(const LocalizeRequest& req,
                                                  const SceneSpec& scene,
                                                  const RobustnessProfile& profile, Rng& rng) {
  const auto match = match_query(req, scene, profile, rng);
  if (!match.has_value())
    throw std::invalid_argument("synth_inlier_histogram requires a localizable query");
  return histogram_for_match(req, scene, profile, *match, rng);
}

int defense_support_count(const std::map<std::string, int>& hist, double fraction_x) {
  if (hist.empty()) throw std::invalid_argument("defense filter needs a nonempty histogram");
  int max_count = 0;
  for (const auto& [id, count] : hist) max_count = std::max(max_count, count);
  int k = 0;
  for (const auto& [id, count] : hist)
    if (static_cast<double>(count) >= fraction_x * max_count) ++k;
  return k;
}

DefenseVerdict defense_filter(const std::map<std::string, int>& hist, const DefenseConfig& cfg) {
  if (!(cfg.fraction_x > 0.0 && cfg.fraction_x <= 1.0))
    throw std::invalid_argument("defense fraction_x must be in (0, 1]");
  if (cfg.min_objects < 1) throw std::invalid_argument("defense min_objects must be >= 1");
  return defense_support_count(hist, cfg.fraction_x) < cfg.min_objects ? DefenseVerdict::reject
                                                                       : DefenseVerdict::accept;
}

LocalizeResponse handle_query(const ServerModel& model, const LocalizeRequest& req) {
  Rng rng(derive_seed(model.seed, {req.session_id, req.query_id}));
  const auto match = match_query(req, model.scene, model.profile, rng);
  LocalizeResponse resp = localize_matched(req, model.scene, model.profile, match, rng);
  if (resp.status != LocalizeStatus::localized) return resp;

  if (model.defense.enabled || model.defense.audit) {
    const auto hist = histogram_for_match(req, model.scene, model.profile, *match, rng);
    if (model.defense.audit) resp.diagnostics = hist;
    // An empty histogram (nothing visible at all) cannot clear any filter.
    if (model.defense.enabled &&
        (hist.empty() || defense_filter(hist, model.defense) == DefenseVerdict::reject)) {
      resp.status = LocalizeStatus::rejected_by_defense;
      resp.pose.reset();
      return resp;
    }
  }
  if (model.scale_withheld()) resp.pose->translation *= model.withheld_scale;
  return resp;
}

}  // namespace poseattack
