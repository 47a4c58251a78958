#include "poseattack/attacker.hpp"

#include <algorithm>
#include <sstream>

#include "poseattack/pose_io.hpp"
#include "poseattack/seeds.hpp"

namespace poseattack {

PlacementError placement_error(const SimTransform& est, const SimTransform& gt) {
  PlacementError e;
  e.rot_deg = rotation_angle_deg(est.rotation * gt.rotation.inverse());
  e.trans_m = (est.translation - gt.translation).norm();
  e.scale_ratio = est.scale / gt.scale;
  return e;
}

std::string attack_mode_name(AttackMode mode) {
  switch (mode) {
    case AttackMode::rigid: return "rigid";
    case AttackMode::sim3: return "sim3";
    case AttackMode::auto_detect: return "auto";
  }
  throw std::invalid_argument("unknown attack mode");
}

std::string verdict_name(ObjectVerdict v) {
  switch (v) {
    case ObjectVerdict::present: return "present";
    case ObjectVerdict::absent: return "absent";
    case ObjectVerdict::unclassified: return "unclassified";
  }
  throw std::invalid_argument("unknown verdict");
}

Handshake LoopbackChannel::hello(const std::string&) {
  Handshake h;
  h.scale_withheld = model_.scale_withheld();
  h.scene_id = model_.scene.scene_id;
  return h;
}

std::pair<LocalizeResponse, std::string> LoopbackChannel::localize(const LocalizeRequest& req) {
  ++requests_;
  LocalizeResponse resp = handle_query(model_, req);
  return {resp, to_json(resp).dump()};
}

TcpChannel::TcpChannel(const std::string& endpoint) {
  const auto [host, port] = parse_endpoint(endpoint);
  client_.connect(host, port);
}

Handshake TcpChannel::hello(const std::string& session_id) { return client_.hello(session_id); }

std::pair<LocalizeResponse, std::string> TcpChannel::localize(const LocalizeRequest& req) {
  ++requests_;
  return client_.localize(req);
}

namespace {

struct AlignmentOutcome {
  bool insufficient = false;
  std::optional<AlignmentResult> result;
};

AlignmentOutcome align_object(const PoseSet& local, const PoseSet& server, AttackMode mode,
                              const AlignmentParams& params, int ransac_max_iters,
                              std::uint64_t ransac_seed) {
  AlignmentOutcome out;
  const size_t min_needed = mode == AttackMode::sim3 ? 2 : 1;
  if (server.entries.size() < min_needed) {
    out.insufficient = true;
    return out;
  }
  if (mode == AttackMode::sim3) {
    Rng rng(ransac_seed);
    out.result = ransac_sim3_alignment(local, server, params, ransac_max_iters, rng);
  } else {
    out.result = best_single_camera_alignment(local, server, params);
  }
  return out;
}

}  // namespace

SceneReconstruction run_attack(const AttackPlan& plan, QueryChannel& channel) {
  SceneReconstruction rec;
  rec.preset = plan.preset;
  const std::uint64_t requests_before = channel.request_count();

  bool first = true;
  for (const AttackObject& obj : plan.objects) {
    const std::string& object_id = obj.model.class_id;
    const std::string session_id = "attack/" + object_id;
    const Handshake handshake = channel.hello(session_id);
    if (first) {
      rec.scene_id = handshake.scene_id;
      rec.scale_withheld = handshake.scale_withheld;
      rec.mode_used = plan.mode == AttackMode::auto_detect
                          ? (handshake.scale_withheld ? AttackMode::sim3 : AttackMode::rigid)
                          : plan.mode;
      first = false;
    }

    ObjectReport report;
    report.object_id = object_id;
    report.n_queries = static_cast<int>(obj.model.local_poses.entries.size());
    report.server_poses.frame_label = FrameLabel::scene;

    AttackLog log;
    log.object_id = object_id;
    log.session_id = session_id;
    log.mode = rec.mode_used;
    log.params = obj.params_override.value_or(preset_params(plan.preset));
    log.ransac_max_iters = plan.ransac_max_iters;
    log.ransac_seed = derive_seed(plan.rng_seed, {"ransac", object_id});
    log.scale_withheld = handshake.scale_withheld;
    log.n_queries = report.n_queries;

    // Each local pose is sent exactly once; responses recorded verbatim
    // before any processing.
    for (const auto& entry : obj.model.local_poses.entries) {
      LocalizeRequest req;
      req.session_id = session_id;
      req.query_id = entry.image_id;
      req.surrogate.class_id = object_id;
      req.surrogate.appearance_seed = fnv1a64(object_id);
      req.surrogate.local_pose = entry.pose;
      auto [resp, raw] = channel.localize(req);
      log.exchanges.push_back({to_json(req), raw});
      if (resp.status == LocalizeStatus::localized)
        report.server_poses.entries.push_back({entry.image_id, *resp.pose});
    }
    report.n_localized = static_cast<int>(report.server_poses.entries.size());
    report.localization_rate =
        report.n_queries > 0 ? static_cast<double>(report.n_localized) / report.n_queries : 0.0;

    const AlignmentOutcome outcome =
        align_object(obj.model.local_poses, report.server_poses, rec.mode_used, log.params,
                     plan.ransac_max_iters, log.ransac_seed);
    report.insufficient = outcome.insufficient;
    report.alignment = outcome.result;
    report.epsilon = outcome.result ? outcome.result->epsilon : 0.0;
    log.epsilon = report.epsilon;

    if (report.insufficient) {
      // Too few responses to form a hypothesis; a trained attacker reads
      // that as absence, an untrained one reports epsilon only.
      report.verdict = plan.stats ? ObjectVerdict::absent : ObjectVerdict::unclassified;
    } else if (plan.stats) {
      auto it = plan.stats->find(object_id);
      if (it == plan.stats->end()) {
        report.verdict = ObjectVerdict::unclassified;
      } else {
        const PresenceDecision d = classify(report.epsilon, it->second);
        report.verdict = d.verdict == Verdict::present ? ObjectVerdict::present
                                                       : ObjectVerdict::absent;
        report.rule = d.rule_used;
      }
    } else {
      report.verdict = ObjectVerdict::unclassified;
    }
    if (report.verdict != ObjectVerdict::absent && outcome.result)
      report.placement = outcome.result->transform;

    if (!plan.log_dir.empty()) {
      std::filesystem::create_directories(plan.log_dir);
      report.log_path = plan.log_dir / (object_id + ".log.jsonl");
      write_text_file(report.log_path, attack_log_to_jsonl(log));
    }
    rec.objects.emplace(object_id, std::move(report));
  }
  rec.total_requests = channel.request_count() - requests_before;
  return rec;
}

SceneReconstruction run_attack(const AttackPlan& plan) {
  TcpChannel channel(plan.endpoint);
  return run_attack(plan, channel);
}

void annotate_with_ground_truth(SceneReconstruction& rec, const SceneSpec& scene,
                                double withheld_scale) {
  SimTransform scale_map;
  scale_map.scale = withheld_scale;
  for (auto& [object_id, report] : rec.objects) {
    if (!report.placement.has_value()) continue;
    const PlacedInstance* match = nullptr;
    for (const auto& inst : scene.instances)
      if (inst.class_id == object_id) match = &inst;
    if (!match) continue;
    const SimTransform gt = withheld_scale != 1.0 ? compose(scale_map, match->placement)
                                                  : match->placement;
    report.error_vs_gt = placement_error(*report.placement, gt);
  }
}

// ---------------------------------------------------------------------------
// Scenario suites
// ---------------------------------------------------------------------------

bool scene_contains(const SceneSpec& scene, const std::string& class_id) {
  for (const auto& inst : scene.instances)
    if (inst.class_id == class_id) return true;
  return false;
}

namespace {

struct CatalogEntry {
  const char* class_id;
  double ex, ey, ez;
};

// Twelve furniture-scale classes; extents in meters.
constexpr CatalogEntry kCatalog[] = {
    {"bed", 2.0, 1.6, 0.55},    {"cabinet", 0.9, 0.45, 1.2}, {"chair", 0.5, 0.5, 0.9},
    {"desk", 1.4, 0.7, 0.75},   {"lamp", 0.35, 0.35, 1.5},   {"mirror", 0.7, 0.1, 1.6},
    {"monitor", 0.6, 0.2, 0.4}, {"plant", 0.4, 0.4, 1.1},    {"rug", 1.6, 1.2, 0.05},
    {"shelf", 0.8, 0.35, 1.8},  {"sofa", 1.9, 0.9, 0.8},     {"table", 1.2, 0.8, 0.75},
};

// Per-scene presence. "mirror" appears in exactly one scene (fallback-rule
// exerciser); "rug" appears nowhere (pure absent class).
const std::map<std::string, std::vector<std::string>> kSceneClasses = {
    {"scene01", {"chair", "table", "sofa", "lamp", "desk"}},
    {"scene02", {"chair", "table", "shelf", "monitor", "plant"}},
    {"scene03", {"sofa", "lamp", "bed", "cabinet", "mirror"}},
    {"scene04", {"chair", "table", "desk", "shelf", "monitor"}},
    {"scene05", {"sofa", "lamp", "bed", "plant", "cabinet"}},
    {"scene06", {"table", "desk", "shelf", "monitor", "cabinet"}},
    {"scene07", {"chair", "sofa", "desk", "bed", "plant"}},
};

ObjectClass catalog_class(const CatalogEntry& e, std::uint64_t seed) {
  ObjectClass cls;
  cls.class_id = e.class_id;
  cls.extent = Eigen::Vector3d(e.ex, e.ey, e.ez);
  cls.appearance_seed = derive_seed(seed, {"appearance", e.class_id});
  return cls;
}

PoseSet generate_genuine_trajectory(const SceneSpec& scene, int n, Rng& rng) {
  PoseSet set;
  set.frame_label = FrameLabel::scene;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Vector3d lo = scene.bounds.min + Eigen::Vector3d(0.5, 0.5, 0.0);
  const Eigen::Vector3d hi = scene.bounds.max - Eigen::Vector3d(0.5, 0.5, 0.0);
  for (int k = 0; k < n; ++k) {
    Eigen::Vector3d center;
    for (int i = 0; i < 2; ++i) center[i] = lo[i] + u(rng) * (hi[i] - lo[i]);
    center.z() = 1.4 + 0.4 * u(rng);  // handheld camera height

    Eigen::Vector3d target;
    if (!scene.instances.empty() && u(rng) < 0.7) {
      std::uniform_int_distribution<size_t> pick(0, scene.instances.size() - 1);
      target = scene.instances[pick(rng)].placement.translation +
               0.3 * random_unit_vector(rng);
    } else {
      target = random_point_in(scene.bounds, rng);
    }
    char image_id[16];
    std::snprintf(image_id, sizeof(image_id), "g%03d", k);
    set.entries.push_back({image_id, look_at_pose(center, target)});
  }
  return set;
}

}  // namespace

std::vector<ScenarioBundle> generate_suite(const SuiteConfig& config) {
  if (config.n_scenes < 1 || config.n_scenes > static_cast<int>(kSceneClasses.size()))
    throw std::invalid_argument("suite supports 1..7 scenes");

  std::vector<ObjectClass> catalog;
  for (const auto& e : kCatalog) catalog.push_back(catalog_class(e, config.seed));

  // One model per class, shared across scenes: the attacker captures each
  // object once and reuses the queries against every scene.
  std::map<std::string, ObjectModel> models;
  for (const auto& cls : catalog) {
    Rng rng(derive_seed(config.seed, {"model", cls.class_id}));
    models.emplace(cls.class_id, make_object_model(cls, config.queries_per_object, rng));
  }

  std::vector<ScenarioBundle> bundles;
  int made = 0;
  for (const auto& [scene_id, class_ids] : kSceneClasses) {
    if (made++ >= config.n_scenes) break;
    SceneGenConfig gen;
    gen.scene_id = scene_id;
    gen.bounds.min = Eigen::Vector3d(0.0, 0.0, 0.0);
    gen.bounds.max = Eigen::Vector3d(7.0, 7.0, 3.0);
    gen.rng_seed = derive_seed(config.seed, {"scene", scene_id});
    for (const auto& class_id : class_ids) {
      const auto it = std::find_if(catalog.begin(), catalog.end(),
                                   [&](const ObjectClass& c) { return c.class_id == class_id; });
      gen.items.push_back(
          {*it, config.similarity_override.value_or(config.default_similarity)});
    }

    ScenarioBundle bundle;
    bundle.scene = generate_scene(gen);
    bundle.catalog = catalog;
    bundle.models = models;
    Rng rng(derive_seed(config.seed, {"genuine", scene_id}));
    bundle.genuine_trajectory = generate_genuine_trajectory(bundle.scene,
                                                            config.genuine_queries, rng);
    bundles.push_back(std::move(bundle));
  }
  return bundles;
}

AttackPlan plan_for_bundle(const ScenarioBundle& bundle, ThresholdPreset preset,
                           std::uint64_t seed) {
  AttackPlan plan;
  plan.preset = preset;
  plan.rng_seed = seed;
  for (const auto& [class_id, model] : bundle.models) plan.objects.push_back({model, std::nullopt});
  return plan;
}

ServerModel server_for_bundle(const ScenarioBundle& bundle, const RobustnessProfile& profile,
                              std::uint64_t seed, double withheld_scale, DefenseConfig defense) {
  ServerModel model;
  model.scene = bundle.scene;
  model.profile = profile;
  model.defense = defense;
  model.seed = derive_seed(seed, {"server", bundle.scene.scene_id});
  model.withheld_scale = withheld_scale;
  return model;
}

namespace {

std::vector<TrainingRun> attack_scenarios(const std::vector<ScenarioBundle>& scenarios,
                                          const RobustnessProfile& profile,
                                          ThresholdPreset preset, std::uint64_t seed) {
  std::vector<TrainingRun> runs;
  for (const auto& bundle : scenarios) {
    LoopbackChannel channel(server_for_bundle(bundle, profile, seed));
    const AttackPlan plan =
        plan_for_bundle(bundle, preset, derive_seed(seed, {"attack", bundle.scene.scene_id}));
    const SceneReconstruction rec = run_attack(plan, channel);
    for (const auto& [object_id, report] : rec.objects)
      runs.push_back({object_id, bundle.scene.scene_id, report.epsilon,
                      scene_contains(bundle.scene, object_id)});
  }
  return runs;
}

}  // namespace

std::map<std::string, PresenceStats> train_from_scenarios(
    const std::vector<ScenarioBundle>& scenarios, const RobustnessProfile& profile,
    ThresholdPreset preset, std::uint64_t seed,
    const std::optional<std::string>& exclude_scene_id) {
  if (scenarios.size() < 2) throw std::invalid_argument("training needs >= 2 scenarios");
  if (exclude_scene_id) {
    for (const auto& bundle : scenarios)
      if (bundle.scene.scene_id == *exclude_scene_id)
        throw std::logic_error("evaluation scene leaked into the training fold: " +
                               *exclude_scene_id);
  }
  return train_stats(attack_scenarios(scenarios, profile, preset, seed), preset);
}

LosoEvaluation leave_one_scene_out(const std::vector<ScenarioBundle>& scenarios,
                                   const RobustnessProfile& profile, ThresholdPreset preset,
                                   std::uint64_t seed) {
  if (scenarios.size() < 2) throw std::invalid_argument("leave-one-out needs >= 2 scenarios");
  const std::vector<TrainingRun> runs = attack_scenarios(scenarios, profile, preset, seed);

  LosoEvaluation eval;
  for (const auto& bundle : scenarios) {
    const std::string& eval_scene = bundle.scene.scene_id;
    std::vector<TrainingRun> folds;
    for (const auto& run : runs)
      if (run.scene_id != eval_scene) folds.push_back(run);
    const auto stats = train_stats(folds, preset);

    for (const auto& run : runs) {
      if (run.scene_id != eval_scene) continue;
      const auto it = stats.find(run.object_id);
      if (it == stats.end()) continue;  // object never seen in training folds
      LabeledDecision d;
      d.decision = classify(run.epsilon, it->second);
      d.truth_present = run.present;
      d.scene_id = eval_scene;
      eval.decisions.push_back(std::move(d));
    }
  }
  eval.pooled = precision_recall(eval.decisions);
  eval.per_scene = precision_recall_per_scene(eval.decisions);
  return eval;
}

// ---------------------------------------------------------------------------
// Logs and replay
// ---------------------------------------------------------------------------

std::string attack_log_to_jsonl(const AttackLog& log) {
  std::ostringstream os;
  os << Json{{"type", "header"},
             {"object_id", log.object_id},
             {"session_id", log.session_id},
             {"mode", attack_mode_name(log.mode)},
             {"delta_r_deg", log.params.delta_r_deg},
             {"delta_t_m", log.params.delta_t_m},
             {"ransac_max_iters", log.ransac_max_iters},
             {"ransac_seed", log.ransac_seed},
             {"scale_withheld", log.scale_withheld},
             {"epsilon", log.epsilon},
             {"n_queries", log.n_queries}}
            .dump()
     << "\n";
  for (const auto& ex : log.exchanges)
    os << Json{{"type", "exchange"}, {"request", ex.request}, {"response_raw", ex.response_raw}}
              .dump()
       << "\n";
  return os.str();
}

AttackLog attack_log_from_jsonl(const std::string& text) {
  AttackLog log;
  std::istringstream is(text);
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      log.object_id = j.at("object_id").get<std::string>();
      log.session_id = j.at("session_id").get<std::string>();
      const std::string mode = j.at("mode").get<std::string>();
      log.mode = mode == "sim3" ? AttackMode::sim3 : AttackMode::rigid;
      log.params.delta_r_deg = j.at("delta_r_deg").get<double>();
      log.params.delta_t_m = j.at("delta_t_m").get<double>();
      log.ransac_max_iters = j.at("ransac_max_iters").get<int>();
      log.ransac_seed = j.at("ransac_seed").get<std::uint64_t>();
      log.scale_withheld = j.at("scale_withheld").get<bool>();
      log.epsilon = j.at("epsilon").get<double>();
      log.n_queries = j.at("n_queries").get<int>();
      have_header = true;
    } else if (type == "exchange") {
      log.exchanges.push_back({j.at("request"), j.at("response_raw").get<std::string>()});
    }
  }
  if (!have_header) throw std::invalid_argument("attack log has no header record");
  return log;
}

ReplayResult replay_attack_log(const AttackLog& log) {
  PoseSet local, server;
  local.frame_label = FrameLabel::local;
  server.frame_label = FrameLabel::scene;
  for (const auto& ex : log.exchanges) {
    const LocalizeRequest req = request_from_json(ex.request);
    local.entries.push_back({req.query_id, req.surrogate.local_pose});
    const Json j = Json::parse(ex.response_raw);
    if (j.contains("status") && j["status"].get<std::string>() == "localized") {
      const LocalizeResponse resp = response_from_json(j);
      server.entries.push_back({req.query_id, *resp.pose});
    }
  }

  ReplayResult out;
  out.object_id = log.object_id;
  const AlignmentOutcome outcome = align_object(local, server, log.mode, log.params,
                                                log.ransac_max_iters, log.ransac_seed);
  out.insufficient = outcome.insufficient;
  out.alignment = outcome.result;
  out.epsilon = outcome.result ? outcome.result->epsilon : 0.0;
  out.matches_logged_epsilon = out.epsilon == log.epsilon;
  return out;
}

}  // namespace poseattack
