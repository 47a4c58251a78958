#include "poseattack/report.hpp"

#include <algorithm>
#include <sstream>

#include "poseattack/seeds.hpp"

namespace poseattack {

Json to_json(const ObjectClass& cls) {
  return Json{{"class_id", cls.class_id},
              {"extent", {cls.extent.x(), cls.extent.y(), cls.extent.z()}},
              {"appearance_seed", cls.appearance_seed}};
}

ObjectClass object_class_from_json(const Json& j) {
  ObjectClass cls;
  cls.class_id = j.at("class_id").get<std::string>();
  const auto& e = j.at("extent");
  cls.extent = Eigen::Vector3d(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
  cls.appearance_seed = j.at("appearance_seed").get<std::uint64_t>();
  return cls;
}

Json to_json(const SceneSpec& scene) {
  Json instances = Json::array();
  for (const auto& inst : scene.instances)
    instances.push_back({{"instance_id", inst.instance_id},
                         {"class_id", inst.class_id},
                         {"placement", to_json(inst.placement)},
                         {"similarity", inst.similarity}});
  return Json{{"scene_id", scene.scene_id},
              {"bounds", to_json(scene.bounds)},
              {"rng_seed", scene.rng_seed},
              {"instances", instances}};
}

SceneSpec scene_spec_from_json(const Json& j) {
  SceneSpec scene;
  scene.scene_id = j.at("scene_id").get<std::string>();
  scene.bounds = aabb_from_json(j.at("bounds"));
  scene.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& inst_json : j.at("instances")) {
    PlacedInstance inst;
    inst.instance_id = inst_json.at("instance_id").get<std::string>();
    inst.class_id = inst_json.at("class_id").get<std::string>();
    inst.placement = sim_transform_from_json(inst_json.at("placement"));
    inst.similarity = inst_json.at("similarity").get<double>();
    scene.instances.push_back(std::move(inst));
  }
  return scene;
}

void save_bundle(const std::filesystem::path& dir, const ScenarioBundle& bundle) {
  std::filesystem::create_directories(dir / "models");
  Json catalog = Json::array();
  for (const auto& cls : bundle.catalog) catalog.push_back(to_json(cls));
  Json scene_json{{"scene", to_json(bundle.scene)}, {"catalog", catalog}};
  write_text_file(dir / "scene.json", scene_json.dump(2) + "\n");
  save_pose_set(dir / "genuine.jsonl", bundle.genuine_trajectory);
  for (const auto& [class_id, model] : bundle.models)
    save_pose_set(dir / "models" / (class_id + ".jsonl"), model.local_poses);
}

ScenarioBundle load_bundle(const std::filesystem::path& dir) {
  ScenarioBundle bundle;
  const Json scene_json = Json::parse(read_text_file(dir / "scene.json"));
  bundle.scene = scene_spec_from_json(scene_json.at("scene"));
  for (const auto& cls_json : scene_json.at("catalog"))
    bundle.catalog.push_back(object_class_from_json(cls_json));
  bundle.genuine_trajectory = load_pose_set(dir / "genuine.jsonl", FrameLabel::scene);
  for (const auto& cls : bundle.catalog) {
    ObjectModel model;
    model.class_id = cls.class_id;
    model.local_poses = load_pose_set(dir / "models" / (cls.class_id + ".jsonl"),
                                      FrameLabel::local);
    validate(model, cls);
    bundle.models.emplace(cls.class_id, std::move(model));
  }
  return bundle;
}

void save_suite(const std::filesystem::path& dir, const std::vector<ScenarioBundle>& bundles) {
  std::filesystem::create_directories(dir);
  Json scenes = Json::array();
  for (const auto& bundle : bundles) {
    scenes.push_back(bundle.scene.scene_id);
    save_bundle(dir / bundle.scene.scene_id, bundle);
  }
  write_text_file(dir / "suite.json", Json{{"scenes", scenes}}.dump(2) + "\n");
}

std::vector<ScenarioBundle> load_suite(const std::filesystem::path& dir) {
  const Json suite = Json::parse(read_text_file(dir / "suite.json"));
  std::vector<ScenarioBundle> bundles;
  for (const auto& scene_id : suite.at("scenes"))
    bundles.push_back(load_bundle(dir / scene_id.get<std::string>()));
  return bundles;
}

void save_stats(const std::filesystem::path& path, const StatsTable& stats) {
  std::ostringstream os;
  for (const auto& [preset, by_object] : stats) {
    for (const auto& [object_id, s] : by_object) {
      Json j{{"object_id", object_id},
             {"preset", preset_name(preset)},
             {"eps_absent", s.eps_absent},
             {"n_train_present", s.n_train_present},
             {"n_train_absent", s.n_train_absent}};
      if (s.eps_present) j["eps_present"] = *s.eps_present;
      os << j.dump() << "\n";
    }
  }
  write_text_file(path, os.str());
}

StatsTable load_stats(const std::filesystem::path& path) {
  StatsTable stats;
  std::istringstream is(read_text_file(path));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    PresenceStats s;
    s.object_id = j.at("object_id").get<std::string>();
    s.preset = preset_from_name(j.at("preset").get<std::string>());
    s.eps_absent = j.at("eps_absent").get<double>();
    s.n_train_present = j.at("n_train_present").get<int>();
    s.n_train_absent = j.at("n_train_absent").get<int>();
    if (j.contains("eps_present")) s.eps_present = j["eps_present"].get<double>();
    stats[s.preset].emplace(s.object_id, std::move(s));
  }
  return stats;
}

Json to_json(const SceneReconstruction& rec) {
  Json objects = Json::array();
  for (const auto& [object_id, r] : rec.objects) {
    Json o{{"object_id", object_id},
           {"verdict", verdict_name(r.verdict)},
           {"epsilon", r.epsilon},
           {"n_queries", r.n_queries},
           {"n_localized", r.n_localized},
           {"localization_rate", r.localization_rate},
           {"insufficient", r.insufficient}};
    if (r.rule)
      o["rule"] = *r.rule == DecisionRule::two_sided ? "two_sided" : "fallback";
    if (r.placement) o["placement"] = to_json(*r.placement);
    if (r.alignment) o["alignment"] = to_json(*r.alignment);
    if (r.error_vs_gt)
      o["error_vs_gt"] = Json{{"rot_deg", r.error_vs_gt->rot_deg},
                              {"trans_m", r.error_vs_gt->trans_m},
                              {"scale_ratio", r.error_vs_gt->scale_ratio}};
    if (!r.log_path.empty()) o["log"] = r.log_path.string();
    objects.push_back(std::move(o));
  }
  return Json{{"scene_id", rec.scene_id},
              {"scale_withheld", rec.scale_withheld},
              {"mode", attack_mode_name(rec.mode_used)},
              {"preset", preset_name(rec.preset)},
              {"total_requests", rec.total_requests},
              {"objects", objects}};
}

DefenseSweep run_defense_sweep(const ScenarioBundle& bundle, const RobustnessProfile& profile,
                               double fraction_x, int min_objects_lo, int min_objects_hi,
                               std::uint64_t seed) {
  if (!(fraction_x > 0.0 && fraction_x <= 1.0))
    throw std::invalid_argument("fraction_x must be in (0, 1]");
  if (min_objects_lo < 1 || min_objects_hi < min_objects_lo)
    throw std::invalid_argument("bad min_objects range");

  struct Scripted {
    LocalizeRequest req;
    bool genuine = false;
  };
  std::vector<Scripted> script;
  for (const auto& entry : bundle.genuine_trajectory.entries) {
    LocalizeRequest req;
    req.session_id = "sweep/genuine";
    req.query_id = entry.image_id;
    req.surrogate.class_id = kRoomClassId;
    req.surrogate.local_pose = entry.pose;
    script.push_back({req, true});
  }
  for (const auto& [class_id, model] : bundle.models) {
    if (!scene_contains(bundle.scene, class_id)) continue;
    for (const auto& entry : model.local_poses.entries) {
      LocalizeRequest req;
      req.session_id = "sweep/malicious/" + class_id;
      req.query_id = entry.image_id;
      req.surrogate.class_id = class_id;
      req.surrogate.appearance_seed = fnv1a64(class_id);
      req.surrogate.local_pose = entry.pose;
      script.push_back({req, false});
    }
  }

  // One support count per query that localizes; the sweep then only counts
  // thresholds against these fixed values.
  std::vector<std::pair<int, bool>> supports;  // (k, genuine)
  for (const auto& s : script) {
    const std::uint64_t q_seed = derive_seed(seed, {s.req.session_id, s.req.query_id});
    Rng loc_rng(q_seed);
    const LocalizeResponse resp = localize(s.req, bundle.scene, profile, loc_rng);
    if (resp.status != LocalizeStatus::localized) continue;
    Rng hist_rng(q_seed);  // same seed: the match roll inside agrees with localize
    const auto hist = synth_inlier_histogram(s.req, bundle.scene, profile, hist_rng);
    const int k = hist.empty() ? 0 : defense_support_count(hist, fraction_x);
    supports.emplace_back(k, s.genuine);
  }

  DefenseSweep sweep;
  sweep.fraction_x = fraction_x;
  for (int m = min_objects_lo; m <= min_objects_hi; ++m) {
    DefenseSweepRow row;
    row.min_objects = m;
    for (const auto& [k, genuine] : supports) {
      if (genuine) {
        ++row.genuine_total;
        if (k >= m) ++row.genuine_accepted;
      } else {
        ++row.malicious_total;
        if (k >= m) ++row.malicious_accepted;
      }
    }
    row.genuine_accept_rate =
        row.genuine_total ? static_cast<double>(row.genuine_accepted) / row.genuine_total : 0.0;
    row.malicious_accept_rate =
        row.malicious_total ? static_cast<double>(row.malicious_accepted) / row.malicious_total
                            : 0.0;
    sweep.rows.push_back(row);
  }
  return sweep;
}

std::string sweep_to_csv(const DefenseSweep& sweep) {
  std::ostringstream os;
  os << "min_objects,genuine_total,genuine_accepted,genuine_accept_rate,"
        "malicious_total,malicious_accepted,malicious_accept_rate\n";
  for (const auto& r : sweep.rows)
    os << r.min_objects << "," << r.genuine_total << "," << r.genuine_accepted << ","
       << r.genuine_accept_rate << "," << r.malicious_total << "," << r.malicious_accepted << ","
       << r.malicious_accept_rate << "\n";
  return os.str();
}

Json to_json(const DefenseSweep& sweep) {
  Json rows = Json::array();
  for (const auto& r : sweep.rows)
    rows.push_back({{"min_objects", r.min_objects},
                    {"genuine_total", r.genuine_total},
                    {"genuine_accepted", r.genuine_accepted},
                    {"genuine_accept_rate", r.genuine_accept_rate},
                    {"malicious_total", r.malicious_total},
                    {"malicious_accepted", r.malicious_accepted},
                    {"malicious_accept_rate", r.malicious_accept_rate}});
  return Json{{"fraction_x", sweep.fraction_x}, {"rows", rows}};
}

Json to_json(const PrecisionRecall& pr) {
  return Json{{"precision", pr.precision},
              {"recall", pr.recall},
              {"precision_defined", pr.precision_defined},
              {"recall_defined", pr.recall_defined},
              {"tp", pr.tp},
              {"fp", pr.fp},
              {"tn", pr.tn},
              {"fn", pr.fn},
              {"random_guess_precision", pr.random_guess_precision}};
}

std::string pr_report_to_csv(const PrReport& report) {
  std::ostringstream os;
  os << "scene";
  for (ThresholdPreset p : kAllPresets) os << ",P_" << preset_name(p) << ",R_" << preset_name(p);
  os << "\n";
  auto write_row = [&os](const std::string& name,
                         const std::map<ThresholdPreset, PrecisionRecall>& cells) {
    os << name;
    for (ThresholdPreset p : kAllPresets) {
      const auto it = cells.find(p);
      if (it == cells.end()) {
        os << ",,";
      } else {
        os << "," << it->second.precision << "," << it->second.recall;
      }
    }
    os << "\n";
  };
  for (const auto& [scene_id, cells] : report.per_scene) write_row(scene_id, cells);
  write_row("pooled", report.pooled);
  return os.str();
}

Json to_json(const PrReport& report) {
  Json per_scene = Json::object();
  for (const auto& [scene_id, cells] : report.per_scene) {
    Json row = Json::object();
    for (const auto& [preset, pr] : cells) row[preset_name(preset)] = to_json(pr);
    per_scene[scene_id] = std::move(row);
  }
  Json pooled = Json::object();
  for (const auto& [preset, pr] : report.pooled) pooled[preset_name(preset)] = to_json(pr);
  return Json{{"per_scene", per_scene}, {"pooled", pooled}};
}

std::string config_hash_hex(const Json& config) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

Json to_json(const RunManifest& manifest) {
  return Json{{"command", manifest.command},
              {"argv", manifest.argv},
              {"config", manifest.config},
              {"config_hash", manifest.config_hash},
              {"seed", manifest.seed},
              {"artifacts", manifest.artifacts},
              {"version", manifest.version},
              {"wall_clock_s", manifest.wall_clock_s}};
}

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  write_text_file(path, to_json(manifest).dump(2) + "\n");
}

}  // namespace poseattack
