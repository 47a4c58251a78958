#include "poseattack/pose_io.hpp"

#include <fstream>
#include <sstream>

namespace poseattack {

namespace {

Json vec3_to_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json quat_to_json(const Rotation& r) {
  const Eigen::Quaterniond& q = r.quat();
  return Json::array({q.w(), q.x(), q.y(), q.z()});
}

Rotation quat_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected wxyz quaternion");
  return Rotation(Eigen::Quaterniond(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                                     j[3].get<double>()));
}

}  // namespace

Json to_json(const Pose& p) { return Json{{"q", quat_to_json(p.rotation)}, {"t", vec3_to_json(p.translation)}}; }

Pose pose_from_json(const Json& j) {
  Pose p;
  p.rotation = quat_from_json(j.at("q"));
  p.translation = vec3_from_json(j.at("t"));
  return p;
}

Json to_json(const SimTransform& t) {
  return Json{{"scale", t.scale}, {"q", quat_to_json(t.rotation)}, {"t", vec3_to_json(t.translation)}};
}

SimTransform sim_transform_from_json(const Json& j) {
  SimTransform t;
  t.scale = j.at("scale").get<double>();
  if (!(t.scale > 0.0)) throw std::invalid_argument("transform scale must be > 0");
  t.rotation = quat_from_json(j.at("q"));
  t.translation = vec3_from_json(j.at("t"));
  return t;
}

Json to_json(const Aabb& box) {
  return Json{{"min", vec3_to_json(box.min)}, {"max", vec3_to_json(box.max)}};
}

Aabb aabb_from_json(const Json& j) {
  Aabb box;
  box.min = vec3_from_json(j.at("min"));
  box.max = vec3_from_json(j.at("max"));
  return box;
}

Json to_json(const AlignmentResult& r) {
  Json residuals = Json::array();
  for (const auto& pr : r.per_pair_residuals)
    residuals.push_back({{"image_id", pr.image_id}, {"dr_deg", pr.rot_deg}, {"dt_m", pr.trans_m}});
  Json out{{"transform", to_json(r.transform)},
           {"inlier_ids", r.inlier_ids},
           {"epsilon", r.epsilon},
           {"hypothesis_id", r.hypothesis_id},
           {"n_pairs", r.n_pairs},
           {"per_pair_residuals", residuals}};
  if (!r.hypothesis_id_b.empty()) out["hypothesis_id_b"] = r.hypothesis_id_b;
  return out;
}

std::string pose_set_to_jsonl(const PoseSet& set) {
  std::ostringstream os;
  for (const auto& e : set.entries) {
    Json line = to_json(e.pose);
    line["image_id"] = e.image_id;
    os << line.dump() << "\n";
  }
  return os.str();
}

PoseSet pose_set_from_jsonl(const std::string& text, FrameLabel label) {
  PoseSet set;
  set.frame_label = label;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    set.entries.push_back({j.at("image_id").get<std::string>(), pose_from_json(j)});
  }
  set.validate();
  return set;
}

void save_pose_set(const std::filesystem::path& path, const PoseSet& set) {
  write_text_file(path, pose_set_to_jsonl(set));
}

PoseSet load_pose_set(const std::filesystem::path& path, FrameLabel label) {
  return pose_set_from_jsonl(read_text_file(path), label);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace poseattack
