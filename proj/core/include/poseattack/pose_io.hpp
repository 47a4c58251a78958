// JSON serialization shared by every file format and wire message:
// poses as {"q":[w,x,y,z],"t":[x,y,z]} with the quaternion unit and
// canonical (w >= 0), pose sets as line-delimited {"image_id","q","t"}.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poseattack/alignment.hpp"
#include "poseattack/geometry.hpp"

namespace poseattack {

using Json = nlohmann::json;

Json to_json(const Pose& p);
Pose pose_from_json(const Json& j);

Json to_json(const SimTransform& t);
SimTransform sim_transform_from_json(const Json& j);

Json to_json(const Aabb& box);
Aabb aabb_from_json(const Json& j);

Json to_json(const AlignmentResult& r);

std::string pose_set_to_jsonl(const PoseSet& set);
PoseSet pose_set_from_jsonl(const std::string& text, FrameLabel label);

void save_pose_set(const std::filesystem::path& path, const PoseSet& set);
PoseSet load_pose_set(const std::filesystem::path& path, FrameLabel label);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace poseattack
