// Synthetic scene and trajectory generation: placed object instances with
// ground-truth transforms, attacker-side object models, and orbit-style
// query trajectories. Stands in for real capture data so the attack and
// defense can be evaluated quantitatively.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poseattack/alignment.hpp"
#include "poseattack/geometry.hpp"

namespace poseattack {

struct ObjectClass {
  std::string class_id;
  Eigen::Vector3d extent = Eigen::Vector3d::Ones();  // bounding box, meters
  std::uint64_t appearance_seed = 0;
};

struct PlacedInstance {
  std::string instance_id;
  std::string class_id;
  SimTransform placement;   // object local frame -> scene frame, scale 1
  double similarity = 1.0;  // attacker-model vs scene-instance match quality
};

struct SceneSpec {
  std::string scene_id;
  Aabb bounds;
  std::vector<PlacedInstance> instances;
  std::uint64_t rng_seed = 0;

  const PlacedInstance* find_instance(const std::string& instance_id) const;
};

struct ObjectModel {
  std::string class_id;
  PoseSet local_poses;  // frame_label = local, object centered at origin
  bool metric_scale_known = true;
};

/// Enforces the model contract: >= 8 poses, centers within 5 extents of
/// the origin. Throws std::invalid_argument on violation.
void validate(const ObjectModel& model, const ObjectClass& cls);

struct SceneGenConfig {
  std::string scene_id;
  Aabb bounds;
  struct Item {
    ObjectClass object;
    double similarity = 1.0;
  };
  std::vector<Item> items;
  std::uint64_t rng_seed = 0;
  double placement_margin_m = 0.05;  // minimum gap between instance boxes
};

struct PlacementOverflowError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Places every item upright (uniform yaw) by rejection sampling so the
/// instances' world-frame boxes are pairwise disjoint (IoU = 0).
/// Deterministic for a fixed seed. Throws PlacementOverflowError after
/// 10000 rejections.
SceneSpec generate_scene(const SceneGenConfig& config);

/// World-frame box occupied by an instance of the class under a placement.
Aabb instance_bounds(const ObjectClass& cls, const SimTransform& placement);

/// n poses on a noisy orbit around the object origin (ring at 1.5-2.5x the
/// largest extent component, jittered height and look-at), temporally
/// ordered ids, every optical axis passing within 0.2 extents of the
/// origin. Requires n >= 2.
PoseSet generate_query_trajectory(const ObjectClass& cls, int n, Rng& rng);

ObjectModel make_object_model(const ObjectClass& cls, int n_poses, Rng& rng);

/// World-to-camera pose at `center` looking toward `target` (+z optical
/// axis, world z as up hint).
Pose look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

}  // namespace poseattack
