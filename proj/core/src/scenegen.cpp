#include "poseattack/scenegen.hpp"

#include <cmath>

namespace poseattack {

const PlacedInstance* SceneSpec::find_instance(const std::string& instance_id) const {
  for (const auto& inst : instances)
    if (inst.instance_id == instance_id) return &inst;
  return nullptr;
}

void validate(const ObjectModel& model, const ObjectClass& cls) {
  model.local_poses.validate();
  if (model.local_poses.entries.size() < 8)
    throw std::invalid_argument("object model needs >= 8 poses: " + model.class_id);
  const double limit = 5.0 * cls.extent.maxCoeff();
  for (const auto& e : model.local_poses.entries)
    if (e.pose.camera_center().norm() > limit)
      throw std::invalid_argument("model camera too far from object origin: " + model.class_id);
}

Aabb instance_bounds(const ObjectClass& cls, const SimTransform& placement) {
  // World-frame AABB enclosing the yawed extent box centered at the origin.
  const Eigen::Matrix3d r = placement.rotation.matrix();
  const Eigen::Vector3d half = 0.5 * placement.scale * cls.extent;
  Eigen::Vector3d world_half;
  for (int i = 0; i < 3; ++i)
    world_half[i] = std::abs(r(i, 0)) * half.x() + std::abs(r(i, 1)) * half.y() +
                    std::abs(r(i, 2)) * half.z();
  Aabb box;
  box.min = placement.translation - world_half;
  box.max = placement.translation + world_half;
  return box;
}

SceneSpec generate_scene(const SceneGenConfig& config) {
  SceneSpec scene;
  scene.scene_id = config.scene_id;
  scene.bounds = config.bounds;
  scene.rng_seed = config.rng_seed;

  Rng rng(config.rng_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Aabb> occupied;
  int rejections = 0;

  for (const auto& item : config.items) {
    const ObjectClass& cls = item.object;
    for (;;) {
      SimTransform placement;
      placement.scale = 1.0;
      placement.rotation =
          Rotation::axis_angle(Eigen::Vector3d::UnitZ(), u(rng) * 2.0 * 3.14159265358979323846);
      // Upright on the floor; x/y uniform where the yawed box fits.
      const Aabb probe = instance_bounds(cls, placement);
      const Eigen::Vector3d world_half = 0.5 * probe.extent();
      Eigen::Vector3d pos;
      pos.z() = config.bounds.min.z() + world_half.z();
      bool fits = pos.z() + world_half.z() <= config.bounds.max.z();
      for (int i = 0; fits && i < 2; ++i) {
        const double lo = config.bounds.min[i] + world_half[i];
        const double hi = config.bounds.max[i] - world_half[i];
        if (lo > hi) {
          fits = false;
          break;
        }
        pos[i] = lo + u(rng) * (hi - lo);
      }
      if (!fits) {
        if (++rejections >= 10000)
          throw PlacementOverflowError("placement rejection budget exhausted in scene " +
                                       config.scene_id);
        continue;
      }
      placement.translation = pos;

      Aabb box = instance_bounds(cls, placement);
      box.min.array() -= config.placement_margin_m;
      box.max.array() += config.placement_margin_m;
      bool clear = true;
      for (const auto& other : occupied)
        if (box.intersects(other)) {
          clear = false;
          break;
        }
      if (clear) {
        occupied.push_back(instance_bounds(cls, placement));
        PlacedInstance inst;
        inst.instance_id = "i_" + cls.class_id;
        inst.class_id = cls.class_id;
        inst.placement = placement;
        inst.similarity = item.similarity;
        scene.instances.push_back(std::move(inst));
        break;
      }
      if (++rejections >= 10000)
        throw PlacementOverflowError("placement rejection budget exhausted in scene " +
                                     config.scene_id);
    }
  }
  return scene;
}

Pose look_at_pose(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  Eigen::Vector3d forward = target - center;
  if (forward.norm() < 1e-12) forward = Eigen::Vector3d::UnitX();
  forward.normalize();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right).normalized();

  Eigen::Matrix3d r;  // rows: camera x (right), y (down), z (forward)
  r.row(0) = right;
  r.row(1) = down;
  r.row(2) = forward;
  Pose p;
  p.rotation = Rotation(r);
  p.translation = -(p.rotation * center);
  return p;
}

PoseSet generate_query_trajectory(const ObjectClass& cls, int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("query trajectory needs n >= 2");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double max_extent = cls.extent.maxCoeff();

  PoseSet set;
  set.frame_label = FrameLabel::local;
  constexpr double kTau = 2.0 * 3.14159265358979323846;
  for (int k = 0; k < n; ++k) {
    const double radius = (1.5 + u(rng)) * max_extent;
    const double theta = kTau * (static_cast<double>(k) / n) + 0.1 * (u(rng) - 0.5);
    const double height = (0.4 + 0.8 * u(rng)) * cls.extent.z();
    const Eigen::Vector3d center(radius * std::cos(theta), radius * std::sin(theta), height);
    // Look-at jitter stays well inside the 0.2-extent optical-axis bound.
    const Eigen::Vector3d target = 0.05 * max_extent * random_unit_vector(rng) * u(rng);

    char image_id[16];
    std::snprintf(image_id, sizeof(image_id), "q%03d", k);
    set.entries.push_back({image_id, look_at_pose(center, target)});
  }
  return set;
}

ObjectModel make_object_model(const ObjectClass& cls, int n_poses, Rng& rng) {
  ObjectModel model;
  model.class_id = cls.class_id;
  model.local_poses = generate_query_trajectory(cls, n_poses, rng);
  model.metric_scale_known = true;
  validate(model, cls);
  return model;
}

}  // namespace poseattack
