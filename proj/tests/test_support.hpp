// Shared helpers for the test suites: random draws and pose comparisons.

#pragma once

#include <random>

#include "poseattack/alignment.hpp"
#include "poseattack/geometry.hpp"

namespace poseattack::testing {

inline Pose random_pose(Rng& rng, double center_radius = 5.0) {
  std::uniform_real_distribution<double> u(-center_radius, center_radius);
  Pose p;
  p.rotation = random_rotation(rng);
  const Eigen::Vector3d center(u(rng), u(rng), u(rng));
  p.translation = -(p.rotation * center);
  return p;
}

inline SimTransform random_rigid_transform(Rng& rng, double radius = 5.0) {
  std::uniform_real_distribution<double> u(-radius, radius);
  SimTransform t;
  t.scale = 1.0;
  t.rotation = random_rotation(rng);
  t.translation = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return t;
}

inline SimTransform random_sim_transform(Rng& rng, double scale_lo = 0.2, double scale_hi = 4.0) {
  SimTransform t = random_rigid_transform(rng);
  std::uniform_real_distribution<double> s(scale_lo, scale_hi);
  t.scale = s(rng);
  return t;
}

/// Geodesic angle between two poses' rotations, degrees.
inline double rotation_gap_deg(const Pose& a, const Pose& b) {
  return rotation_angle_deg(a.rotation * b.rotation.inverse());
}

inline double center_gap_m(const Pose& a, const Pose& b) {
  return (a.camera_center() - b.camera_center()).norm();
}

/// Pose set of n random poses with ids p000, p001, ...
inline PoseSet random_pose_set(Rng& rng, int n, double center_radius = 5.0) {
  PoseSet set;
  set.frame_label = FrameLabel::local;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "p%03d", i);
    set.entries.push_back({id, random_pose(rng, center_radius)});
  }
  return set;
}

/// Applies T to every pose of a set (the noise-free server view).
inline PoseSet transform_pose_set(const PoseSet& set, const SimTransform& t) {
  PoseSet out;
  out.frame_label = FrameLabel::scene;
  for (const auto& e : set.entries) out.entries.push_back({e.image_id, apply_transform(t, e.pose)});
  return out;
}

}  // namespace poseattack::testing
