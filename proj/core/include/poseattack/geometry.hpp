// SE(3)/Sim(3) pose algebra, rotation metrics and noise sampling.
//
// Conventions used across the project:
//   * Poses are world-to-camera: x_cam = R * X_world + t, translation in
//     meters. The camera center in world coordinates is C = -R^T * t.
//   * Frame maps (SimTransform) act on points: X' = s * R * X + t.
//   * Rotations are stored as unit quaternions canonicalized to a
//     nonnegative scalar part, so equal rotations compare bit-equal.

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace poseattack {

using Rng = std::mt19937_64;

/// 3-DoF rotation stored as a canonical unit quaternion (w >= 0).
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) { canonicalize(); }
  explicit Rotation(const Eigen::Matrix3d& m) : q_(m) {
    q_.normalize();
    canonicalize();
  }

  static Rotation identity() { return Rotation(); }
  static Rotation axis_angle(const Eigen::Vector3d& axis, double angle_rad);
  /// Exponential map: rotation vector w = angle * unit_axis, radians.
  static Rotation exp(const Eigen::Vector3d& w);
  /// Logarithm map, returns the rotation vector with angle in [0, pi].
  Eigen::Vector3d log() const;

  const Eigen::Quaterniond& quat() const { return q_; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }

  Rotation operator*(const Rotation& o) const { return Rotation(q_ * o.q_); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return q_ * v; }

 private:
  void canonicalize();
  Eigen::Quaterniond q_;  // unit, w >= 0
};

/// Geodesic rotation angle in degrees, in [0, 180]. Mathematically
/// arccos((trace(R)-1)/2) with the argument clamped to [-1, 1]; evaluated
/// through the quaternion form 2*atan2(|v|, |w|), which agrees exactly in
/// real arithmetic and stays accurate near 0 and 180 degrees.
double rotation_angle_deg(const Rotation& r);

/// Rigid world-to-camera pose [R|t].
struct Pose {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d camera_center() const { return -(rotation.inverse() * translation); }
};

/// compose(a, b): the pose of b's camera after applying a's frame change,
/// (R, t) = (R_b * R_a, R_b * t_a + t_b).
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Relative pose of b expressed in a's camera frame.
Pose relative_pose(const Pose& a, const Pose& b);

/// Similarity frame map X' = s * R * X + t (scale dimensionless, t meters).
struct SimTransform {
  double scale = 1.0;
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }
  SimTransform inverse() const;
};

/// compose(a, b): the map X -> a(b(X)).
SimTransform compose(const SimTransform& a, const SimTransform& b);

/// Re-expresses pose p, defined over the source frame of T, in T's target
/// frame: R' = R_p * R_T^-1 and camera centers map as C' = s * R_T * C + t_T.
Pose apply_transform(const SimTransform& t, const Pose& p);

/// Axis-aligned box, meters.
struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d extent() const { return max - min; }
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool intersects(const Aabb& o) const {
    return (min.array() <= o.max.array()).all() && (max.array() >= o.min.array()).all();
  }
};

/// Pose corruption model: half-normal axis-angle rotation about the camera
/// center, Gaussian camera-center offset, and a uniform-outlier rate.
struct NoiseSpec {
  double sigma_rot_deg = 0.0;
  double sigma_trans_m = 0.0;
  double outlier_rate = 0.0;
  std::uint64_t rng_seed = 0;

  bool is_zero() const {
    return sigma_rot_deg == 0.0 && sigma_trans_m == 0.0 && outlier_rate == 0.0;
  }
};

/// Validates field ranges; throws std::invalid_argument on violation.
void validate(const NoiseSpec& spec);

/// Uniform rotation on SO(3).
Rotation random_rotation(Rng& rng);
/// Uniform direction on the unit sphere.
Eigen::Vector3d random_unit_vector(Rng& rng);
/// Uniform point inside the box.
Eigen::Vector3d random_point_in(const Aabb& box, Rng& rng);

/// Applies NoiseSpec to a pose. With probability outlier_rate the result is
/// a uniformly random pose inside outlier_bounds with uniform rotation;
/// otherwise the rotation is perturbed about the camera center by a random
/// axis and half-normal angle, and the center is offset by isotropic
/// Gaussian noise. A spec of all zeros returns p bit-exactly.
Pose perturb(const Pose& p, const NoiseSpec& spec, const Aabb& outlier_bounds, Rng& rng);

constexpr double kDegPerRad = 180.0 / 3.14159265358979323846;
constexpr double kRadPerDeg = 3.14159265358979323846 / 180.0;

}  // namespace poseattack
