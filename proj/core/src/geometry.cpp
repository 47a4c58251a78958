#include "poseattack/geometry.hpp"

#include <cmath>

namespace poseattack {

void Rotation::canonicalize() {
  // Fix the sign ambiguity q ~ -q so equal rotations are bit-equal.
  double* c = q_.coeffs().data();  // x, y, z, w
  for (int i = 3; i >= 0; --i) {
    if (c[i] > 0.0) return;
    if (c[i] < 0.0) break;
  }
  q_.coeffs() = -q_.coeffs();
}

Rotation Rotation::axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis.normalized())));
}

Rotation Rotation::exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-16) return Rotation();
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle)));
}

Eigen::Vector3d Rotation::log() const {
  Eigen::AngleAxisd aa(q_);
  return aa.angle() * aa.axis();
}

double rotation_angle_deg(const Rotation& r) {
  const Eigen::Quaterniond& q = r.quat();
  const double angle = 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
  return angle * kDegPerRad;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = b.rotation * a.rotation;
  out.translation = b.rotation * a.translation + b.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.inverse();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Pose relative_pose(const Pose& a, const Pose& b) {
  return compose(inverse(a), b);
}

SimTransform SimTransform::inverse() const {
  SimTransform out;
  out.scale = 1.0 / scale;
  out.rotation = rotation.inverse();
  out.translation = -(out.scale * (out.rotation * translation));
  return out;
}

SimTransform compose(const SimTransform& a, const SimTransform& b) {
  SimTransform out;
  out.scale = a.scale * b.scale;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.scale * (a.rotation * b.translation) + a.translation;
  return out;
}

Pose apply_transform(const SimTransform& t, const Pose& p) {
  Pose out;
  out.rotation = p.rotation * t.rotation.inverse();
  const Eigen::Vector3d center = t.scale * (t.rotation * p.camera_center()) + t.translation;
  out.translation = -(out.rotation * center);
  return out;
}

void validate(const NoiseSpec& spec) {
  if (!(spec.sigma_rot_deg >= 0.0) || !std::isfinite(spec.sigma_rot_deg))
    throw std::invalid_argument("NoiseSpec: sigma_rot_deg must be finite and >= 0");
  if (!(spec.sigma_trans_m >= 0.0) || !std::isfinite(spec.sigma_trans_m))
    throw std::invalid_argument("NoiseSpec: sigma_trans_m must be finite and >= 0");
  if (!(spec.outlier_rate >= 0.0 && spec.outlier_rate <= 1.0))
    throw std::invalid_argument("NoiseSpec: outlier_rate must be in [0, 1]");
}

Rotation random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  while (q.norm() < 1e-12) q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  return Rotation(q);
}

Eigen::Vector3d random_unit_vector(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-12) v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  return v.normalized();
}

Eigen::Vector3d random_point_in(const Aabb& box, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d p;
  for (int i = 0; i < 3; ++i) p[i] = box.min[i] + u(rng) * (box.max[i] - box.min[i]);
  return p;
}

Pose perturb(const Pose& p, const NoiseSpec& spec, const Aabb& outlier_bounds, Rng& rng) {
  validate(spec);
  if (spec.is_zero()) return p;

  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (spec.outlier_rate > 0.0 && u(rng) < spec.outlier_rate) {
    Pose out;
    const Eigen::Vector3d center = random_point_in(outlier_bounds, rng);
    out.rotation = random_rotation(rng);
    out.translation = -(out.rotation * center);
    return out;
  }

  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d axis = random_unit_vector(rng);
  const double angle_deg = std::abs(spec.sigma_rot_deg * n(rng));
  Eigen::Vector3d center_offset;
  for (int i = 0; i < 3; ++i) center_offset[i] = spec.sigma_trans_m * n(rng);

  // Rotate about the camera center, then shift the center: the rotation
  // deviation equals the drawn angle and the center displacement equals
  // ||center_offset|| independently of each other.
  const Rotation q = Rotation::axis_angle(axis, angle_deg * kRadPerDeg);
  Pose out;
  out.rotation = q * p.rotation;
  out.translation = q * (p.translation - (p.rotation * center_offset));
  return out;
}

}  // namespace poseattack
