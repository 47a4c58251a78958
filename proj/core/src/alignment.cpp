#include "poseattack/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace poseattack {

namespace {

struct MatchedPair {
  std::string image_id;
  Pose local;
  Pose server;
};

// Shared-id pairs sorted by image_id. Only shared ids participate: the
// service may decline to localize part of the query set.
std::vector<MatchedPair> matched_pairs(const PoseSet& local, const PoseSet& server) {
  local.validate();
  server.validate();
  std::map<std::string, const Pose*> server_by_id;
  for (const auto& e : server.entries) server_by_id.emplace(e.image_id, &e.pose);

  std::vector<MatchedPair> out;
  for (const auto& e : local.entries) {
    auto it = server_by_id.find(e.image_id);
    if (it != server_by_id.end()) out.push_back({e.image_id, e.pose, *it->second});
  }
  std::sort(out.begin(), out.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.image_id < b.image_id; });
  return out;
}

struct ScoredHypothesis {
  SimTransform transform;
  std::vector<int> inliers;          // indices into the matched-pair list
  std::vector<PairResiduals> residuals;  // one per matched pair
};

ScoredHypothesis score_hypothesis(const std::vector<MatchedPair>& pairs,
                                  const SimTransform& t, const AlignmentParams& params) {
  ScoredHypothesis s;
  s.transform = t;
  s.residuals.reserve(pairs.size());
  for (int j = 0; j < static_cast<int>(pairs.size()); ++j) {
    const PairResiduals r = pair_residuals(pairs[j].local, pairs[j].server, t);
    s.residuals.push_back(r);
    if (r.rot_deg < params.delta_r_deg && r.trans_m < params.delta_t_m) s.inliers.push_back(j);
  }
  return s;
}

// Chordal-L2 mean: largest eigenvector of the sign-aligned quaternion
// outer-product sum.
Rotation chordal_mean(const std::vector<Rotation>& rotations, const Rotation& reference) {
  Eigen::Matrix4d accum = Eigen::Matrix4d::Zero();
  const Eigen::Vector4d ref(reference.quat().w(), reference.quat().x(), reference.quat().y(),
                            reference.quat().z());
  for (const Rotation& r : rotations) {
    Eigen::Vector4d q(r.quat().w(), r.quat().x(), r.quat().y(), r.quat().z());
    if (q.dot(ref) < 0.0) q = -q;
    accum += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(accum);
  const Eigen::Vector4d q = eig.eigenvectors().col(3);  // largest eigenvalue last
  return Rotation(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
}

AlignmentResult finalize_rigid(const std::vector<MatchedPair>& pairs, int hypothesis_index,
                               const ScoredHypothesis& best) {
  AlignmentResult out;
  out.n_pairs = static_cast<int>(pairs.size());
  out.hypothesis_id = pairs[hypothesis_index].image_id;
  out.epsilon = static_cast<double>(best.inliers.size()) / static_cast<double>(pairs.size());
  for (int j : best.inliers) out.inlier_ids.push_back(pairs[j].image_id);
  for (int j = 0; j < static_cast<int>(pairs.size()); ++j)
    out.per_pair_residuals.push_back(
        {pairs[j].image_id, best.residuals[j].rot_deg, best.residuals[j].trans_m});

  // Refine by averaging the per-inlier relative transforms.
  std::vector<Rotation> rotations;
  Eigen::Vector3d t_sum = Eigen::Vector3d::Zero();
  for (int j : best.inliers) {
    const SimTransform rel = hypothesis_from_pair(pairs[j].local, pairs[j].server);
    rotations.push_back(rel.rotation);
    t_sum += rel.translation;
  }
  out.transform.scale = 1.0;
  out.transform.rotation = chordal_mean(rotations, best.transform.rotation);
  out.transform.translation = t_sum / static_cast<double>(best.inliers.size());
  return out;
}

}  // namespace

const Pose* PoseSet::find(const std::string& image_id) const {
  for (const auto& e : entries)
    if (e.image_id == image_id) return &e.pose;
  return nullptr;
}

void PoseSet::validate() const {
  std::set<std::string> seen;
  for (const auto& e : entries)
    if (!seen.insert(e.image_id).second)
      throw std::invalid_argument("PoseSet: duplicate image_id " + e.image_id);
}

SimTransform hypothesis_from_pair(const Pose& local, const Pose& server) {
  SimTransform t;
  t.scale = 1.0;
  t.rotation = server.rotation.inverse() * local.rotation;
  t.translation = server.rotation.inverse() * (local.translation - server.translation);
  return t;
}

PairResiduals pair_residuals(const Pose& local, const Pose& server, const SimTransform& t) {
  PairResiduals r;
  const Rotation delta = local.rotation * t.rotation.inverse() * server.rotation.inverse();
  r.rot_deg = rotation_angle_deg(delta);

  if (t.scale == 1.0) {
    const Eigen::Vector3d d = server.rotation.inverse() * server.translation -
                              t.rotation * (local.rotation.inverse() * local.translation) +
                              t.translation;
    r.trans_m = d.norm();
  } else {
    // Scale-normalized camera-center residual; identical to the rigid
    // expression when scale = 1.
    const Eigen::Vector3d mapped = t.apply(local.camera_center());
    r.trans_m = (mapped - server.camera_center()).norm() / t.scale;
  }
  return r;
}

AlignmentResult best_single_camera_alignment(const PoseSet& local, const PoseSet& server,
                                             const AlignmentParams& params) {
  const std::vector<MatchedPair> pairs = matched_pairs(local, server);
  if (pairs.empty()) throw EmptyIntersectionError("no shared image ids between pose sets");

  int best_index = -1;
  ScoredHypothesis best;
  for (int i = 0; i < static_cast<int>(pairs.size()); ++i) {
    const SimTransform hyp = hypothesis_from_pair(pairs[i].local, pairs[i].server);
    ScoredHypothesis scored = score_hypothesis(pairs, hyp, params);
    if (best_index < 0 || scored.inliers.size() > best.inliers.size()) {
      best_index = i;
      best = std::move(scored);
    }
  }
  return finalize_rigid(pairs, best_index, best);
}

SimTransform sim3_from_two_pairs(const Pose& local_a, const Pose& server_a,
                                 const Pose& local_b, const Pose& server_b) {
  const Eigen::Vector3d ca = local_a.camera_center();
  const Eigen::Vector3d cb = local_b.camera_center();
  const double baseline = (ca - cb).norm();
  if (baseline <= 1e-9)
    throw DegenerateBaselineError("local camera centers coincide (baseline <= 1e-9 m)");

  SimTransform t;
  t.scale = (server_a.camera_center() - server_b.camera_center()).norm() / baseline;
  t.rotation = server_a.rotation.inverse() * local_a.rotation;
  t.translation = server_a.camera_center() - t.scale * (t.rotation * ca);
  return t;
}

AlignmentResult ransac_sim3_alignment(const PoseSet& local, const PoseSet& server,
                                      const AlignmentParams& params, int max_iters, Rng& rng) {
  const std::vector<MatchedPair> pairs = matched_pairs(local, server);
  const int n = static_cast<int>(pairs.size());
  if (n < 2) throw EmptyIntersectionError("sim3 alignment needs >= 2 shared image ids");

  std::vector<std::pair<int, int>> samples;
  const long long all_pairs = static_cast<long long>(n) * (n - 1) / 2;
  if (all_pairs <= max_iters) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) samples.emplace_back(i, j);
  } else {
    std::uniform_int_distribution<int> pick(0, n - 1);
    samples.reserve(static_cast<size_t>(max_iters));
    for (int it = 0; it < max_iters; ++it) {
      int i = pick(rng);
      int j = pick(rng);
      while (j == i) j = pick(rng);
      samples.emplace_back(std::min(i, j), std::max(i, j));
    }
  }

  int best_a = -1, best_b = -1;
  ScoredHypothesis best;
  for (const auto& [i, j] : samples) {
    SimTransform hyp;
    try {
      hyp = sim3_from_two_pairs(pairs[i].local, pairs[i].server, pairs[j].local, pairs[j].server);
    } catch (const DegenerateBaselineError&) {
      continue;
    }
    ScoredHypothesis scored = score_hypothesis(pairs, hyp, params);
    if (best_a < 0 || scored.inliers.size() > best.inliers.size()) {
      best_a = i;
      best_b = j;
      best = std::move(scored);
    }
  }
  if (best_a < 0) throw DegenerateBaselineError("every candidate pair has a degenerate baseline");

  AlignmentResult out;
  out.n_pairs = n;
  out.hypothesis_id = pairs[best_a].image_id;
  out.hypothesis_id_b = pairs[best_b].image_id;
  out.epsilon = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
  for (int j : best.inliers) out.inlier_ids.push_back(pairs[j].image_id);
  for (int j = 0; j < n; ++j)
    out.per_pair_residuals.push_back(
        {pairs[j].image_id, best.residuals[j].rot_deg, best.residuals[j].trans_m});

  // Refinement. Scale from the RMS spreads of the inlier centers about
  // their centroids; rotation and translation as in the rigid path.
  std::vector<Rotation> rotations;
  std::vector<Eigen::Vector3d> local_centers, server_centers;
  for (int j : best.inliers) {
    rotations.push_back((pairs[j].server.rotation.inverse() * pairs[j].local.rotation));
    local_centers.push_back(pairs[j].local.camera_center());
    server_centers.push_back(pairs[j].server.camera_center());
  }
  double scale = best.transform.scale;
  if (local_centers.size() >= 2) {
    Eigen::Vector3d lc = Eigen::Vector3d::Zero(), sc = Eigen::Vector3d::Zero();
    for (const auto& c : local_centers) lc += c;
    for (const auto& c : server_centers) sc += c;
    lc /= static_cast<double>(local_centers.size());
    sc /= static_cast<double>(server_centers.size());
    double local_ss = 0.0, server_ss = 0.0;
    for (const auto& c : local_centers) local_ss += (c - lc).squaredNorm();
    for (const auto& c : server_centers) server_ss += (c - sc).squaredNorm();
    if (local_ss > 0.0 && server_ss > 0.0) scale = std::sqrt(server_ss / local_ss);
  }
  const Rotation mean_rot = chordal_mean(rotations, best.transform.rotation);
  Eigen::Vector3d t_sum = Eigen::Vector3d::Zero();
  for (size_t k = 0; k < local_centers.size(); ++k)
    t_sum += server_centers[k] - scale * (rotations[k] * local_centers[k]);

  out.transform.scale = scale;
  out.transform.rotation = mean_rot;
  out.transform.translation = t_sum / static_cast<double>(local_centers.size());
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle: a straight transcription of the single-camera loop on
// raw matrices. Deliberately shares no code with the implementation above.
// ---------------------------------------------------------------------------

AlignmentResult exhaustive_oracle_alignment(const PoseSet& local, const PoseSet& server,
                                            const AlignmentParams& params) {
  // Pair up shared ids, sorted by id (same pairing contract).
  std::vector<std::string> ids;
  for (const auto& le : local.entries)
    for (const auto& se : server.entries)
      if (le.image_id == se.image_id) ids.push_back(le.image_id);
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) throw EmptyIntersectionError("no shared image ids between pose sets");
  for (size_t k = 1; k < ids.size(); ++k)
    if (ids[k] == ids[k - 1]) throw std::invalid_argument("duplicate image_id " + ids[k]);

  const int n = static_cast<int>(ids.size());
  std::vector<Eigen::Matrix3d> r(n), r_hat(n);
  std::vector<Eigen::Vector3d> t(n), t_hat(n);
  for (int k = 0; k < n; ++k) {
    const Pose* lp = local.find(ids[k]);
    const Pose* sp = server.find(ids[k]);
    r[k] = lp->rotation.matrix();
    t[k] = lp->translation;
    r_hat[k] = sp->rotation.matrix();
    t_hat[k] = sp->translation;
  }

  std::vector<int> inliers_best;
  std::vector<std::pair<double, double>> residuals_best;
  int i_best = -1;
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix3d r_est = r_hat[i].transpose() * r[i];
    const Eigen::Vector3d t_est = r_hat[i].transpose() * (t[i] - t_hat[i]);
    std::vector<int> inliers;
    std::vector<std::pair<double, double>> residuals;
    for (int j = 0; j < n; ++j) {
      const Eigen::Matrix3d dr = r[j] * r_est.transpose() * r_hat[j].transpose();
      double c = (dr.trace() - 1.0) / 2.0;
      c = std::max(-1.0, std::min(1.0, c));
      const double delta_r = std::acos(c) * kDegPerRad;
      const double delta_t =
          (r_hat[j].transpose() * t_hat[j] - r_est * (r[j].transpose() * t[j]) + t_est).norm();
      residuals.emplace_back(delta_r, delta_t);
      if (delta_r < params.delta_r_deg && delta_t < params.delta_t_m) inliers.push_back(j);
    }
    if (i_best < 0 || inliers.size() > inliers_best.size()) {
      i_best = i;
      inliers_best = inliers;
      residuals_best = residuals;
    }
  }

  AlignmentResult out;
  out.n_pairs = n;
  out.hypothesis_id = ids[i_best];
  out.epsilon = static_cast<double>(inliers_best.size()) / static_cast<double>(n);
  for (int j : inliers_best) out.inlier_ids.push_back(ids[j]);
  for (int j = 0; j < n; ++j)
    out.per_pair_residuals.push_back({ids[j], residuals_best[j].first, residuals_best[j].second});

  // Average the inlier relative transforms (own quaternion-mean path).
  const Eigen::Quaterniond q_ref(r_hat[i_best].transpose() * r[i_best]);
  Eigen::Matrix4d accum = Eigen::Matrix4d::Zero();
  Eigen::Vector3d t_mean = Eigen::Vector3d::Zero();
  for (int j : inliers_best) {
    Eigen::Quaterniond qj(r_hat[j].transpose() * r[j]);
    if (qj.dot(q_ref) < 0.0) qj.coeffs() = -qj.coeffs();
    Eigen::Vector4d v(qj.w(), qj.x(), qj.y(), qj.z());
    accum += v * v.transpose();
    t_mean += r_hat[j].transpose() * (t[j] - t_hat[j]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(accum);
  const Eigen::Vector4d qv = eig.eigenvectors().col(3);
  out.transform.scale = 1.0;
  out.transform.rotation = Rotation(Eigen::Quaterniond(qv[0], qv[1], qv[2], qv[3]));
  out.transform.translation = t_mean / static_cast<double>(inliers_best.size());
  return out;
}

}  // namespace poseattack
