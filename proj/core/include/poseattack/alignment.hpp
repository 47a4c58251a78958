// Robust alignment between an attacker-side pose set and the poses a
// localization service returned for the same images.
//
// The core scheme is hypothesize-and-verify where every corresponding pose
// pair proposes the full alignment: each pair yields a rigid hypothesis
// (R_est, t_est), all pairs are scored against it with rotation/translation
// residual thresholds, the hypothesis with the most inliers wins, and the
// winner is refined by averaging the per-inlier relative transforms
// (chordal-L2 quaternion mean for rotation, arithmetic mean for
// translation). The inlier ratio epsilon of the winning hypothesis is the
// statistic downstream presence classification runs on.
//
// A two-pair Sim(3) variant covers services that withhold the map scale:
// scale from the camera-center baseline ratio, then the same
// hypothesize-and-verify loop over sampled pairs.

#pragma once

#include <string>
#include <vector>

#include "poseattack/geometry.hpp"

namespace poseattack {

enum class FrameLabel { local, scene };

/// Ordered set of (image_id, pose) with unique ids.
struct PoseSet {
  struct Entry {
    std::string image_id;
    Pose pose;
  };
  std::vector<Entry> entries;
  FrameLabel frame_label = FrameLabel::local;

  const Pose* find(const std::string& image_id) const;
  /// Throws std::invalid_argument on duplicate ids.
  void validate() const;
};

/// Inlier thresholds: rotation in degrees, translation in meters.
struct AlignmentParams {
  double delta_r_deg = 30.0;
  double delta_t_m = 0.5;
};

struct PairResiduals {
  double rot_deg = 0.0;
  double trans_m = 0.0;
};

struct AlignmentResult {
  SimTransform transform;  // refined; scale = 1 in rigid mode
  std::vector<std::string> inlier_ids;  // sorted; under the winning hypothesis
  double epsilon = 0.0;                 // |inliers| / n_pairs, pre-refinement
  std::string hypothesis_id;            // winning single camera
  std::string hypothesis_id_b;          // second camera of a two-pair hypothesis, else empty

  struct Residual {
    std::string image_id;
    double rot_deg = 0.0;
    double trans_m = 0.0;
  };
  /// Residuals of every matched pair under the winning hypothesis
  /// (pre-refinement), sorted by image_id.
  std::vector<Residual> per_pair_residuals;

  int n_pairs = 0;  // matched (shared-id) pair count
};

struct EmptyIntersectionError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateBaselineError final : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rigid alignment hypothesis from one corresponding pair:
/// R_est = R_server^T * R_local, t_est = R_server^T * (t_local - t_server).
SimTransform hypothesis_from_pair(const Pose& local, const Pose& server);

/// Residuals of a corresponding pair under a candidate transform.
/// Rotation: angle of R_local * R_est^T * R_server^T. Translation, rigid:
/// || R_server^T t_server - R_est R_local^T t_local + t_est ||; with scale,
/// the camera-center residual is scale-normalized,
/// || s R_est C_local + t_est - C_server || / s, which reduces to the rigid
/// expression at s = 1.
PairResiduals pair_residuals(const Pose& local, const Pose& server, const SimTransform& t);

/// Evaluates every single-pair hypothesis over the shared image ids, keeps
/// the one with the most inliers (ties: lexicographically lowest id), and
/// refines over the inlier set. Throws EmptyIntersectionError when the sets
/// share no id.
AlignmentResult best_single_camera_alignment(const PoseSet& local, const PoseSet& server,
                                             const AlignmentParams& params);

/// Test oracle: a literal, unoptimized transcription of the same scheme on
/// raw matrices, sharing no code with best_single_camera_alignment. Same
/// contract, same tie-breaking.
AlignmentResult exhaustive_oracle_alignment(const PoseSet& local, const PoseSet& server,
                                            const AlignmentParams& params);

/// Similarity hypothesis from two corresponding pairs: scale from the
/// camera-center baseline ratio, rotation from pair a, translation mapping
/// pair a's centers exactly. Rigid inputs reproduce
/// hypothesis_from_pair(local_a, server_a). Throws DegenerateBaselineError
/// when the local centers coincide (separation <= 1e-9 m).
SimTransform sim3_from_two_pairs(const Pose& local_a, const Pose& server_a,
                                 const Pose& local_b, const Pose& server_b);

/// Two-pair hypothesize-and-verify over Sim(3): exhaustive over all pairs
/// when C(N,2) <= max_iters, otherwise max_iters seeded random samples.
/// Refinement: rotation/translation as in the rigid path, scale as the
/// ratio of RMS center spreads of the inlier sets about their centroids.
/// Requires >= 2 shared ids (EmptyIntersectionError otherwise);
/// DegenerateBaselineError if every candidate pair is degenerate.
AlignmentResult ransac_sim3_alignment(const PoseSet& local, const PoseSet& server,
                                      const AlignmentParams& params, int max_iters, Rng& rng);

}  // namespace poseattack
