#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anatomik/losses.hpp"
#include "anatomik/pose.hpp"
#include "anatomik/skeleton.hpp"

namespace anatomik {

/// Mean per-joint position error in mm (Protocol 1, root-relative poses).
inline double mpjpe(const Pose3D& pred, const Pose3D& gt) {
  double sum = 0.0;
  for (int i = 0; i < kNumJoints; ++i) sum += (pred[i] - gt[i]).norm();
  return sum / static_cast<double>(kNumJoints);
}

inline double mpjpe(const std::vector<Pose3D>& preds, const std::vector<Pose3D>& gts) {
  if (preds.size() != gts.size() || preds.empty())
    throw std::invalid_argument("mpjpe: sequence length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += mpjpe(preds[i], gts[i]);
  return sum / static_cast<double>(preds.size());
}

struct SimilarityTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Pose3D apply(const Pose3D& pose) const {
    Pose3D out;
    for (int i = 0; i < kNumJoints; ++i) out[i] = apply(pose[i]);
    return out;
  }
};

struct ProcrustesOptions {
  bool with_scale = true;  // full similarity; false = strict rigid alignment
};

/// Least-squares similarity transform min_{s,R,t} sum ||s R p_i + t - q_i||^2
/// via SVD of the centered cross-covariance, with the reflection corrected
/// so det(R) = +1. Throws on rank-deficient (collinear) input.
inline SimilarityTransform procrustes_align(const Pose3D& P, const Pose3D& Q,
                                            const ProcrustesOptions& opts = {}) {
  Vec3 mu_p = Vec3::Zero(), mu_q = Vec3::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    mu_p += P[i];
    mu_q += Q[i];
  }
  mu_p /= kNumJoints;
  mu_q /= kNumJoints;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_p = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    const Vec3 dp = P[i] - mu_p;
    const Vec3 dq = Q[i] - mu_q;
    cov += dq * dp.transpose();
    var_p += dp.squaredNorm();
  }
  cov /= kNumJoints;
  var_p /= kNumJoints;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= 1e-12 * std::max(sv(0), 1.0))
    throw std::invalid_argument("procrustes_align: degenerate (rank < 2) point set");

  Vec3 d = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2) = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  t.scale = opts.with_scale ? (sv.dot(d) / var_p) : 1.0;
  t.translation = mu_q - t.scale * (t.rotation * mu_p);
  return t;
}

/// Procrustes-aligned MPJPE (Protocol 2).
inline double pampjpe(const Pose3D& pred, const Pose3D& gt, const ProcrustesOptions& opts = {}) {
  return mpjpe(procrustes_align(pred, gt, opts).apply(pred), gt);
}

inline double pampjpe(const std::vector<Pose3D>& preds, const std::vector<Pose3D>& gts,
                      const ProcrustesOptions& opts = {}) {
  if (preds.size() != gts.size() || preds.empty())
    throw std::invalid_argument("pampjpe: sequence length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += pampjpe(preds[i], gts[i], opts);
  return sum / static_cast<double>(preds.size());
}

struct PckAucResult {
  double pck = 0.0;
  double auc = 0.0;
};

/// PCK at the given threshold (fraction of joints within it, inclusive)
/// and AUC (mean PCK over thresholds swept from 0 to the threshold in
/// auc_step increments, both ends included).
inline PckAucResult pck_auc(const std::vector<Pose3D>& preds, const std::vector<Pose3D>& gts,
                            double threshold_mm = 150.0, double auc_step_mm = 5.0) {
  if (preds.size() != gts.size() || preds.empty())
    throw std::invalid_argument("pck_auc: sequence length mismatch");
  if (threshold_mm < 0.0 || auc_step_mm <= 0.0)
    throw std::invalid_argument("pck_auc: invalid thresholds");

  std::vector<double> dists;
  dists.reserve(preds.size() * kNumJoints);
  for (std::size_t f = 0; f < preds.size(); ++f)
    for (int j = 0; j < kNumJoints; ++j) dists.push_back((preds[f][j] - gts[f][j]).norm());

  auto pck_at = [&](double thr) {
    std::size_t ok = 0;
    for (double d : dists)
      if (d <= thr) ++ok;
    return static_cast<double>(ok) / static_cast<double>(dists.size());
  };

  PckAucResult r;
  r.pck = pck_at(threshold_mm);
  double sum = 0.0;
  int bins = 0;
  for (double thr = 0.0; thr <= threshold_mm + 1e-9; thr += auc_step_mm) {
    sum += pck_at(thr);
    ++bins;
  }
  r.auc = sum / static_cast<double>(bins);
  return r;
}

/// Structural-validity summary of a sequence: mean |left-right| bone length
/// gap per pair, per-bone length standard deviation across frames
/// (population), and the fraction of (frame, limited joint) pairs whose
/// illegality magnitude is strictly positive.
struct ValidityReport {
  std::vector<std::pair<std::string, double>> lr_pair_l1_mm;     // keyed by right-bone name
  std::vector<std::pair<std::string, double>> bone_length_std_mm;  // keyed by bone name
  double illegal_rate = 0.0;
};

inline ValidityReport validity_report(const PoseSequence& seq, const Skeleton& skel,
                                      const LossOptions& opt = {}) {
  if (seq.frames.empty()) throw std::invalid_argument("validity_report: empty sequence");
  const double n = static_cast<double>(seq.frames.size());
  ValidityReport report;

  for (const auto& [rb, lb] : skel.lr_pairs) {
    double sum = 0.0;
    for (const Pose3D& pose : seq.frames)
      sum += std::abs(bone_length(pose, skel.bones[static_cast<std::size_t>(rb)]) -
                      bone_length(pose, skel.bones[static_cast<std::size_t>(lb)]));
    report.lr_pair_l1_mm.emplace_back(skel.bones[static_cast<std::size_t>(rb)].name, sum / n);
  }

  for (const Bone& bone : skel.bones) {
    double mean = 0.0;
    for (const Pose3D& pose : seq.frames) mean += bone_length(pose, bone);
    mean /= n;
    double var = 0.0;
    for (const Pose3D& pose : seq.frames) {
      const double d = bone_length(pose, bone) - mean;
      var += d * d;
    }
    report.bone_length_std_mm.emplace_back(bone.name, std::sqrt(var / n));
  }

  std::size_t illegal = 0;
  for (const Pose3D& pose : seq.frames)
    for (const auto& spec : skel.angle_joints)
      if (illegality_magnitude(pose, skel, spec, opt) > 0.0) ++illegal;
  report.illegal_rate =
      static_cast<double>(illegal) / (n * static_cast<double>(skel.angle_joints.size()));
  return report;
}

}  // namespace anatomik
