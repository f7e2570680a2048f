// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Verification and identification metrics. Higher scores mean "more likely the
// same identity"; a pair is accepted when its score is >= the threshold.
namespace agrgan::metrics {

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;

  /// Throws ArgumentError if either list is empty or holds a non-finite score.
  void validate() const;
};

/// Equal error rate. Thresholds sweep the sorted union of scores plus +inf.
/// The first threshold (lowest) where FAR == FRR gives FAR directly;
/// otherwise FAR and FRR are interpolated linearly between the two adjacent
/// thresholds where FAR − FRR changes sign.
double compute_eer(const ScoreSet& scores);

struct RocPoint {
  double fpr;
  double tpr;
};

/// ROC from (0,0) to (1,1), one point per distinct threshold, non-decreasing
/// in both coordinates.
std::vector<RocPoint> roc_curve(const ScoreSet& scores);

/// Trapezoidal area under a ROC curve.
double roc_auc(std::span<const RocPoint> curve);

/// True accept rate at the lowest threshold whose FAR does not exceed
/// target_fpr.
double tpr_at_fpr(const ScoreSet& scores, double target_fpr);

/// Fraction of probes whose highest-scoring gallery entry has the probe's
/// identity. similarity[p][g] scores probe p against gallery g; ties go to
/// the lower gallery index.
double rank1_accuracy(const std::vector<std::vector<double>>& similarity,
                      std::span<const std::size_t> probe_ids, std::span<const std::size_t> gallery_ids);

/// Cosine similarity of two equal-length vectors (norms floored at 1e-12).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

/// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace agrgan::metrics
