// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "agrgan/errors.hpp"

namespace agrgan::metrics {

void ScoreSet::validate() const {
  if (genuine.empty() || impostor.empty()) throw ArgumentError("score set needs genuine and impostor scores");
  for (const auto* list : {&genuine, &impostor}) {
    for (double s : *list) {
      if (!std::isfinite(s)) throw ArgumentError("score set contains a non-finite score");
    }
  }
}

namespace {

// Error rates at each candidate threshold in increasing order. The final
// entry is +inf (nothing accepted).
struct Sweep {
  std::vector<double> threshold, far, frr;
};

Sweep sweep(const ScoreSet& s) {
  s.validate();
  std::vector<double> gen = s.genuine, imp = s.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> all = gen;
  all.insert(all.end(), imp.begin(), imp.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  all.push_back(std::numeric_limits<double>::infinity());

  const double ng = static_cast<double>(gen.size()), ni = static_cast<double>(imp.size());
  Sweep out;
  std::size_t gi = 0, ii = 0;  // counts strictly below the threshold
  for (double t : all) {
    while (gi < gen.size() && gen[gi] < t) ++gi;
    while (ii < imp.size() && imp[ii] < t) ++ii;
    out.threshold.push_back(t);
    out.far.push_back(static_cast<double>(imp.size() - ii) / ni);
    out.frr.push_back(static_cast<double>(gi) / ng);
  }
  return out;
}

}  // namespace

double compute_eer(const ScoreSet& scores) {
  Sweep s = sweep(scores);
  // FAR − FRR is non-increasing along the sweep: FRR is 0 at the lowest
  // threshold and 1 at +inf, so a sign change always exists.
  for (std::size_t i = 0; i < s.threshold.size(); ++i) {
    double d = s.far[i] - s.frr[i];
    if (d == 0.0) return s.far[i];
    if (d < 0.0) {
      double d_prev = s.far[i - 1] - s.frr[i - 1];
      double a = d_prev / (d_prev - d);
      return s.far[i - 1] + a * (s.far[i] - s.far[i - 1]);
    }
  }
  return s.far.back();
}

std::vector<RocPoint> roc_curve(const ScoreSet& scores) {
  Sweep s = sweep(scores);
  std::vector<RocPoint> curve;
  curve.reserve(s.threshold.size() + 1);
  for (std::size_t i = s.threshold.size(); i-- > 0;) curve.push_back({s.far[i], 1.0 - s.frr[i]});
  if (curve.back().fpr != 1.0 || curve.back().tpr != 1.0) curve.push_back({1.0, 1.0});
  return curve;
}

double roc_auc(std::span<const RocPoint> curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

double tpr_at_fpr(const ScoreSet& scores, double target_fpr) {
  Sweep s = sweep(scores);
  for (std::size_t i = 0; i < s.threshold.size(); ++i) {
    if (s.far[i] <= target_fpr) return 1.0 - s.frr[i];
  }
  return 0.0;
}

double rank1_accuracy(const std::vector<std::vector<double>>& similarity, std::span<const std::size_t> probe_ids,
                      std::span<const std::size_t> gallery_ids) {
  if (similarity.size() != probe_ids.size() || probe_ids.empty()) {
    throw ArgumentError("rank1: similarity rows must match a non-empty probe list");
  }
  std::size_t hits = 0;
  for (std::size_t p = 0; p < similarity.size(); ++p) {
    const auto& row = similarity[p];
    if (row.size() != gallery_ids.size() || row.empty()) {
      throw ArgumentError("rank1: similarity columns must match a non-empty gallery");
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < row.size(); ++g) {
      if (row[g] > row[best]) best = g;
    }
    if (gallery_ids[best] == probe_ids[p]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(similarity.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("cosine_similarity: length mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::max(std::sqrt(aa), 1e-12) * std::max(std::sqrt(bb), 1e-12));
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ArgumentError("spearman: need two equal-length lists of >= 2");
  auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

double stddev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  double m = std::accumulate(values.begin(), values.end(), 0.0) / n, acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / n);
}

}  // namespace agrgan::metrics
