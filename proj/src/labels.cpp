// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agrgan/errors.hpp"

namespace agrgan {

std::size_t AgeBinning::group_of(double age_years) {
  if (!(age_years >= 0.0) || !std::isfinite(age_years)) {
    throw ArgumentError("age must be a finite non-negative number, got " + std::to_string(age_years));
  }
  auto it = std::lower_bound(upper_bounds.begin(), upper_bounds.end(), age_years);
  return static_cast<std::size_t>(it - upper_bounds.begin());
}

std::pair<double, double> AgeBinning::range(std::size_t group) {
  if (group >= kAgeGroups) throw ArgumentError("age group " + std::to_string(group) + " out of range");
  double lo = group == 0 ? 0.0 : upper_bounds[group - 1] + 1.0;
  double hi = group + 1 == kAgeGroups ? 80.0 : upper_bounds[group];
  return {lo, hi};
}

double AgeBinning::representative_age(std::size_t group) {
  auto [lo, hi] = range(group);
  return 0.5 * (lo + hi);
}

std::size_t ConditionVector::age_group() const { return decode_condition(*this).first; }
std::size_t ConditionVector::gender() const { return decode_condition(*this).second; }

std::array<double, kConditionDim> ConditionVector::flat() const {
  std::array<double, kConditionDim> out{};
  std::copy(age_onehot.begin(), age_onehot.end(), out.begin());
  std::copy(gender_onehot.begin(), gender_onehot.end(), out.begin() + kAgeGroups);
  return out;
}

ConditionVector encode_condition(std::size_t group, std::size_t gender) {
  if (group >= kAgeGroups) throw ArgumentError("age group " + std::to_string(group) + " out of range 0..9");
  if (gender >= kGenders) throw ArgumentError("gender " + std::to_string(gender) + " out of range 0..1");
  ConditionVector c;
  c.age_onehot[group] = 1.0;
  c.gender_onehot[gender] = 1.0;
  return c;
}

namespace {

template <std::size_t N>
std::size_t hot_index(const std::array<double, N>& v, const char* what) {
  std::size_t hot = N, ones = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (v[i] == 1.0) {
      hot = i;
      ++ones;
    } else if (v[i] != 0.0) {
      ones = N + 1;
    }
  }
  if (ones != 1) throw ArgumentError(std::string(what) + " is not a one-hot vector");
  return hot;
}

}  // namespace

std::pair<std::size_t, std::size_t> decode_condition(const ConditionVector& cond) {
  return {hot_index(cond.age_onehot, "age one-hot"), hot_index(cond.gender_onehot, "gender one-hot")};
}

Tensor condition_batch(std::span<const ConditionVector> conds) {
  std::vector<double> data;
  data.reserve(conds.size() * kConditionDim);
  for (const auto& c : conds) {
    auto f = c.flat();
    data.insert(data.end(), f.begin(), f.end());
  }
  return Tensor::from_data({conds.size(), kConditionDim}, std::move(data));
}

double normalize_intensity(double raw) {
  if (!(raw >= 0.0 && raw <= 255.0)) {
    warn("raw intensity " + std::to_string(raw) + " outside [0, 255], clamped");
    raw = std::isnan(raw) ? 0.0 : std::clamp(raw, 0.0, 255.0);
  }
  return raw / 127.5 - 1.0;
}

double denormalize_intensity(double value) { return (value + 1.0) * 127.5; }

std::vector<double> normalize(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), normalize_intensity);
  return out;
}

std::vector<double> denormalize(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), denormalize_intensity);
  return out;
}

}  // namespace agrgan
