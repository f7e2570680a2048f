// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "agrgan/tensor.hpp"

namespace agrgan {

inline constexpr std::size_t kAgeGroups = 10;
inline constexpr std::size_t kGenders = 2;
inline constexpr std::size_t kConditionDim = kAgeGroups + kGenders;

/// Ten age groups: 0-5, 6-10, 11-15, 16-20, 21-30, 31-40, 41-50, 51-60, 61-70, >70.
/// Upper endpoints are inclusive, so 20 belongs to group 3 and 30 to group 4;
/// fractional ages above an endpoint move to the next group (70.5 -> 9).
struct AgeBinning {
  static constexpr std::array<double, kAgeGroups - 1> upper_bounds{5, 10, 15, 20, 30, 40, 50, 60, 70};
  static constexpr std::array<std::string_view, kAgeGroups> labels{
      "0-5", "6-10", "11-15", "16-20", "21-30", "31-40", "41-50", "51-60", "61-70", ">70"};

  /// Throws ArgumentError for negative or non-finite ages.
  static std::size_t group_of(double age_years);
  /// Midpoint of range(group).
  static double representative_age(std::size_t group);
  /// Inclusive lower / upper ages of a group; the open group ends at 80.
  static std::pair<double, double> range(std::size_t group);
};

inline std::size_t age_to_group(double age_years) { return AgeBinning::group_of(age_years); }

/// One-hot (age group, gender) conditioning signal.
struct ConditionVector {
  std::array<double, kAgeGroups> age_onehot{};
  std::array<double, kGenders> gender_onehot{};

  std::size_t age_group() const;
  std::size_t gender() const;
  /// Concatenated 12-vector: age one-hot then gender one-hot.
  std::array<double, kConditionDim> flat() const;
};

/// Throws ArgumentError when group >= 10 or gender >= 2.
ConditionVector encode_condition(std::size_t group, std::size_t gender);
/// Inverse of encode_condition; throws ArgumentError if either part is not one-hot.
std::pair<std::size_t, std::size_t> decode_condition(const ConditionVector& cond);

/// Stacks conditions into a [B, 12] tensor.
Tensor condition_batch(std::span<const ConditionVector> conds);

/// Raw intensities in [0, 255] -> [-1, 1] by x / 127.5 - 1. Out-of-range raw
/// values are clamped and reported on the warning channel.
double normalize_intensity(double raw);
double denormalize_intensity(double value);
std::vector<double> normalize(std::span<const double> raw);
std::vector<double> denormalize(std::span<const double> values);

}  // namespace agrgan
