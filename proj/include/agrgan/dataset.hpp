// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "agrgan/labels.hpp"
#include "agrgan/tensor.hpp"

namespace agrgan {

/// One sample: CHW pixels in [-1, 1] plus its labels.
struct LabeledImage {
  std::vector<double> pixels;  // 3 x size x size, channel-major
  std::size_t identity = 0;
  double age_years = 0.0;
  std::size_t gender = 0;

  std::size_t age_group() const { return age_to_group(age_years); }
};

struct Dataset {
  std::size_t image_size = 32;
  std::vector<LabeledImage> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  /// Sorted distinct identity ids.
  std::vector<std::size_t> identities() const;
  /// Sample count per age group.
  std::array<std::size_t, kAgeGroups> group_histogram() const;
};

/// Generative factors of the synthetic faces.
///
/// Identity (fixed per identity id and seed): position and size of a glyph
/// rectangle, glyph and background colours, and a contrasting "eye" dot.
/// Age acts through three monotone transforms: horizontal stripe frequency
/// inside the glyph grows with the age group (1.5 + group cycles per width),
/// a top-to-bottom darkening gradient steepens with age in years, and the
/// glyph's corner radius shrinks from fully rounded (group 0) to square
/// (group 9). Gender shifts the glyph hue (+red, -blue for gender 1).
/// Pixels are quantized to 8 bits before normalization so images survive a
/// round trip through the on-disk P6 cache unchanged.
struct SyntheticFactors {
  double center_x, center_y;
  double half_width, half_height;
  double glyph_rgb[3];
  double background_rgb[3];
  double eye_dx, eye_dy, eye_level;
};

SyntheticFactors identity_factors(std::uint64_t seed, std::size_t identity);

/// Renders the image for (identity, age, gender). Pure function of its arguments.
std::vector<double> render_synthetic(std::uint64_t seed, std::size_t identity, double age_years, std::size_t gender,
                                     std::size_t size);

/// identity_count x samples_per_identity images. Each identity has a fixed
/// gender; ages are drawn by picking a group uniformly, then a uniform age
/// inside it. Throws ArgumentError for zero counts or sizes < 8.
Dataset generate_synthetic(std::size_t identity_count, std::size_t samples_per_identity, std::uint64_t seed,
                           std::size_t size = 32);

/// Partitions by identity: a seeded shuffle of the identity ids, with the first
/// round(train_fraction · count) identities going to the first split.
std::pair<Dataset, Dataset> split_by_identity(const Dataset& data, double train_fraction, std::uint64_t seed);

/// Stacks the selected samples into [N, 3, S, S].
Tensor image_batch(const Dataset& data, std::span<const std::size_t> indices);
Tensor image_batch(const Dataset& data);

/// Seeded per-epoch shuffle into fixed-size batches; the final partial batch
/// is dropped.
class BatchIterator {
 public:
  /// Throws ArgumentError for an empty dataset, batch_size 0, or batch_size > size.
  BatchIterator(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return dataset_size_ / batch_size_; }
  std::vector<std::vector<std::size_t>> epoch(std::size_t epoch_index) const;

 private:
  std::size_t dataset_size_, batch_size_;
  std::uint64_t seed_;
};

// On-disk cache: one binary P6 file per sample and index.csv with the header
// `path,identity,age,gender`; paths are relative to the directory.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// 8-bit RGB image I/O (binary P6, maxval 255). Pixels are CHW in [0, 255].
void write_ppm(const std::filesystem::path& path, std::span<const double> chw_raw, std::size_t width,
               std::size_t height);
std::vector<double> read_ppm(const std::filesystem::path& path, std::size_t& width, std::size_t& height);

/// Git blob id of a file's contents: hex SHA-1 of "blob <size>\0<bytes>".
std::string git_blob_hash(const std::filesystem::path& path);

}  // namespace agrgan
