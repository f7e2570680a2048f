// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "agrgan/errors.hpp"
#include "agrgan/rng.hpp"

namespace agrgan {

std::vector<std::size_t> Dataset::identities() const {
  std::set<std::size_t> ids;
  for (const auto& s : samples) ids.insert(s.identity);
  return {ids.begin(), ids.end()};
}

std::array<std::size_t, kAgeGroups> Dataset::group_histogram() const {
  std::array<std::size_t, kAgeGroups> h{};
  for (const auto& s : samples) ++h[s.age_group()];
  return h;
}

SyntheticFactors identity_factors(std::uint64_t seed, std::size_t identity) {
  Rng rng(derive_seed(seed, 0x1D000000ULL + identity));
  SyntheticFactors f{};
  f.center_x = rng.uniform(0.38, 0.62);
  f.center_y = rng.uniform(0.38, 0.62);
  f.half_width = rng.uniform(0.2, 0.32);
  f.half_height = rng.uniform(0.2, 0.32);
  for (double& c : f.glyph_rgb) c = rng.uniform(0.35, 0.9);
  for (double& c : f.background_rgb) c = rng.uniform(0.0, 0.3);
  f.eye_dx = rng.uniform(-0.5, 0.5) * f.half_width;
  f.eye_dy = rng.uniform(-0.5, 0.5) * f.half_height;
  f.eye_level = rng.uniform() < 0.5 ? 0.05 : 1.0;
  return f;
}

std::vector<double> render_synthetic(std::uint64_t seed, std::size_t identity, double age_years, std::size_t gender,
                                     std::size_t size) {
  if (gender >= kGenders) throw ArgumentError("gender must be 0 or 1");
  const SyntheticFactors f = identity_factors(seed, identity);
  const std::size_t group = age_to_group(age_years);
  const double t = static_cast<double>(group) / static_cast<double>(kAgeGroups - 1);
  const double darkening = 0.6 * std::min(age_years, 80.0) / 80.0;
  const double frequency = 1.5 + static_cast<double>(group);
  const double radius = (1.0 - t) * std::min(f.half_width, f.half_height);
  const double eye_radius = 0.07;

  double glyph[3] = {f.glyph_rgb[0], f.glyph_rgb[1], f.glyph_rgb[2]};
  if (gender == 1) {
    glyph[0] += 0.12;
    glyph[2] -= 0.12;
  }

  const double inv = 1.0 / static_cast<double>(size);
  std::vector<double> out(3 * size * size);
  for (std::size_t i = 0; i < size; ++i) {
    const double v = (static_cast<double>(i) + 0.5) * inv;
    for (std::size_t j = 0; j < size; ++j) {
      const double u = (static_cast<double>(j) + 0.5) * inv;
      const double ax = std::abs(u - f.center_x), ay = std::abs(v - f.center_y);
      const double ex = std::max(ax - (f.half_width - radius), 0.0);
      const double ey = std::max(ay - (f.half_height - radius), 0.0);
      const bool inside = ax <= f.half_width && ay <= f.half_height && ex * ex + ey * ey <= radius * radius;
      const double eu = u - (f.center_x + f.eye_dx), ev = v - (f.center_y + f.eye_dy);
      const bool eye = inside && eu * eu + ev * ev <= eye_radius * eye_radius;
      const double stripe = 1.0 + 0.35 * std::sin(2.0 * std::numbers::pi * frequency * u);
      const double shade = 1.0 - darkening * v;
      for (std::size_t c = 0; c < 3; ++c) {
        double value = eye ? f.eye_level : inside ? glyph[c] * stripe : f.background_rgb[c];
        double raw = std::round(255.0 * std::clamp(value * shade, 0.0, 1.0));
        out[(c * size + i) * size + j] = normalize_intensity(raw);
      }
    }
  }
  return out;
}

Dataset generate_synthetic(std::size_t identity_count, std::size_t samples_per_identity, std::uint64_t seed,
                           std::size_t size) {
  if (identity_count == 0 || samples_per_identity == 0) {
    throw ArgumentError("generate_synthetic: identity and per-identity counts must be >= 1");
  }
  if (size < 8) throw ArgumentError("generate_synthetic: image size must be >= 8");
  Dataset data;
  data.image_size = size;
  data.samples.reserve(identity_count * samples_per_identity);
  for (std::size_t id = 0; id < identity_count; ++id) {
    Rng rng(derive_seed(seed, 0xA6E00000ULL + id));
    std::size_t gender = static_cast<std::size_t>(rng.index(kGenders));
    for (std::size_t k = 0; k < samples_per_identity; ++k) {
      std::size_t group = static_cast<std::size_t>(rng.index(kAgeGroups));
      auto [lo, hi] = AgeBinning::range(group);
      double age = rng.uniform(lo, hi);
      data.samples.push_back({render_synthetic(seed, id, age, gender, size), id, age, gender});
    }
  }
  return data;
}

std::pair<Dataset, Dataset> split_by_identity(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train_fraction must be in (0, 1)");
  auto ids = data.identities();
  Rng rng(derive_seed(seed, 0x5B117ULL));
  rng.shuffle(ids);
  std::size_t n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(ids.size())));
  std::set<std::size_t> train_ids(ids.begin(), ids.begin() + static_cast<long>(n_train));
  Dataset train, eval;
  train.image_size = eval.image_size = data.image_size;
  for (const auto& s : data.samples) (train_ids.count(s.identity) ? train : eval).samples.push_back(s);
  return {std::move(train), std::move(eval)};
}

Tensor image_batch(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t s = data.image_size, per = 3 * s * s;
  std::vector<double> out(indices.size() * per);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& px = data.samples.at(indices[k]).pixels;
    if (px.size() != per) throw DimensionError("sample " + std::to_string(indices[k]) + " has wrong pixel count");
    std::copy(px.begin(), px.end(), out.begin() + static_cast<long>(k * per));
  }
  return Tensor::from_data({indices.size(), 3, s, s}, std::move(out));
}

Tensor image_batch(const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return image_batch(data, all);
}

BatchIterator::BatchIterator(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : dataset_size_(dataset_size), batch_size_(batch_size), seed_(seed) {
  if (dataset_size == 0) throw ArgumentError("batch iterator: dataset is empty");
  if (batch_size == 0 || batch_size > dataset_size) {
    throw ArgumentError("batch iterator: batch size " + std::to_string(batch_size) + " not in 1.." +
                        std::to_string(dataset_size));
  }
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch(std::size_t epoch_index) const {
  std::vector<std::size_t> order(dataset_size_);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed_, 0xE90C0000ULL + epoch_index));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
    batches.emplace_back(order.begin() + static_cast<long>(b * batch_size_),
                         order.begin() + static_cast<long>((b + 1) * batch_size_));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Disk cache

void write_ppm(const std::filesystem::path& path, std::span<const double> chw_raw, std::size_t width,
               std::size_t height) {
  if (chw_raw.size() != 3 * width * height) throw DimensionError("write_ppm: pixel count does not match size");
  std::string bytes = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t plane = width * height;
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      double v = std::clamp(std::round(chw_raw[c * plane + p]), 0.0, 255.0);
      bytes.push_back(static_cast<char>(static_cast<unsigned char>(v)));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::vector<double> read_ppm(const std::filesystem::path& path, std::size_t& width, std::size_t& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image '" + path.string() + "'");
  std::string magic;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P6" || maxval != 255 || width == 0 || height == 0) {
    throw FormatError("'" + path.string() + "' is not an 8-bit binary P6 image");
  }
  in.get();  // single whitespace after the header
  std::vector<unsigned char> bytes(3 * width * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError("'" + path.string() + "' is truncated");
  const std::size_t plane = width * height;
  std::vector<double> chw(bytes.size());
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) chw[c * plane + p] = bytes[3 * p + c];
  return chw;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw FormatError("cannot create '" + (dir / "images").string() + "': " + ec.message());
  std::ostringstream index;
  index << "path,identity,age,gender\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& s = data.samples[k];
    std::ostringstream name;
    name << "images/" << std::setw(6) << std::setfill('0') << k << ".ppm";
    write_ppm(dir / name.str(), denormalize(s.pixels), data.image_size, data.image_size);
    index << name.str() << ',' << s.identity << ',' << std::setprecision(17) << s.age_years << ',' << s.gender
          << '\n';
  }
  std::ofstream out(dir / "index.csv", std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + (dir / "index.csv").string() + "'");
  out << index.str();
  if (!out) throw FormatError("failed writing '" + (dir / "index.csv").string() + "'");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw FormatError("no dataset index at '" + (dir / "index.csv").string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "path,identity,age,gender") throw FormatError("unexpected index.csv header: " + line);
  Dataset data;
  data.image_size = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string path, id, age, gender;
    std::getline(row, path, ',');
    std::getline(row, id, ',');
    std::getline(row, age, ',');
    std::getline(row, gender, ',');
    LabeledImage s;
    try {
      s.identity = std::stoul(id);
      s.age_years = std::stod(age);
      s.gender = std::stoul(gender);
    } catch (const std::exception&) {
      throw FormatError("malformed index.csv row: " + line);
    }
    std::size_t w = 0, h = 0;
    s.pixels = normalize(read_ppm(dir / path, w, h));
    if (w != h || (data.image_size && w != data.image_size)) {
      throw FormatError("image '" + path + "' is " + std::to_string(w) + "x" + std::to_string(h) +
                        ", expected square images of one size");
    }
    data.image_size = w;
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw FormatError("dataset index at '" + dir.string() + "' lists no samples");
  return data;
}

std::string git_blob_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();
  std::string header = "blob " + std::to_string(content.size());
  header.push_back('\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
            EVP_DigestUpdate(ctx, header.data(), header.size()) &&
            EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw FormatError("sha1 digest failed for '" + path.string() + "'");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace agrgan
