// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/networks.hpp"

#include <algorithm>

#include "agrgan/errors.hpp"
#include "agrgan/ops.hpp"

namespace agrgan {

ScaleProfile ScaleProfile::paper() {
  ScaleProfile p;
  p.name = "paper";
  p.image_size = 128;
  p.enc_dim = 50;
  p.repr_blocks = 5;
  p.gen_blocks = 6;
  p.dface_blocks = 6;
  p.base_channels = 64;
  return p;
}

ScaleProfile ScaleProfile::desk() { return ScaleProfile{}; }

ScaleProfile ScaleProfile::by_name(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw ArgumentError("unknown profile '" + name + "' (expected paper or desk)");
}

void ScaleProfile::validate() const {
  auto fail = [this](const std::string& what) {
    throw ArgumentError("profile '" + name + "': " + what);
  };
  if (image_size < 16 || (image_size & (image_size - 1)) != 0) fail("image_size must be a power of two >= 16");
  if (enc_dim == 0 || base_channels == 0 || max_channels < base_channels) fail("channel/encoding sizes must be positive");
  if (repr_blocks == 0 || (image_size >> repr_blocks) < 2) fail("image_size / 2^repr_blocks must be >= 2");
  if (gen_blocks == 0 || (image_size >> gen_blocks) < 2) fail("image_size / 2^gen_blocks must be >= 2");
  if (dface_blocks == 0 || (image_size >> dface_blocks) < 1) fail("image_size / 2^dface_blocks must be >= 1");
}

std::size_t ScaleProfile::seed_spatial() const { return image_size >> gen_blocks; }

std::size_t ScaleProfile::channels(std::size_t level) const {
  std::size_t c = base_channels;
  for (std::size_t i = 0; i < level && c < max_channels; ++i) c *= 2;
  return std::min(c, max_channels);
}

namespace {

void check_image(const Tensor& x, std::size_t size, const char* who) {
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw DimensionError(std::string(who) + ": expected [N, 3, H, W] input, got " + shape_str(x.shape()));
  }
  if (x.dim(2) != size || x.dim(3) != size) {
    throw DimensionError(std::string(who) + ": axis 2/3 must be " + std::to_string(size) + ", got " +
                         shape_str(x.shape()));
  }
}

void check_cond(const Tensor& cond, std::size_t batch, const char* who) {
  if (cond.rank() != 2 || cond.dim(1) != kConditionDim || cond.dim(0) != batch) {
    throw DimensionError(std::string(who) + ": condition must be [" + std::to_string(batch) + ", 12], got " +
                         shape_str(cond.shape()));
  }
}

template <typename Layer>
void collect_layers(std::vector<Layer>& layers, const std::string& prefix,
                    std::vector<nn::StateEntry>& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect_state(prefix + std::to_string(i), out);
}

template <typename Layer>
void collect_params(const std::vector<Layer>& layers, const std::string& prefix,
                    std::vector<NamedTensor>& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect_parameters(prefix + std::to_string(i), out);
}

}  // namespace

// ---------------------------------------------------------------------------
// Representor

Representor::Representor(const ScaleProfile& profile, Rng& rng) : profile_(profile) {
  profile_.validate();
  for (std::size_t i = 0; i < profile_.repr_blocks; ++i) {
    std::size_t in = i == 0 ? 3 : profile_.channels(i - 1);
    convs_.emplace_back(in, profile_.channels(i), 5, 2, 2, true, rng);
  }
  std::size_t fs = feature_spatial();
  fc_ = nn::Linear(profile_.channels(profile_.repr_blocks - 1) * fs * fs, profile_.enc_dim, rng);
}

std::size_t Representor::feature_spatial() const { return profile_.image_size >> profile_.repr_blocks; }

Tensor Representor::forward(const Tensor& x, bool training) {
  check_image(x, profile_.image_size, "representor");
  Tensor h = x;
  for (auto& conv : convs_) h = ops::elu(conv.forward(h, training));
  return ops::tanh(fc_.forward(nn::flatten(h)));
}

std::vector<NamedTensor> Representor::parameters() const {
  std::vector<NamedTensor> out;
  collect_params(convs_, "R.conv", out);
  fc_.collect_parameters("R.fc", out);
  return out;
}

void Representor::collect_state(std::vector<nn::StateEntry>& out) {
  collect_layers(convs_, "R.conv", out);
  fc_.collect_state("R.fc", out);
}

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const ScaleProfile& profile, Rng& rng) : profile_(profile) {
  profile_.validate();
  std::size_t blocks = profile_.gen_blocks, seed = profile_.seed_spatial();
  fc_ = nn::Linear(profile_.enc_dim + kConditionDim, seed * seed * profile_.channels(blocks - 1), rng);
  for (std::size_t j = 0; j < blocks; ++j) {
    std::size_t in = profile_.channels(blocks - 1 - j);
    std::size_t out = j + 1 == blocks ? 3 : profile_.channels(blocks - 2 - j);
    deconvs_.emplace_back(in, out, 5, 2, 2, rng);
  }
}

Tensor Generator::forward(const Tensor& enc, const Tensor& cond) const {
  if (enc.rank() != 2 || enc.dim(1) != profile_.enc_dim) {
    throw DimensionError("generator: enc must be [N, " + std::to_string(profile_.enc_dim) + "], got " +
                         shape_str(enc.shape()));
  }
  check_cond(cond, enc.dim(0), "generator");
  std::size_t n = enc.dim(0), seed = profile_.seed_spatial();
  Tensor h = ops::elu(fc_.forward(ops::concat(enc, cond)));
  h = ops::reshape(h, {n, profile_.channels(profile_.gen_blocks - 1), seed, seed});
  for (std::size_t j = 0; j < deconvs_.size(); ++j) {
    h = deconvs_[j].forward(h);
    h = j + 1 == deconvs_.size() ? ops::tanh(h) : ops::elu(h);
  }
  return h;
}

std::vector<NamedTensor> Generator::parameters() const {
  std::vector<NamedTensor> out;
  fc_.collect_parameters("G.fc", out);
  collect_params(deconvs_, "G.deconv", out);
  return out;
}

void Generator::collect_state(std::vector<nn::StateEntry>& out) {
  fc_.collect_state("G.fc", out);
  collect_layers(deconvs_, "G.deconv", out);
}

// ---------------------------------------------------------------------------
// FaceDiscriminator

FaceDiscriminator::FaceDiscriminator(const ScaleProfile& profile, Rng& rng) : profile_(profile) {
  profile_.validate();
  for (std::size_t i = 0; i < profile_.dface_blocks; ++i) {
    std::size_t in = i == 0 ? input_channels() : profile_.channels(i - 1);
    convs_.emplace_back(in, profile_.channels(i), 5, 2, 2, true, rng);
  }
  std::size_t fs = profile_.image_size >> profile_.dface_blocks;
  fc_ = nn::Linear(profile_.channels(profile_.dface_blocks - 1) * fs * fs, 1, rng);
}

Tensor FaceDiscriminator::forward(const Tensor& x, const Tensor& cond, bool training) {
  check_image(x, profile_.image_size, "face discriminator");
  check_cond(cond, x.dim(0), "face discriminator");
  Tensor h = ops::concat(x, ops::tile_planes(cond, x.dim(2), x.dim(3)));
  for (auto& conv : convs_) h = ops::elu(conv.forward(h, training));
  return ops::sigmoid(fc_.forward(nn::flatten(h)));
}

std::vector<NamedTensor> FaceDiscriminator::parameters() const {
  std::vector<NamedTensor> out;
  collect_params(convs_, "Dface.conv", out);
  fc_.collect_parameters("Dface.fc", out);
  return out;
}

void FaceDiscriminator::collect_state(std::vector<nn::StateEntry>& out) {
  collect_layers(convs_, "Dface.conv", out);
  fc_.collect_state("Dface.fc", out);
}

// ---------------------------------------------------------------------------
// EncDiscriminator

EncDiscriminator::EncDiscriminator(std::size_t enc_dim, Rng& rng) {
  layers_.emplace_back(enc_dim, 64, rng);
  layers_.emplace_back(64, 64, rng);
  layers_.emplace_back(64, 64, rng);
  layers_.emplace_back(64, 1, rng);
}

Tensor EncDiscriminator::forward(const Tensor& code) const {
  if (code.rank() != 2 || code.dim(1) != layers_.front().weight.dim(1)) {
    throw DimensionError("enc discriminator: code must be [N, " +
                         std::to_string(layers_.front().weight.dim(1)) + "], got " + shape_str(code.shape()));
  }
  Tensor h = code;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = ops::elu(layers_[i].forward(h));
  return ops::sigmoid(layers_.back().forward(h));
}

std::vector<NamedTensor> EncDiscriminator::parameters() const {
  std::vector<NamedTensor> out;
  collect_params(layers_, "Denc.fc", out);
  return out;
}

void EncDiscriminator::collect_state(std::vector<nn::StateEntry>& out) { collect_layers(layers_, "Denc.fc", out); }

// ---------------------------------------------------------------------------
// AgeEstimator

AgeEstimator::AgeEstimator(std::size_t base_channels, Rng& rng, std::string name) : name_(std::move(name)) {
  std::size_t in = 3;
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t out = base_channels << std::min<std::size_t>(i, 2);
    convs_.emplace_back(in, out, 3, 2, 1, false, rng);
    in = out;
  }
  fc_ = nn::Linear(in, kAgeGroups, rng);
}

Tensor AgeEstimator::forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) < 8 || x.dim(3) < 8) {
    throw DimensionError("age estimator: expected [N, 3, H>=8, W>=8], got " + shape_str(x.shape()));
  }
  Tensor h = x;
  for (auto conv : convs_) h = ops::elu(conv.forward(h, false));
  return fc_.forward(nn::flatten(ops::adaptive_avg_pool(h, 1, 1)));
}

std::vector<NamedTensor> AgeEstimator::parameters() const {
  std::vector<NamedTensor> out;
  collect_params(convs_, name_ + ".conv", out);
  fc_.collect_parameters(name_ + ".fc", out);
  return out;
}

void AgeEstimator::collect_state(std::vector<nn::StateEntry>& out) {
  collect_layers(convs_, name_ + ".conv", out);
  fc_.collect_state(name_ + ".fc", out);
}

Tensor expected_group(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) != kAgeGroups) {
    throw DimensionError("expected_group: logits must be [N, 10], got " + shape_str(logits.shape()));
  }
  return ops::expected_index(logits);
}

// ---------------------------------------------------------------------------
// EmbeddingNet

EmbeddingNet::EmbeddingNet(std::size_t image_size, std::size_t base_channels, std::size_t embed_dim, Rng& rng,
                           std::string name)
    : name_(std::move(name)), embed_dim_(embed_dim) {
  std::size_t in = 3;
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t out = base_channels << i;
    convs_.emplace_back(in, out, 3, 2, 1, false, rng);
    in = out;
  }
  std::size_t fs = (image_size + 7) / 8;
  fc1_ = nn::Linear(in * fs * fs, 64, rng);
  fc2_ = nn::Linear(64, embed_dim, rng);
}

Tensor EmbeddingNet::forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw DimensionError("embedding net: expected [N, 3, H, W], got " + shape_str(x.shape()));
  }
  Tensor h = x;
  for (auto conv : convs_) h = ops::elu(conv.forward(h, false));
  return fc2_.forward(ops::elu(fc1_.forward(nn::flatten(h))));
}

std::vector<NamedTensor> EmbeddingNet::parameters() const {
  std::vector<NamedTensor> out;
  collect_params(convs_, name_ + ".conv", out);
  fc1_.collect_parameters(name_ + ".fc1", out);
  fc2_.collect_parameters(name_ + ".fc2", out);
  return out;
}

void EmbeddingNet::collect_state(std::vector<nn::StateEntry>& out) {
  collect_layers(convs_, name_ + ".conv", out);
  fc1_.collect_state(name_ + ".fc1", out);
  fc2_.collect_state(name_ + ".fc2", out);
}

// ---------------------------------------------------------------------------
// AgrGan

AgrGan::AgrGan(const ScaleProfile& p, std::uint64_t seed) : profile(p) {
  profile.validate();
  Rng r_rng(derive_seed(seed, 1)), g_rng(derive_seed(seed, 2)), df_rng(derive_seed(seed, 3)),
      de_rng(derive_seed(seed, 4)), e_rng(derive_seed(seed, 5));
  representor = Representor(profile, r_rng);
  generator = Generator(profile, g_rng);
  face_discriminator = FaceDiscriminator(profile, df_rng);
  enc_discriminator = EncDiscriminator(profile.enc_dim, de_rng);
  age_estimator = AgeEstimator(profile.base_channels, e_rng, "E");
}

Tensor AgrGan::transform(const Tensor& x, const Tensor& cond) {
  return generator.forward(representor.forward(x, false), cond);
}

std::vector<nn::StateEntry> AgrGan::state() {
  std::vector<nn::StateEntry> out;
  representor.collect_state(out);
  generator.collect_state(out);
  face_discriminator.collect_state(out);
  enc_discriminator.collect_state(out);
  age_estimator.collect_state(out);
  return out;
}

}  // namespace agrgan
