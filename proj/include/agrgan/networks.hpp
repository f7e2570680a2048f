// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrgan/labels.hpp"
#include "agrgan/nn.hpp"

namespace agrgan {

/// Layer recipe shared by the full-size and the desk-scale models.
struct ScaleProfile {
  std::string name = "desk";
  std::size_t image_size = 32;
  std::size_t enc_dim = 32;
  std::size_t repr_blocks = 3;
  std::size_t gen_blocks = 3;
  std::size_t dface_blocks = 3;
  std::size_t base_channels = 16;
  std::size_t max_channels = 512;

  /// 128x128 input, 5 representor / 6 generator / 6 discriminator blocks.
  static ScaleProfile paper();
  /// 32x32 input, 3/3/3 blocks, 16 base channels.
  static ScaleProfile desk();
  /// "paper" or "desk"; throws ArgumentError otherwise.
  static ScaleProfile by_name(const std::string& name);

  /// Throws ArgumentError if the block counts do not fit the image size.
  void validate() const;
  /// Generator seed resolution: image_size / 2^gen_blocks.
  std::size_t seed_spatial() const;
  /// Channel width after the i-th downsampling block: base·2^i capped at max.
  std::size_t channels(std::size_t level) const;

  bool operator==(const ScaleProfile&) const = default;
};

/// Encoder R: image -> latent code in (-1, 1)^enc_dim.
class Representor {
 public:
  Representor() = default;
  Representor(const ScaleProfile& profile, Rng& rng);

  /// x [N, 3, S, S] -> enc [N, enc_dim]. In training mode spectral-norm power
  /// iterations advance.
  Tensor forward(const Tensor& x, bool training = false);
  /// Spatial size of the feature map fed into the final FC layer.
  std::size_t feature_spatial() const;

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);
  std::vector<nn::Conv2d>& convs() { return convs_; }

 private:
  ScaleProfile profile_;
  std::vector<nn::Conv2d> convs_;
  nn::Linear fc_;
};

/// Decoder G: [enc ⧺ age one-hot ⧺ gender one-hot] -> image in (-1, 1).
class Generator {
 public:
  Generator() = default;
  Generator(const ScaleProfile& profile, Rng& rng);

  /// enc [N, enc_dim], cond [N, 12] -> [N, 3, S, S].
  Tensor forward(const Tensor& enc, const Tensor& cond) const;

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);

 private:
  ScaleProfile profile_;
  nn::Linear fc_;
  std::vector<nn::Deconv2d> deconvs_;
};

/// Conditional image discriminator. Conditioning enters as 12 constant planes
/// concatenated to the RGB channels.
class FaceDiscriminator {
 public:
  FaceDiscriminator() = default;
  FaceDiscriminator(const ScaleProfile& profile, Rng& rng);

  /// x [N, 3, S, S], cond [N, 12] -> realness [N, 1] in (0, 1).
  Tensor forward(const Tensor& x, const Tensor& cond, bool training = false);
  std::size_t input_channels() const { return 3 + kConditionDim; }

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);
  std::vector<nn::Conv2d>& convs() { return convs_; }

 private:
  ScaleProfile profile_;
  std::vector<nn::Conv2d> convs_;
  nn::Linear fc_;
};

/// Latent-code discriminator: three 64-wide ELU layers and a sigmoid head.
class EncDiscriminator {
 public:
  EncDiscriminator() = default;
  EncDiscriminator(std::size_t enc_dim, Rng& rng);

  /// code [N, enc_dim] -> realness [N, 1] in (0, 1).
  Tensor forward(const Tensor& code) const;

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);

 private:
  std::vector<nn::Linear> layers_;
};

/// Four stride-2 conv-ELU blocks, adaptive average pooling to 1x1, FC to 10
/// logits. Accepts any input of at least 8x8.
class AgeEstimator {
 public:
  AgeEstimator() = default;
  AgeEstimator(std::size_t base_channels, Rng& rng, std::string name = "E");

  Tensor forward(const Tensor& x) const;

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);

 private:
  std::string name_;
  std::vector<nn::Conv2d> convs_;
  nn::Linear fc_;
};

/// Σ i·softmax(logits)_i per row: the differentiable predicted group index.
Tensor expected_group(const Tensor& logits);

/// Identity embedding network used for φ and for the verifier.
class EmbeddingNet {
 public:
  EmbeddingNet() = default;
  EmbeddingNet(std::size_t image_size, std::size_t base_channels, std::size_t embed_dim, Rng& rng,
               std::string name = "phi");

  /// x [N, 3, S, S] -> [N, embed_dim].
  Tensor forward(const Tensor& x) const;
  std::size_t embed_dim() const { return embed_dim_; }

  std::vector<NamedTensor> parameters() const;
  void collect_state(std::vector<nn::StateEntry>& out);

 private:
  std::string name_;
  std::size_t embed_dim_ = 0;
  std::vector<nn::Conv2d> convs_;
  nn::Linear fc1_, fc2_;
};

/// The five trained networks plus their shared profile.
struct AgrGan {
  ScaleProfile profile;
  Representor representor;
  Generator generator;
  FaceDiscriminator face_discriminator;
  EncDiscriminator enc_discriminator;
  AgeEstimator age_estimator;

  AgrGan() = default;
  AgrGan(const ScaleProfile& profile, std::uint64_t seed);

  /// G(R(x), a, g) in inference mode.
  Tensor transform(const Tensor& x, const Tensor& cond);

  /// Every persisted slot, prefixed "R.", "G.", "Dface.", "Denc.", "E.".
  std::vector<nn::StateEntry> state();
};

}  // namespace agrgan
