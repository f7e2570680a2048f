// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "agrgan/networks.hpp"
#include "agrgan/tensor.hpp"

// Objective terms. Batched forms return the mean over the batch.
namespace agrgan::losses {

/// Mean cosine distance between φ(x_gen) and φ(x). φ must be frozen; the
/// reference embedding φ(x) carries no gradient.
Tensor identity_loss(const Tensor& x, const Tensor& x_gen, const EmbeddingNet& phi);

/// Mean |target − expected_group(logits)| over the batch. Targets must be 0..9.
Tensor age_gap_loss(std::span<const std::size_t> target_groups, const Tensor& logits);

/// Anisotropic total variation normalized by pixel count.
Tensor tv_loss(const Tensor& x_gen);

/// −mean log D(real) − mean log(1 − D(fake)), logs clamped at 1e-12.
Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake);

/// Non-saturating generator form: −mean log D(fake).
Tensor generator_loss(const Tensor& d_fake);

struct AdversarialLosses {
  Tensor d_loss, g_loss;
};

/// Face adversarial pair for one batch. `d_loss` trains D_face (inputs
/// detached); `g_loss` flows into x_gen with D_face's weights frozen.
AdversarialLosses adv_face_losses(FaceDiscriminator& d_face, const Tensor& x, const Tensor& real_cond,
                                  const Tensor& x_gen, const Tensor& fake_cond);

/// Latent adversarial pair: prior draws play "real", encoder codes "fake".
AdversarialLosses adv_enc_losses(EncDiscriminator& d_enc, const Tensor& enc, const Tensor& prior);

/// Mean of CE(softmax(logits), group) + |expected_group(logits) − group|.
Tensor estimator_supervised_loss(const Tensor& logits, std::span<const std::size_t> true_groups);

/// Throws NumericalError naming `who` if any discriminator output is NaN.
void check_probabilities(const Tensor& probabilities, const std::string& who);

}  // namespace agrgan::losses
