// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/losses.hpp"

#include <cmath>

#include "agrgan/errors.hpp"
#include "agrgan/ops.hpp"

namespace agrgan::losses {

namespace {

void check_targets(std::span<const std::size_t> groups, std::size_t batch, const char* who) {
  if (groups.size() != batch) {
    throw DimensionError(std::string(who) + ": " + std::to_string(groups.size()) + " targets for batch of " +
                         std::to_string(batch));
  }
  for (std::size_t g : groups) {
    if (g >= kAgeGroups) throw ArgumentError(std::string(who) + ": target group " + std::to_string(g) + " not in 0..9");
  }
}

}  // namespace

Tensor identity_loss(const Tensor& x, const Tensor& x_gen, const EmbeddingNet& phi) {
  if (x.shape() != x_gen.shape()) {
    throw DimensionError("identity_loss: x is " + shape_str(x.shape()) + " but x_gen is " + shape_str(x_gen.shape()));
  }
  Tensor reference;
  {
    NoGradGuard guard;
    reference = phi.forward(x);
  }
  return ops::mean(ops::cosine_distance_rows(phi.forward(x_gen), reference));
}

Tensor age_gap_loss(std::span<const std::size_t> target_groups, const Tensor& logits) {
  Tensor expected = expected_group(logits);
  check_targets(target_groups, logits.dim(0), "age_gap_loss");
  std::vector<double> t(target_groups.begin(), target_groups.end());
  const std::size_t n = t.size();
  Tensor target = Tensor::from_data({n}, std::move(t));
  return ops::mean(ops::abs(ops::sub(target, expected)));
}

Tensor tv_loss(const Tensor& x_gen) { return ops::total_variation(x_gen); }

void check_probabilities(const Tensor& p, const std::string& who) {
  for (std::size_t i = 0; i < p.numel(); ++i) {
    if (std::isnan(p.data()[i])) {
      throw NumericalError(who + ": NaN output at row " + std::to_string(i) + " of " + shape_str(p.shape()));
    }
  }
}

Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake) {
  Tensor real_term = ops::mean(ops::log_clamped(d_real));
  Tensor fake_term = ops::mean(ops::log_clamped(ops::one_minus(d_fake)));
  return ops::scale(ops::add(real_term, fake_term), -1.0);
}

Tensor generator_loss(const Tensor& d_fake) { return ops::scale(ops::mean(ops::log_clamped(d_fake)), -1.0); }

AdversarialLosses adv_face_losses(FaceDiscriminator& d_face, const Tensor& x, const Tensor& real_cond,
                                  const Tensor& x_gen, const Tensor& fake_cond) {
  Tensor d_real = d_face.forward(x, real_cond, true);
  Tensor d_fake_detached = d_face.forward(x_gen.detach(), fake_cond, false);
  Tensor d_fake = d_face.forward(x_gen, fake_cond, false);
  check_probabilities(d_real, "D_face(real)");
  check_probabilities(d_fake, "D_face(fake)");
  return {discriminator_loss(d_real, d_fake_detached), generator_loss(d_fake)};
}

AdversarialLosses adv_enc_losses(EncDiscriminator& d_enc, const Tensor& enc, const Tensor& prior) {
  if (enc.shape() != prior.shape()) {
    throw DimensionError("adv_enc_losses: enc is " + shape_str(enc.shape()) + " but prior is " +
                         shape_str(prior.shape()));
  }
  Tensor d_prior = d_enc.forward(prior);
  Tensor d_code_detached = d_enc.forward(enc.detach());
  Tensor d_code = d_enc.forward(enc);
  check_probabilities(d_prior, "D_enc(prior)");
  check_probabilities(d_code, "D_enc(enc)");
  return {discriminator_loss(d_prior, d_code_detached), generator_loss(d_code)};
}

Tensor estimator_supervised_loss(const Tensor& logits, std::span<const std::size_t> true_groups) {
  check_targets(true_groups, logits.dim(0), "estimator_supervised_loss");
  Tensor ce = ops::cross_entropy(logits, true_groups);
  std::vector<double> t(true_groups.begin(), true_groups.end());
  const std::size_t n = t.size();
  Tensor target = Tensor::from_data({n}, std::move(t));
  Tensor mae = ops::abs(ops::sub(expected_group(logits), target));
  return ops::mean(ops::add(ce, mae));
}

}  // namespace agrgan::losses
