// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference sweep over every differentiable op and every network
// loss. Shared by the unit tests and the acceptance binary.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "agrgan/losses.hpp"
#include "agrgan/networks.hpp"
#include "agrgan/ops.hpp"
#include "agrgan/spectral_norm.hpp"
#include "gradcheck.hpp"

namespace agrgan::testing {

struct GradCase {
  std::string name;
  std::function<Tensor()> fn;
  std::vector<Tensor> inputs;
};

struct GradOutcome {
  std::string name;
  GradCheckResult result;
};

/// Tiny profile so that network-level checks stay cheap.
inline ScaleProfile tiny_profile() {
  ScaleProfile p;
  p.name = "custom";
  p.image_size = 16;
  p.enc_dim = 6;
  p.repr_blocks = 2;
  p.gen_blocks = 2;
  p.dface_blocks = 2;
  p.base_channels = 3;
  return p;
}

inline Tensor projection(const Tensor& out, std::uint64_t seed = 99) {
  Rng rng(seed);
  Tensor r = random_tensor(out.shape(), rng);
  return ops::sum(ops::mul(out, r));
}

inline std::vector<GradCase> op_cases() {
  Rng rng(16);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  Tensor pos = ops::add_scalar(ops::scale(random_tensor({3, 4}, rng), 0.4), 0.5).detach();
  Tensor bias3 = random_tensor({3}, rng);
  Tensor img = random_tensor({2, 3, 6, 6}, rng);
  Tensor kernel = random_tensor({4, 3, 3, 3}, rng, 0.5);
  Tensor dimg = random_tensor({2, 3, 3, 3}, rng);
  Tensor dkernel = random_tensor({3, 2, 5, 5}, rng, 0.5);
  Tensor fc_w = random_tensor({5, 4}, rng);
  Tensor fc_b = random_tensor({5}, rng);
  Tensor pool_in = random_tensor({1, 2, 5, 5}, rng);
  Tensor sn_w = random_tensor({4, 3, 2, 2}, rng);
  auto sn_state = std::make_shared<SpectralNormState>(SpectralNormState::for_weight(sn_w, rng));
  power_iterate(sn_w, *sn_state, 30);
  Tensor logits = random_tensor({3, 10}, rng, 2.0);
  auto targets = std::make_shared<std::vector<std::size_t>>(std::vector<std::size_t>{1, 7, 0});

  std::vector<GradCase> c{
      {"add", [=] { return projection(ops::add(a, b)); }, {a, b}},
      {"sub", [=] { return projection(ops::sub(a, b)); }, {a, b}},
      {"mul", [=] { return projection(ops::mul(a, b)); }, {a, b}},
      {"scale", [=] { return projection(ops::scale(a, -1.7)); }, {a}},
      {"add_scalar", [=] { return projection(ops::add_scalar(a, 0.3)); }, {a}},
      {"one_minus", [=] { return projection(ops::one_minus(a)); }, {a}},
      {"abs", [=] { return projection(ops::abs(a)); }, {a}},
      {"log_clamped", [=] { return projection(ops::log_clamped(pos)); }, {pos}},
      {"elu", [=] { return projection(ops::elu(a)); }, {a}},
      {"tanh", [=] { return projection(ops::tanh(a)); }, {a}},
      {"sigmoid", [=] { return projection(ops::sigmoid(a)); }, {a}},
      {"sum", [=] { return ops::sum(ops::mul(a, a)); }, {a}},
      {"mean", [=] { return ops::mean(ops::mul(a, b)); }, {a, b}},
      {"weighted_sum",
       [=] {
         Tensor terms[2] = {ops::sum(ops::mul(a, a)), ops::mean(b)};
         double w[2] = {0.7, 2.0};
         return ops::weighted_sum(terms, w);
       },
       {a, b}},
      {"reshape", [=] { return projection(ops::reshape(a, {4, 3})); }, {a}},
      {"concat", [=] { return projection(ops::concat(a, b)); }, {a, b}},
      {"fully_connected", [=] { return projection(ops::fully_connected(a, fc_w, fc_b)); }, {a, fc_w, fc_b}},
      {"bias_add", [=] { return projection(ops::bias_add(ops::reshape(a, {1, 3, 2, 2}), bias3)); }, {a, bias3}},
      {"conv2d", [=] { return projection(ops::conv2d(img, kernel, 2, 1)); }, {img, kernel}},
      {"deconv2d", [=] { return projection(ops::deconv2d(dimg, dkernel, 2, 2, 1)); }, {dimg, dkernel}},
      {"adaptive_avg_pool", [=] { return projection(ops::adaptive_avg_pool(pool_in, 2, 3)); }, {pool_in}},
      {"spectral_divide", [=] { return projection(ops::spectral_divide(sn_w, sn_state->u, sn_state->v)); }, {sn_w}},
      {"expected_index", [=] { return projection(ops::expected_index(logits)); }, {logits}},
      {"cross_entropy", [=] { return projection(ops::cross_entropy(logits, *targets)); }, {logits}},
      {"cosine_distance_rows", [=] { return projection(ops::cosine_distance_rows(a, b)); }, {a, b}},
      {"total_variation", [=] { return ops::total_variation(ops::reshape(a, {1, 1, 3, 4})); }, {a}},
      {"tile_planes", [=] { return projection(ops::tile_planes(a, 2, 3)); }, {a}},
  };
  return c;
}

/// Every loss the training loop optimizes, checked against network weights
/// and (where the loss consumes an image) against the image itself.
inline std::vector<GradCase> network_cases() {
  const ScaleProfile p = tiny_profile();
  auto model = std::make_shared<AgrGan>(p, 5);
  Rng rng(21);
  auto phi = std::make_shared<EmbeddingNet>(p.image_size, 3, 5, rng, "phi");
  nn::set_trainable(phi->parameters(), false);

  Tensor x = ops::tanh(random_tensor({2, 3, p.image_size, p.image_size}, rng, 1.5)).detach();
  std::vector<ConditionVector> cv{encode_condition(2, 0), encode_condition(8, 1)};
  Tensor cond = condition_batch(cv);
  auto targets = std::make_shared<std::vector<std::size_t>>(std::vector<std::size_t>{2, 8});
  Tensor prior = random_tensor({2, p.enc_dim}, rng);

  auto R = model->representor.parameters();
  auto G = model->generator.parameters();
  auto DF = model->face_discriminator.parameters();
  auto DE = model->enc_discriminator.parameters();
  auto E = model->age_estimator.parameters();
  auto pick = [](const std::vector<NamedTensor>& ps, std::initializer_list<std::size_t> which) {
    std::vector<Tensor> out;
    for (std::size_t i : which) out.push_back(ps.at(i).tensor);
    return out;
  };
  auto join = [](std::vector<Tensor> a, const std::vector<Tensor>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  auto m = model;
  // Stand-in for G's output, checked directly as a leaf.
  auto leaf = std::make_shared<Tensor>(ops::tanh(random_tensor({2, 3, p.image_size, p.image_size}, rng)).detach());
  auto generated = [m, x, cond] { return m->generator.forward(m->representor.forward(x, false), cond); };
  std::vector<GradCase> c{
      {"network:identity_loss", [=] { return losses::identity_loss(x, generated(), *phi); },
       join(pick(R, {0, 2}), pick(G, {0, 2, 3}))},
      {"network:age_gap_loss",
       [=] { return losses::age_gap_loss(*targets, m->age_estimator.forward(generated())); },
       join(pick(R, {0}), pick(G, {0, 4}))},
      {"network:tv_loss", [=] { return losses::tv_loss(generated()); }, join(pick(R, {2}), pick(G, {2, 5}))},
      {"network:d_face_loss",
       [=] {
         return losses::discriminator_loss(m->face_discriminator.forward(x, cond, false),
                                           m->face_discriminator.forward(generated().detach(), cond, false));
       },
       pick(DF, {0, 1, 2, 4})},
      {"network:g_adv_face",
       [=] { return losses::generator_loss(m->face_discriminator.forward(generated(), cond, false)); },
       join(pick(R, {0}), pick(G, {0, 2}))},
      {"network:d_enc_loss",
       [=] {
         return losses::discriminator_loss(m->enc_discriminator.forward(prior),
                                           m->enc_discriminator.forward(m->representor.forward(x, false).detach()));
       },
       pick(DE, {0, 1, 6, 7})},
      {"network:g_adv_enc",
       [=] { return losses::generator_loss(m->enc_discriminator.forward(m->representor.forward(x, false))); },
       pick(R, {0, 1, 4})},
      {"network:estimator_loss",
       [=] { return losses::estimator_supervised_loss(m->age_estimator.forward(x), *targets); }, pick(E, {0, 2, 8})},
      {"network:generated_image",
       [=] {
         Tensor terms[4] = {losses::identity_loss(x, *leaf, *phi),
                            losses::age_gap_loss(*targets, m->age_estimator.forward(*leaf)), losses::tv_loss(*leaf),
                            losses::generator_loss(m->face_discriminator.forward(*leaf, cond, false))};
         double w[4] = {1.0, 1.0, 1.0, 1.0};
         return ops::weighted_sum(terms, w);
       },
       {*leaf}},
      {"network:total_objective",
       [=] {
         Tensor code = m->representor.forward(x, false);
         Tensor y = m->generator.forward(code, cond);
         Tensor terms[5] = {losses::identity_loss(x, y, *phi),
                            losses::age_gap_loss(*targets, m->age_estimator.forward(y)), losses::tv_loss(y),
                            losses::generator_loss(m->face_discriminator.forward(y, cond, false)),
                            losses::generator_loss(m->enc_discriminator.forward(code))};
         double w[5] = {1.0, 0.5, 2.0, 1.0, 0.7};
         return ops::weighted_sum(terms, w);
       },
       join(pick(R, {0, 2, 4}), pick(G, {0, 2, 4}))},
  };
  // Keep the networks alive as long as the closures.
  for (auto& gc : c) {
    gc.fn = [fn = gc.fn, model, phi] { return fn(); };
  }
  return c;
}

inline std::vector<GradOutcome> run_gradient_suite(std::size_t coords = 10, double h = 1e-5) {
  std::vector<GradOutcome> out;
  auto cases = op_cases();
  auto net = network_cases();
  cases.insert(cases.end(), net.begin(), net.end());
  for (auto& c : cases) out.push_back({c.name, grad_check(c.fn, c.inputs, coords, h)});
  return out;
}

}  // namespace agrgan::testing
