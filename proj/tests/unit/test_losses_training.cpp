// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>

#include "agrgan/checkpoint.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/losses.hpp"
#include "agrgan/ops.hpp"
#include "agrgan/training.hpp"
#include "doctest.h"
#include "gradient_suite.hpp"
#include "test_util.hpp"

using namespace agrgan;
using agrgan::testing::slurp;
using agrgan::testing::TempDir;
using agrgan::testing::tiny_profile;

namespace {

Tensor probs(std::vector<double> p) {
  const std::size_t n = p.size();
  return Tensor::from_data({n, 1}, std::move(p));
}

std::vector<std::vector<double>> values_of(const std::vector<NamedTensor>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

// A tiny model, a frozen embedding and one labelled batch.
struct Fixture {
  ScaleProfile profile = tiny_profile();
  AgrGan model{profile, 3};
  EmbeddingNet phi;
  Dataset data = generate_synthetic(8, 4, 17, profile.image_size);
  Tensor x;
  std::vector<std::size_t> groups, genders, targets;

  Fixture() {
    Rng rng(4);
    phi = EmbeddingNet(profile.image_size, 3, 5, rng, "phi");
    std::vector<std::size_t> idx{0, 5, 9, 14, 22, 31};
    x = image_batch(data, idx);
    for (std::size_t i : idx) {
      groups.push_back(data.samples[i].age_group());
      genders.push_back(data.samples[i].gender);
    }
    targets = {9, 0, 4, 7, 2, 5};
  }

  TrainConfig config(std::size_t batch = 8) const {
    TrainConfig c = TrainConfig::defaults_for(profile);
    c.batch_size = batch;
    c.seed = 12;
    c.epochs = 2;
    return c;
  }
};

}  // namespace

TEST_CASE("identity loss") {
  Fixture f;
  CHECK(std::abs(losses::identity_loss(f.x, f.x, f.phi).item()) <= 1e-12);
  // The cosine distance behind it on hand-built embeddings.
  Tensor a = Tensor::from_data({2, 2}, {1, 0, 3, 4});
  Tensor b = Tensor::from_data({2, 2}, {0, 2, -6, -8});
  auto d = ops::cosine_distance_rows(a, b);
  CHECK(d.at(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.at(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("age gap loss") {
  Tensor uniform = Tensor::zeros({1, 10});
  std::vector<std::size_t> t0{0}, t9{9}, bad{10};
  CHECK(losses::age_gap_loss(t0, uniform).item() == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(losses::age_gap_loss(t9, uniform).item() == doctest::Approx(4.5).epsilon(1e-12));
  std::vector<double> peaked(10, 0.0);
  peaked[3] = 60.0;
  std::vector<std::size_t> t3{3};
  CHECK(losses::age_gap_loss(t3, Tensor::from_data({1, 10}, peaked)).item() <= 1e-12);
  CHECK_THROWS_AS(losses::age_gap_loss(bad, uniform), ArgumentError);
}

TEST_CASE("total variation loss") {
  CHECK(losses::tv_loss(Tensor::full({1, 3, 4, 4}, 0.3)).item() == 0.0);
  CHECK(losses::tv_loss(Tensor::from_data({1, 1, 1, 2}, {0.0, 1.0})).item() == doctest::Approx(0.5));
  std::vector<double> board(16);
  for (std::size_t i = 0; i < 16; ++i) board[i] = ((i / 4 + i % 4) % 2) ? 1.0 : -1.0;
  CHECK(losses::tv_loss(Tensor::from_data({1, 1, 4, 4}, board)).item() > 0.0);
}

TEST_CASE("discriminator and generator losses") {
  Tensor half = probs({0.5, 0.5, 0.5});
  CHECK(losses::discriminator_loss(half, half).item() == doctest::Approx(2 * std::numbers::ln2).epsilon(1e-12));
  const double eps = 1e-9;
  CHECK(losses::discriminator_loss(probs({1 - eps}), probs({eps})).item() < 1e-8);

  // Scalar hand oracle on four fixed outputs.
  std::vector<double> r{0.9, 0.7, 0.2, 0.55}, f{0.1, 0.6, 0.35, 0.8};
  double expect = 0;
  for (int i = 0; i < 4; ++i) expect += -std::log(r[i]) / 4 - std::log(1 - f[i]) / 4;
  CHECK(std::abs(losses::discriminator_loss(probs(r), probs(f)).item() - expect) <= 1e-12);
  double g_expect = 0;
  for (double v : f) g_expect += -std::log(v) / 4;
  CHECK(std::abs(losses::generator_loss(probs(f)).item() - g_expect) <= 1e-12);

  // Clamped logs stay finite at the boundary.
  CHECK(std::isfinite(losses::discriminator_loss(probs({0.0}), probs({1.0})).item()));
}

TEST_CASE("generator loss decreases as D(fake) rises") {
  double prev = std::numeric_limits<double>::infinity();
  for (double p = 0.01; p < 1.0; p += 0.01) {
    double g = losses::generator_loss(probs({p})).item();
    CHECK(g < prev);
    prev = g;
  }
}

TEST_CASE("estimator supervised loss") {
  std::vector<double> hot(10, 0.0);
  hot[6] = 20.0;
  std::vector<std::size_t> t6{6}, t0{0};
  CHECK(losses::estimator_supervised_loss(Tensor::from_data({1, 10}, hot), t6).item() <= 1e-6);
  CHECK(losses::estimator_supervised_loss(Tensor::zeros({1, 10}), t0).item() ==
        doctest::Approx(std::log(10.0) + 4.5).epsilon(1e-12));

  Rng rng(8);
  std::vector<double> z(20);
  for (double& v : z) v = rng.normal() * 2;
  std::vector<std::size_t> truth{3, 8};
  double expect = 0;
  for (int row = 0; row < 2; ++row) {
    double mx = -1e300, sum = 0, mean = 0;
    for (int k = 0; k < 10; ++k) mx = std::max(mx, z[row * 10 + k]);
    for (int k = 0; k < 10; ++k) sum += std::exp(z[row * 10 + k] - mx);
    for (int k = 0; k < 10; ++k) mean += k * std::exp(z[row * 10 + k] - mx) / sum;
    double ce = -(z[row * 10 + truth[row]] - mx - std::log(sum));
    expect += (ce + std::abs(mean - static_cast<double>(truth[row]))) / 2;
  }
  CHECK(std::abs(losses::estimator_supervised_loss(Tensor::from_data({2, 10}, z), truth).item() - expect) <= 1e-10);
}

TEST_CASE("NaN discriminator output aborts") {
  CHECK_THROWS_AS(losses::check_probabilities(probs({0.5, std::nan("")}), "D_face"), NumericalError);
}

TEST_CASE("weights and config validation") {
  LossWeights w;
  w.tv = -1;
  CHECK_THROWS_AS(w.validate(), ArgumentError);
  CHECK(TrainConfig::defaults_for(ScaleProfile::paper()).batch_size == 128);
  CHECK(TrainConfig::defaults_for(ScaleProfile::desk()).batch_size == 64);
  TrainConfig c;
  CHECK(c.lr == 2e-4);
  CHECK(c.beta1 == 0.5);
  c.beta1 = 1.0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("step report total is the weighted sum of its parts") {
  Fixture f;
  TrainConfig c = f.config();
  c.weights = {0.7, 1.3, 2.0, 0.4, 1.1};
  Trainer t(f.model, f.phi, c);
  for (int i = 0; i < 3; ++i) {
    StepReport r = t.step(f.x, f.groups, f.genders);
    CHECK(std::abs(r.total - weighted_total(r, c.weights)) <= 1e-10);
  }
}

TEST_CASE("zero weights leave G and R unchanged") {
  Fixture f;
  TrainConfig c = f.config();
  c.weights = {0, 0, 0, 0, 0};
  auto gr = f.model.representor.parameters();
  auto g = f.model.generator.parameters();
  gr.insert(gr.end(), g.begin(), g.end());
  auto before = values_of(gr);
  auto d_before = values_of(f.model.face_discriminator.parameters());
  Trainer t(f.model, f.phi, c);
  t.step(f.x, f.groups, f.genders, f.targets);
  CHECK(values_of(gr) == before);
  CHECK(values_of(f.model.face_discriminator.parameters()) != d_before);
}

TEST_CASE("equal seeds give identical step reports") {
  Fixture a, b;
  Trainer ta(a.model, a.phi, a.config()), tb(b.model, b.phi, b.config());
  for (int i = 0; i < 10; ++i) {
    StepReport ra = ta.step(a.x, a.groups, a.genders), rb = tb.step(b.x, b.groups, b.genders);
    CHECK(ra.total == rb.total);
    CHECK(ra.d_face == rb.d_face);
    CHECK(ra.d_enc == rb.d_enc);
    CHECK(ra.est == rb.est);
  }
  CHECK(encode_checkpoint(snapshot(a.model.state())) == encode_checkpoint(snapshot(b.model.state())));
}

TEST_CASE("phi stays bit-identical through training") {
  Fixture f;
  auto before = values_of(f.phi.parameters());
  Trainer t(f.model, f.phi, f.config());
  for (int i = 0; i < 3; ++i) t.step(f.x, f.groups, f.genders);
  CHECK(values_of(f.phi.parameters()) == before);
}

TEST_CASE("the G+R phase does not move the age estimator") {
  Fixture f;
  // Replica of phase 3 alone on a copy: the estimator must end up exactly there.
  AgrGan copy = clone(f.model);
  TrainConfig c = f.config();
  AdamConfig ac;
  ac.lr = c.lr;
  ac.beta1 = c.beta1;
  Adam opt(copy.age_estimator.parameters(), ac);
  Tensor loss = losses::estimator_supervised_loss(copy.age_estimator.forward(f.x), f.groups);
  opt.zero_grad();
  loss.backward();
  opt.step();

  Trainer t(f.model, f.phi, c);
  t.step(f.x, f.groups, f.genders, f.targets);
  CHECK(values_of(f.model.age_estimator.parameters()) == values_of(copy.age_estimator.parameters()));
}

TEST_CASE("age gap pushes a gradient into the generated image") {
  Fixture f;
  nn::set_trainable(f.model.age_estimator.parameters(), false);
  Tensor img = ops::tanh(f.x).detach();
  img.set_requires_grad(true);
  Tensor loss = losses::age_gap_loss(f.targets, f.model.age_estimator.forward(img));
  REQUIRE(loss.item() > 0);
  loss.backward();
  double norm = 0;
  for (double gv : img.grad()) norm += gv * gv;
  CHECK(norm > 0);
  for (const auto& p : f.model.age_estimator.parameters()) CHECK_FALSE(p.tensor.has_grad());
}

TEST_CASE("label counts must match the batch") {
  Fixture f;
  Trainer t(f.model, f.phi, f.config());
  std::vector<std::size_t> short_groups{1, 2};
  CHECK_THROWS_AS(t.step(f.x, short_groups, f.genders), DimensionError);
}

TEST_CASE("epochs = 0 writes the initialization") {
  Fixture f;
  TempDir dir("train0");
  AgrGan init = clone(f.model);
  TrainConfig c = f.config();
  c.epochs = 0;
  auto res = train(f.model, f.phi, c, f.data, dir.path);
  REQUIRE(res.checkpoints.size() == 1);
  TempDir ref("train0ref");
  save_agrgan(init, ref.path / "init.agrgan");
  CHECK(slurp(res.checkpoints[0]) == slurp(ref.path / "init.agrgan"));
  CHECK(res.history.empty());
}

TEST_CASE("training bookkeeping: loss CSV, checkpoints and manifest") {
  Fixture f;
  TempDir dir("train2");
  TrainConfig c = f.config();
  c.weights.tv = 0.25;
  auto res = train(f.model, f.phi, c, f.data, dir.path, {{"purpose", "unit"}});
  CHECK(res.steps_per_epoch == 4);  // 32 samples, batch 8
  std::ifstream csv(res.loss_csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == kLossCsvHeader);
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == res.steps_per_epoch * c.epochs);
  CHECK(res.checkpoints.size() == 3);
  for (const auto& r : res.history) CHECK(std::abs(r.total - weighted_total(r, c.weights)) <= 1e-10);

  auto m = nlohmann::json::parse(slurp(res.manifest));
  CHECK(m["config"]["lr"].get<double>() == 2e-4);
  CHECK(m["config"]["beta1"].get<double>() == 0.5);
  CHECK(m["seed"].get<std::uint64_t>() == 12);
  CHECK(m["weight_overrides"]["tv"].get<double>() == 0.25);
  CHECK_FALSE(m["weight_overrides"].contains("id"));
  CHECK(m["notes"]["purpose"] == "unit");
  CHECK(m["status"] == "complete");

  // Last checkpoint holds the trained model.
  TempDir ref("train2ref");
  save_agrgan(f.model, ref.path / "final.agrgan");
  CHECK(slurp(res.checkpoints.back()) == slurp(ref.path / "final.agrgan"));
}

TEST_CASE("a non-finite loss checkpoints and aborts") {
  Fixture f;
  TempDir dir("trainnan");
  auto g = f.model.generator.parameters();
  for (double& v : g.front().tensor.mutable_data()) v = std::nan("");
  CHECK_THROWS_AS(train(f.model, f.phi, f.config(), f.data, dir.path), NumericalError);
  CHECK(std::filesystem::exists(dir.path / "checkpoints" / "aborted.agrgan"));
  CHECK(std::filesystem::exists(dir.path / "checkpoints" / "epoch_000.agrgan"));
  auto m = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(m["status"].get<std::string>().rfind("aborted", 0) == 0);
}

TEST_CASE("train rejects a dataset of the wrong size") {
  Fixture f;
  TempDir dir("trainbad");
  Dataset other = generate_synthetic(4, 4, 1, 32);
  CHECK_THROWS_AS(train(f.model, f.phi, f.config(), other, dir.path), ArgumentError);
}
