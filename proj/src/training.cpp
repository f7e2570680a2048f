// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "agrgan/checkpoint.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/losses.hpp"
#include "agrgan/ops.hpp"

namespace agrgan {

void LossWeights::validate() const {
  for (double w : {id, agegap, tv, adv_face, adv_enc}) {
    if (!std::isfinite(w) || w < 0.0) throw ArgumentError("loss weights must be finite and non-negative");
  }
}

TrainConfig TrainConfig::defaults_for(const ScaleProfile& profile) {
  TrainConfig c;
  c.profile = profile;
  c.batch_size = profile.name == "paper" ? 128 : 64;
  return c;
}

void TrainConfig::validate() const {
  profile.validate();
  weights.validate();
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ArgumentError("beta1 must be in [0, 1)");
  if (d_steps == 0) throw ArgumentError("d_steps must be >= 1");
  if (checkpoint_every == 0) throw ArgumentError("checkpoint_every must be >= 1");
}

double weighted_total(const StepReport& r, const LossWeights& w) {
  return w.id * r.id + w.agegap * r.agegap + w.tv * r.tv + w.adv_face * r.g_adv_face + w.adv_enc * r.g_adv_enc;
}

namespace {

std::vector<NamedTensor> joined(std::vector<NamedTensor> a, const std::vector<NamedTensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

AdamConfig adam_config(const TrainConfig& c) {
  AdamConfig a;
  a.lr = c.lr;
  a.beta1 = c.beta1;
  return a;
}

Tensor conditions(std::span<const std::size_t> groups, std::span<const std::size_t> genders) {
  std::vector<ConditionVector> conds;
  conds.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) conds.push_back(encode_condition(groups[i], genders[i]));
  return condition_batch(conds);
}

}  // namespace

Trainer::Trainer(AgrGan& model, const EmbeddingNet& phi, const TrainConfig& config)
    : model_(model),
      phi_(phi),
      config_(config),
      rng_(derive_seed(config.seed, 0x7A41ULL)),
      opt_face_(model.face_discriminator.parameters(), adam_config(config)),
      opt_enc_(model.enc_discriminator.parameters(), adam_config(config)),
      opt_est_(model.age_estimator.parameters(), adam_config(config)),
      opt_gen_(joined(model.representor.parameters(), model.generator.parameters()), adam_config(config)) {
  config_.validate();
  if (!(model.profile == config.profile)) {
    throw ArgumentError("trainer: model profile '" + model.profile.name + "' differs from config profile '" +
                        config.profile.name + "'");
  }
  nn::set_trainable(phi_.parameters(), false);
}

StepReport Trainer::step(const Tensor& x, std::span<const std::size_t> groups,
                         std::span<const std::size_t> genders) {
  std::vector<std::size_t> targets(groups.size());
  for (auto& t : targets) t = static_cast<std::size_t>(rng_.index(kAgeGroups));
  return step(x, groups, genders, targets);
}

StepReport Trainer::step(const Tensor& x, std::span<const std::size_t> groups, std::span<const std::size_t> genders,
                         std::span<const std::size_t> targets) {
  const std::size_t batch = x.dim(0);
  if (groups.size() != batch || genders.size() != batch || targets.size() != batch) {
    throw DimensionError("train step: label counts must equal batch size " + std::to_string(batch));
  }
  AgrGan& m = model_;
  const LossWeights& w = config_.weights;
  Tensor real_cond = conditions(groups, genders);
  Tensor target_cond = conditions(targets, genders);
  StepReport report;

  // (1) D_face on real pairs and detached fakes.
  for (std::size_t k = 0; k < config_.d_steps; ++k) {
    Tensor fake;
    {
      NoGradGuard guard;
      fake = m.generator.forward(m.representor.forward(x, false), target_cond);
    }
    Tensor d_real = m.face_discriminator.forward(x, real_cond, true);
    Tensor d_fake = m.face_discriminator.forward(fake, target_cond, false);
    losses::check_probabilities(d_real, "D_face(real)");
    losses::check_probabilities(d_fake, "D_face(fake)");
    Tensor loss = losses::discriminator_loss(d_real, d_fake);
    opt_face_.zero_grad();
    loss.backward();
    opt_face_.step();
    for (auto& conv : m.face_discriminator.convs()) conv.refresh_spectral_estimate();
    report.d_face = loss.item();
  }

  // (2) D_enc: uniform prior draws against encoder codes.
  {
    Tensor code;
    {
      NoGradGuard guard;
      code = m.representor.forward(x, false);
    }
    std::vector<double> draws(code.numel());
    for (double& v : draws) v = rng_.uniform(-1.0, 1.0);
    Tensor prior = Tensor::from_data(code.shape(), std::move(draws));
    Tensor d_prior = m.enc_discriminator.forward(prior);
    Tensor d_code = m.enc_discriminator.forward(code);
    losses::check_probabilities(d_prior, "D_enc(prior)");
    losses::check_probabilities(d_code, "D_enc(enc)");
    Tensor loss = losses::discriminator_loss(d_prior, d_code);
    opt_enc_.zero_grad();
    loss.backward();
    opt_enc_.step();
    report.d_enc = loss.item();
  }

  // (3) Age estimator, supervised on real images.
  {
    Tensor loss = losses::estimator_supervised_loss(m.age_estimator.forward(x), groups);
    opt_est_.zero_grad();
    loss.backward();
    opt_est_.step();
    report.est = loss.item();
  }

  // (4) Joint G+R update with the critics frozen.
  auto face_params = m.face_discriminator.parameters();
  auto enc_params = m.enc_discriminator.parameters();
  auto est_params = m.age_estimator.parameters();
  nn::set_trainable(face_params, false);
  nn::set_trainable(enc_params, false);
  nn::set_trainable(est_params, false);
  struct Unfreeze {
    std::vector<NamedTensor>*a, *b, *c;
    ~Unfreeze() {
      nn::set_trainable(*a, true);
      nn::set_trainable(*b, true);
      nn::set_trainable(*c, true);
    }
  } unfreeze{&face_params, &enc_params, &est_params};

  Tensor code = m.representor.forward(x, true);
  Tensor generated = m.generator.forward(code, target_cond);
  Tensor d_face_fake = m.face_discriminator.forward(generated, target_cond, false);
  Tensor d_enc_code = m.enc_discriminator.forward(code);
  losses::check_probabilities(d_face_fake, "D_face(generated)");
  losses::check_probabilities(d_enc_code, "D_enc(enc)");
  Tensor terms[5] = {
      losses::identity_loss(x, generated, phi_),
      losses::age_gap_loss(targets, m.age_estimator.forward(generated)),
      losses::tv_loss(generated),
      losses::generator_loss(d_face_fake),
      losses::generator_loss(d_enc_code),
  };
  const double weights[5] = {w.id, w.agegap, w.tv, w.adv_face, w.adv_enc};
  Tensor total = ops::weighted_sum(terms, weights);
  report.id = terms[0].item();
  report.agegap = terms[1].item();
  report.tv = terms[2].item();
  report.g_adv_face = terms[3].item();
  report.g_adv_enc = terms[4].item();
  report.total = total.item();
  if (!std::isfinite(report.total)) {
    throw NumericalError("train step " + std::to_string(steps_) + ": non-finite total loss (id=" +
                         std::to_string(report.id) + ", agegap=" + std::to_string(report.agegap) +
                         ", tv=" + std::to_string(report.tv) + ", g_adv_face=" + std::to_string(report.g_adv_face) +
                         ", g_adv_enc=" + std::to_string(report.g_adv_enc) + ")");
  }
  opt_gen_.zero_grad();
  total.backward();
  opt_gen_.step();
  for (auto& conv : m.representor.convs()) conv.refresh_spectral_estimate();
  ++steps_;
  return report;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

std::string format_row(std::size_t step, const StepReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", step, r.d_face,
                r.d_enc, r.est, r.g_adv_face, r.g_adv_enc, r.id, r.agegap, r.tv, r.total);
  return buf;
}

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw FormatError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path epoch_path(const std::filesystem::path& dir, std::size_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%03zu.agrgan", epoch);
  return dir / name;
}

}  // namespace

TrainResult train(AgrGan& model, const EmbeddingNet& phi, const TrainConfig& config, const Dataset& data,
                  const std::filesystem::path& out_dir, const std::map<std::string, std::string>& notes,
                  const StepCallback& on_step) {
  config.validate();
  if (data.empty()) throw ArgumentError("train: dataset is empty");
  if (data.image_size != config.profile.image_size) {
    throw ArgumentError("train: dataset images are " + std::to_string(data.image_size) + "px but profile '" +
                        config.profile.name + "' expects " + std::to_string(config.profile.image_size));
  }
  auto histogram = data.group_histogram();
  for (std::size_t g = 0; g < kAgeGroups; ++g) {
    if (histogram[g] == 0) warn("train: age group " + std::to_string(g) + " has no training samples");
  }

  const auto ckpt_dir = out_dir / "checkpoints";
  std::error_code ec;
  std::filesystem::create_directories(ckpt_dir, ec);
  if (ec) throw FormatError("cannot create '" + ckpt_dir.string() + "': " + ec.message());

  TrainResult result;
  result.manifest = out_dir / "manifest.json";
  result.loss_csv = out_dir / "losses.csv";
  BatchIterator batches(data.size(), config.batch_size, derive_seed(config.seed, 0xBA7CULL));
  result.steps_per_epoch = batches.batches_per_epoch();

  nlohmann::ordered_json manifest;
  manifest["command"] = "train";
  manifest["started"] = utc_now();
  manifest["seed"] = config.seed;
  manifest["config"] = {{"profile", config.profile.name},
                        {"image_size", config.profile.image_size},
                        {"enc_dim", config.profile.enc_dim},
                        {"batch_size", config.batch_size},
                        {"lr", config.lr},
                        {"beta1", config.beta1},
                        {"beta2", AdamConfig{}.beta2},
                        {"epochs", config.epochs},
                        {"d_steps", config.d_steps},
                        {"checkpoint_every", config.checkpoint_every}};
  manifest["weights"] = {{"id", config.weights.id},
                         {"agegap", config.weights.agegap},
                         {"tv", config.weights.tv},
                         {"adv_face", config.weights.adv_face},
                         {"adv_enc", config.weights.adv_enc}};
  LossWeights defaults;
  nlohmann::ordered_json overrides = nlohmann::ordered_json::object();
  if (config.weights.id != defaults.id) overrides["id"] = config.weights.id;
  if (config.weights.agegap != defaults.agegap) overrides["agegap"] = config.weights.agegap;
  if (config.weights.tv != defaults.tv) overrides["tv"] = config.weights.tv;
  if (config.weights.adv_face != defaults.adv_face) overrides["adv_face"] = config.weights.adv_face;
  if (config.weights.adv_enc != defaults.adv_enc) overrides["adv_enc"] = config.weights.adv_enc;
  manifest["weight_overrides"] = overrides;
  manifest["dataset_samples"] = data.size();
  manifest["steps_per_epoch"] = result.steps_per_epoch;
  for (const auto& [k, v] : notes) manifest["notes"][k] = v;

  std::ostringstream csv;
  csv << kLossCsvHeader << '\n';
  auto flush = [&](const std::string& status) {
    manifest["status"] = status;
    manifest["finished"] = utc_now();
    nlohmann::ordered_json paths = nlohmann::ordered_json::array();
    for (const auto& p : result.checkpoints) paths.push_back(std::filesystem::relative(p, out_dir).string());
    manifest["checkpoints"] = paths;
    manifest["loss_csv"] = "losses.csv";
    write_text(result.loss_csv, csv.str());
    write_text(result.manifest, manifest.dump(2) + "\n");
  };

  save_agrgan(model, epoch_path(ckpt_dir, 0));
  result.checkpoints.push_back(epoch_path(ckpt_dir, 0));

  Trainer trainer(model, phi, config);
  std::size_t step_index = 0;
  try {
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      for (const auto& idx : batches.epoch(epoch - 1)) {
        Tensor x = image_batch(data, idx);
        std::vector<std::size_t> groups, genders;
        for (std::size_t i : idx) {
          groups.push_back(data.samples[i].age_group());
          genders.push_back(data.samples[i].gender);
        }
        StepReport report = trainer.step(x, groups, genders);
        result.history.push_back(report);
        csv << format_row(step_index, report) << '\n';
        if (on_step) on_step(epoch, step_index, report);
        ++step_index;
      }
      if (epoch % config.checkpoint_every == 0 || epoch == config.epochs) {
        save_agrgan(model, epoch_path(ckpt_dir, epoch));
        result.checkpoints.push_back(epoch_path(ckpt_dir, epoch));
      }
    }
  } catch (const NumericalError&) {
    save_agrgan(model, ckpt_dir / "aborted.agrgan");
    flush("aborted: non-finite loss at step " + std::to_string(step_index));
    throw;
  }
  flush("complete");
  return result;
}

}  // namespace agrgan
