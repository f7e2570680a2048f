// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "agrgan/dataset.hpp"
#include "agrgan/networks.hpp"
#include "agrgan/optim.hpp"

namespace agrgan {

/// Weights of the five generator-side terms. The objective is an unweighted
/// sum by default.
struct LossWeights {
  double id = 1.0;
  double agegap = 1.0;
  double tv = 1.0;
  double adv_face = 1.0;
  double adv_enc = 1.0;

  /// Throws ArgumentError on a negative or non-finite weight.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  double lr = 2e-4;
  double beta1 = 0.5;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  ScaleProfile profile = ScaleProfile::desk();
  LossWeights weights;
  /// D_face updates per step (phase 1 repeats on the same batch).
  std::size_t d_steps = 1;
  /// Write a checkpoint every this many epochs; the last epoch is always saved.
  std::size_t checkpoint_every = 1;

  /// Batch 128 for the paper profile, 64 for desk; lr 2e-4, beta1 0.5.
  static TrainConfig defaults_for(const ScaleProfile& profile);
  void validate() const;
};

/// Loss values of one training step. `total` is the phase-4 objective.
struct StepReport {
  double d_face = 0, d_enc = 0, est = 0;
  double g_adv_face = 0, g_adv_enc = 0, id = 0, agegap = 0, tv = 0;
  double total = 0;
};

/// Σ w·term in the order id, agegap, tv, adv_face, adv_enc.
double weighted_total(const StepReport& report, const LossWeights& weights);

/// Alternating four-phase update over one model. Holds its own Adam states
/// and sampling RNG; φ is used frozen.
class Trainer {
 public:
  Trainer(AgrGan& model, const EmbeddingNet& phi, const TrainConfig& config);

  /// Draws target groups uniformly and steps.
  StepReport step(const Tensor& x, std::span<const std::size_t> groups, std::span<const std::size_t> genders);
  /// Steps with explicit target groups. Throws NumericalError if any
  /// discriminator output is NaN or the phase-4 total is non-finite.
  StepReport step(const Tensor& x, std::span<const std::size_t> groups, std::span<const std::size_t> genders,
                  std::span<const std::size_t> targets);

  std::size_t steps_taken() const { return steps_; }
  Rng& rng() { return rng_; }

 private:
  AgrGan& model_;
  EmbeddingNet phi_;
  TrainConfig config_;
  Rng rng_;
  Adam opt_face_, opt_enc_, opt_est_, opt_gen_;
  std::size_t steps_ = 0;
};

struct TrainResult {
  std::vector<std::filesystem::path> checkpoints;
  std::vector<StepReport> history;
  std::filesystem::path manifest, loss_csv;
  std::size_t steps_per_epoch = 0;
};

/// Called after every step with (epoch, step index, report).
using StepCallback = std::function<void(std::size_t, std::size_t, const StepReport&)>;

/// Trains `model` in place. Writes checkpoints/epoch_NNN.agrgan (epoch 0 is the
/// initialization), losses.csv and manifest.json under out_dir. `notes` are
/// copied verbatim into the manifest. On a non-finite loss the current state is
/// saved as checkpoints/aborted.agrgan, earlier checkpoints are kept and the
/// NumericalError is rethrown.
TrainResult train(AgrGan& model, const EmbeddingNet& phi, const TrainConfig& config, const Dataset& data,
                  const std::filesystem::path& out_dir, const std::map<std::string, std::string>& notes = {},
                  const StepCallback& on_step = {});

/// Header of the loss-curve CSV.
inline constexpr const char* kLossCsvHeader = "step,d_face,d_enc,est,g_adv_face,g_adv_enc,id,agegap,tv,total";

}  // namespace agrgan
