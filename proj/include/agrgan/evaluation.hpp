// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "agrgan/dataset.hpp"
#include "agrgan/metrics.hpp"
#include "agrgan/networks.hpp"
#include "agrgan/training.hpp"

namespace agrgan {

// ---------------------------------------------------------------------------
// Oracles: harness-trained stand-ins for the pretrained age estimator and the
// face embeddings. Trained on the training split only, then frozen.

struct OracleConfig {
  std::size_t base_channels = 16;
  std::size_t embed_dim = 32;
  std::size_t batch_size = 64;
  std::size_t age_epochs = 12;
  std::size_t embed_epochs = 15;
  double lr = 1e-3;
  double beta1 = 0.9;
  double min_age_within_one = 0.8;
  double min_identity_auc = 0.9;
};

struct OracleReport {
  double age_exact = 0;
  double age_within_one = 0;
  double phi_auc = 0;
  double verifier_auc = 0;
};

struct OracleModels {
  AgeEstimator age;
  EmbeddingNet phi;
  EmbeddingNet verifier;
  OracleReport report;

  /// Persisted slots prefixed "oracle_age.", "phi.", "verifier.".
  std::vector<nn::StateEntry> state();
};

/// Supervised age-group classifier (cross-entropy only).
AgeEstimator train_age_classifier(const Dataset& train, std::uint64_t seed, const OracleConfig& config,
                                  const std::string& name = "oracle_age");

/// Identity embedding: trained through a linear identity-classification head
/// that is discarded afterwards.
EmbeddingNet train_identity_embedding(const Dataset& train, std::uint64_t seed, const OracleConfig& config,
                                      const std::string& name);

/// φ alone, as used by training: the same network pretrain_oracles produces
/// for the same (train split, seed).
EmbeddingNet train_phi(const Dataset& train, std::uint64_t seed, const OracleConfig& config = {});

/// Fraction of samples whose argmax group is within `tolerance` groups.
double age_accuracy(const AgeEstimator& estimator, const Dataset& data, std::size_t tolerance);

/// ROC AUC of same-identity vs cross-identity cosine similarity over all
/// sample pairs.
double identity_auc(const EmbeddingNet& embedding, const Dataset& data);

/// Trains all three oracles on `train`, scores them on `heldout` (disjoint
/// identities) and throws NumericalError naming the first unmet threshold.
OracleModels pretrain_oracles(const Dataset& train, const Dataset& heldout, std::uint64_t seed,
                              const OracleConfig& config = {});

void save_oracles(OracleModels& oracles, const std::filesystem::path& path);
/// Architecture comes from `config`; throws FormatError on any mismatch.
OracleModels load_oracles(const std::filesystem::path& path, std::size_t image_size,
                          const OracleConfig& config = {});

// ---------------------------------------------------------------------------
// Inference helpers (no gradient, batched).

/// G(R(x_i), target_i, gender_i) for every sample index in `indices`.
Tensor generate(AgrGan& model, const Dataset& data, std::span<const std::size_t> indices,
                std::span<const std::size_t> targets);
std::vector<std::vector<double>> embed(const EmbeddingNet& net, const Tensor& images);
std::vector<std::size_t> predict_groups(const AgeEstimator& estimator, const Tensor& images);

// ---------------------------------------------------------------------------
// Experiments

struct AgingReport {
  std::array<double, kAgeGroups> mean_predicted{};
  std::size_t samples_per_group = 0;
  std::size_t increasing_pairs = 0;
  double spearman = 0;
  double spread = 0;  // population std of mean_predicted over t
};

/// Every eval image transformed to each target group and scored by the age
/// oracle.
AgingReport aging_model_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles);

struct IdentityReport {
  std::array<double, kAgeGroups> eer{};
  double mean_eer = 0;
  std::size_t genuine_pairs = 0, impostor_pairs = 0;
};

/// Per target group: genuine = (x, G(R(x), t, g)); impostor = (x, G(R(x'), t, g'))
/// with x' drawn from a different identity. Scores are φ cosine similarities.
IdentityReport identity_preservation_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles);

/// Mean over inputs of the mean pairwise L2 distance between the ten
/// generated ages of that input. Uses at most `max_inputs` samples.
double output_diversity(AgrGan& model, const Dataset& eval, std::size_t max_inputs = 200);

struct VerificationReport {
  double baseline_eer = 0, agr_eer = 0;
  double baseline_tpr = 0, agr_tpr = 0;  // at FPR = operating_fpr
  double baseline_rank1 = 0, agr_rank1 = 0;
  double operating_fpr = 1e-3;
  std::size_t identities_used = 0, identities_skipped = 0;
  metrics::ScoreSet baseline_scores, agr_scores;
};

/// Per identity the youngest sample is the gallery and the oldest the probe.
/// Baseline scores raw (gallery, probe) pairs with the verifier. AGR passes
/// both through the model: the gallery at its own group and the probe
/// projected to the gallery's group. With `self_projection` the probe keeps
/// its own group instead.
VerificationReport verification_gain_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles,
                                          bool self_projection = false);

struct VariantResult {
  std::string variant;
  LossWeights weights;
  AgingReport aging;
  IdentityReport identity;
  double diversity = 0;
  std::filesystem::path final_checkpoint;
};

/// "full", "no_denc", "no_identity" or "no_agegap" applied to `base`.
LossWeights ablate(const LossWeights& base, const std::string& variant);

/// Trains one variant from the same seed and evaluates it.
VariantResult ablation_run(const TrainConfig& config, const Dataset& train, const Dataset& eval,
                           const OracleModels& oracles, const std::string& variant,
                           const std::filesystem::path& out_dir);

/// Evaluates an already trained model as `variant`.
VariantResult evaluate_variant(AgrGan& model, const Dataset& eval, const OracleModels& oracles,
                               const std::string& variant, const LossWeights& weights);

// ---------------------------------------------------------------------------
// Report files

void write_aging_csv(const AgingReport& report, const std::filesystem::path& path);
void write_identity_csv(const IdentityReport& report, const std::filesystem::path& path);
void write_roc_csv(const metrics::ScoreSet& scores, const std::filesystem::path& path);
void write_verification_csv(const VerificationReport& report, const std::filesystem::path& path);
void write_ablation_csv(const std::vector<VariantResult>& results, const std::filesystem::path& path);

std::string aging_json(const AgingReport& report);
std::string identity_json(const IdentityReport& report);
std::string verification_json(const VerificationReport& report);
std::string ablation_json(const std::vector<VariantResult>& results);
std::string oracle_json(const OracleReport& report);

}  // namespace agrgan
