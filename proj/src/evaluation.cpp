// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include "agrgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numeric>

#include "agrgan/checkpoint.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/losses.hpp"
#include "agrgan/ops.hpp"

namespace agrgan {

namespace {

constexpr std::size_t kChunk = 64;

AdamConfig oracle_adam(const OracleConfig& c) {
  AdamConfig a;
  a.lr = c.lr;
  a.beta1 = c.beta1;
  return a;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Tensor rows(const Tensor& images, std::size_t begin, std::size_t end) {
  const std::size_t per = images.numel() / images.dim(0);
  std::vector<double> out(images.data().begin() + static_cast<long>(begin * per),
                          images.data().begin() + static_cast<long>(end * per));
  Shape shape = images.shape();
  shape[0] = end - begin;
  return Tensor::from_data(std::move(shape), std::move(out));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Oracles

std::vector<nn::StateEntry> OracleModels::state() {
  std::vector<nn::StateEntry> out;
  age.collect_state(out);
  phi.collect_state(out);
  verifier.collect_state(out);
  return out;
}

AgeEstimator train_age_classifier(const Dataset& train, std::uint64_t seed, const OracleConfig& config,
                                  const std::string& name) {
  if (train.empty()) throw ArgumentError("train_age_classifier: empty dataset");
  Rng init(derive_seed(seed, 0xA9E0ULL));
  AgeEstimator net(config.base_channels, init, name);
  Adam opt(net.parameters(), oracle_adam(config));
  BatchIterator batches(train.size(), std::min(config.batch_size, train.size()), derive_seed(seed, 0xA9E1ULL));
  for (std::size_t epoch = 0; epoch < config.age_epochs; ++epoch) {
    for (const auto& idx : batches.epoch(epoch)) {
      std::vector<std::size_t> groups;
      for (std::size_t i : idx) groups.push_back(train.samples[i].age_group());
      Tensor loss = ops::mean(ops::cross_entropy(net.forward(image_batch(train, idx)), groups));
      opt.zero_grad();
      loss.backward();
      opt.step();
    }
  }
  nn::set_trainable(net.parameters(), false);
  return net;
}

EmbeddingNet train_identity_embedding(const Dataset& train, std::uint64_t seed, const OracleConfig& config,
                                      const std::string& name) {
  if (train.empty()) throw ArgumentError("train_identity_embedding: empty dataset");
  auto ids = train.identities();
  if (ids.size() < 2) throw ArgumentError("train_identity_embedding: need at least two identities");
  std::map<std::size_t, std::size_t> label;
  for (std::size_t i = 0; i < ids.size(); ++i) label[ids[i]] = i;

  Rng init(derive_seed(seed, 0xE3B0ULL));
  EmbeddingNet net(train.image_size, config.base_channels, config.embed_dim, init, name);
  nn::Linear head(config.embed_dim, ids.size(), init);
  std::vector<NamedTensor> params = net.parameters();
  head.collect_parameters(name + ".head", params);
  Adam opt(params, oracle_adam(config));
  BatchIterator batches(train.size(), std::min(config.batch_size, train.size()), derive_seed(seed, 0xE3B1ULL));
  for (std::size_t epoch = 0; epoch < config.embed_epochs; ++epoch) {
    for (const auto& idx : batches.epoch(epoch)) {
      std::vector<std::size_t> targets;
      for (std::size_t i : idx) targets.push_back(label.at(train.samples[i].identity));
      Tensor logits = head.forward(ops::elu(net.forward(image_batch(train, idx))));
      Tensor loss = ops::mean(ops::cross_entropy(logits, targets));
      opt.zero_grad();
      loss.backward();
      opt.step();
    }
  }
  nn::set_trainable(net.parameters(), false);
  return net;
}

EmbeddingNet train_phi(const Dataset& train, std::uint64_t seed, const OracleConfig& config) {
  return train_identity_embedding(train, derive_seed(seed, 0xF1ULL), config, "phi");
}

double age_accuracy(const AgeEstimator& estimator, const Dataset& data, std::size_t tolerance) {
  auto predicted = predict_groups(estimator, image_batch(data));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t truth = data.samples[i].age_group(), p = predicted[i];
    if ((p > truth ? p - truth : truth - p) <= tolerance) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double identity_auc(const EmbeddingNet& embedding, const Dataset& data) {
  auto e = embed(embedding, image_batch(data));
  metrics::ScoreSet scores;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      double s = metrics::cosine_similarity(e[i], e[j]);
      (data.samples[i].identity == data.samples[j].identity ? scores.genuine : scores.impostor).push_back(s);
    }
  }
  auto curve = metrics::roc_curve(scores);
  return metrics::roc_auc(curve);
}

OracleModels pretrain_oracles(const Dataset& train, const Dataset& heldout, std::uint64_t seed,
                              const OracleConfig& config) {
  {
    auto a = train.identities(), b = heldout.identities();
    std::vector<std::size_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (!common.empty()) {
      throw ArgumentError("pretrain_oracles: train and held-out splits share identity " + std::to_string(common[0]));
    }
  }
  OracleModels o;
  o.age = train_age_classifier(train, derive_seed(seed, 0xA6EULL), config);
  o.phi = train_phi(train, seed, config);
  o.verifier = train_identity_embedding(train, derive_seed(seed, 0xFACEULL), config, "verifier");
  o.report.age_exact = age_accuracy(o.age, heldout, 0);
  o.report.age_within_one = age_accuracy(o.age, heldout, 1);
  o.report.phi_auc = identity_auc(o.phi, heldout);
  o.report.verifier_auc = identity_auc(o.verifier, heldout);
  auto fail = [](const std::string& what, double got, double need) {
    throw NumericalError("oracle threshold unmet: " + what + " = " + num(got) + " (need " + num(need) + ")");
  };
  if (o.report.age_within_one < config.min_age_within_one) {
    fail("age oracle within-one accuracy", o.report.age_within_one, config.min_age_within_one);
  }
  if (!(o.report.phi_auc > config.min_identity_auc)) fail("phi identity AUC", o.report.phi_auc, config.min_identity_auc);
  if (!(o.report.verifier_auc > config.min_identity_auc)) {
    fail("verifier identity AUC", o.report.verifier_auc, config.min_identity_auc);
  }
  return o;
}

void save_oracles(OracleModels& oracles, const std::filesystem::path& path) {
  write_checkpoint(path, snapshot(oracles.state()));
}

OracleModels load_oracles(const std::filesystem::path& path, std::size_t image_size, const OracleConfig& config) {
  Rng dummy(0);
  OracleModels o;
  o.age = AgeEstimator(config.base_channels, dummy, "oracle_age");
  o.phi = EmbeddingNet(image_size, config.base_channels, config.embed_dim, dummy, "phi");
  o.verifier = EmbeddingNet(image_size, config.base_channels, config.embed_dim, dummy, "verifier");
  restore(read_checkpoint(path), o.state());
  nn::set_trainable(o.age.parameters(), false);
  nn::set_trainable(o.phi.parameters(), false);
  nn::set_trainable(o.verifier.parameters(), false);
  return o;
}

// ---------------------------------------------------------------------------
// Inference helpers

Tensor generate(AgrGan& model, const Dataset& data, std::span<const std::size_t> indices,
                std::span<const std::size_t> targets) {
  if (indices.size() != targets.size()) throw ArgumentError("generate: one target per index required");
  NoGradGuard guard;
  const std::size_t s = data.image_size, per = 3 * s * s;
  std::vector<double> out(indices.size() * per);
  for (std::size_t b = 0; b < indices.size(); b += kChunk) {
    std::size_t e = std::min(indices.size(), b + kChunk);
    auto idx = indices.subspan(b, e - b);
    std::vector<ConditionVector> conds;
    for (std::size_t k = b; k < e; ++k) conds.push_back(encode_condition(targets[k], data.samples[indices[k]].gender));
    Tensor y = model.transform(image_batch(data, idx), condition_batch(conds));
    std::copy(y.data().begin(), y.data().end(), out.begin() + static_cast<long>(b * per));
  }
  return Tensor::from_data({indices.size(), 3, s, s}, std::move(out));
}

std::vector<std::vector<double>> embed(const EmbeddingNet& net, const Tensor& images) {
  NoGradGuard guard;
  std::vector<std::vector<double>> out;
  for (std::size_t b = 0; b < images.dim(0); b += kChunk) {
    Tensor e = net.forward(rows(images, b, std::min(images.dim(0), b + kChunk)));
    const std::size_t d = e.dim(1);
    for (std::size_t r = 0; r < e.dim(0); ++r) out.emplace_back(e.data().begin() + static_cast<long>(r * d),
                                                               e.data().begin() + static_cast<long>((r + 1) * d));
  }
  return out;
}

std::vector<std::size_t> predict_groups(const AgeEstimator& estimator, const Tensor& images) {
  NoGradGuard guard;
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < images.dim(0); b += kChunk) {
    Tensor logits = estimator.forward(rows(images, b, std::min(images.dim(0), b + kChunk)));
    for (std::size_t r = 0; r < logits.dim(0); ++r) {
      auto row = logits.data().subspan(r * kAgeGroups, kAgeGroups);
      out.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

AgingReport aging_model_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles) {
  if (eval.empty()) throw ArgumentError("aging_model_eval: empty eval split");
  AgingReport r;
  r.samples_per_group = eval.size();
  auto all = iota_indices(eval.size());
  for (std::size_t t = 0; t < kAgeGroups; ++t) {
    std::vector<std::size_t> targets(all.size(), t);
    auto predicted = predict_groups(oracles.age, generate(model, eval, all, targets));
    double sum = 0;
    for (std::size_t p : predicted) sum += static_cast<double>(p);
    r.mean_predicted[t] = sum / static_cast<double>(predicted.size());
  }
  for (std::size_t t = 0; t + 1 < kAgeGroups; ++t) {
    if (r.mean_predicted[t + 1] > r.mean_predicted[t]) ++r.increasing_pairs;
  }
  std::array<double, kAgeGroups> groups{};
  std::iota(groups.begin(), groups.end(), 0.0);
  r.spearman = metrics::spearman(groups, r.mean_predicted);
  r.spread = metrics::stddev(r.mean_predicted);
  return r;
}

IdentityReport identity_preservation_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles) {
  if (eval.identities().size() < 2) throw ArgumentError("identity_preservation_eval: need at least two identities");
  const std::size_t n = eval.size();
  auto all = iota_indices(n);
  std::vector<std::size_t> partner(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(0x1DE7ULL, i));
    do partner[i] = static_cast<std::size_t>(rng.index(n));
    while (eval.samples[partner[i]].identity == eval.samples[i].identity);
  }
  auto source = embed(oracles.phi, image_batch(eval));
  IdentityReport r;
  for (std::size_t t = 0; t < kAgeGroups; ++t) {
    std::vector<std::size_t> targets(n, t);
    auto generated = embed(oracles.phi, generate(model, eval, all, targets));
    metrics::ScoreSet scores;
    for (std::size_t i = 0; i < n; ++i) {
      scores.genuine.push_back(metrics::cosine_similarity(source[i], generated[i]));
      scores.impostor.push_back(metrics::cosine_similarity(source[i], generated[partner[i]]));
    }
    r.eer[t] = metrics::compute_eer(scores);
  }
  r.mean_eer = std::accumulate(r.eer.begin(), r.eer.end(), 0.0) / kAgeGroups;
  r.genuine_pairs = r.impostor_pairs = n;
  return r;
}

double output_diversity(AgrGan& model, const Dataset& eval, std::size_t max_inputs) {
  if (eval.empty()) throw ArgumentError("output_diversity: empty eval split");
  const std::size_t n = std::min(max_inputs, eval.size());
  std::vector<std::size_t> idx, targets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < kAgeGroups; ++t) {
      idx.push_back(i);
      targets.push_back(t);
    }
  }
  Tensor y = generate(model, eval, idx, targets);
  const std::size_t per = y.numel() / y.dim(0);
  auto data = y.data();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0;
    for (std::size_t a = 0; a < kAgeGroups; ++a) {
      for (std::size_t b = a + 1; b < kAgeGroups; ++b) {
        const double* pa = data.data() + (i * kAgeGroups + a) * per;
        const double* pb = data.data() + (i * kAgeGroups + b) * per;
        double d2 = 0;
        for (std::size_t k = 0; k < per; ++k) d2 += (pa[k] - pb[k]) * (pa[k] - pb[k]);
        acc += std::sqrt(d2);
      }
    }
    total += acc / (kAgeGroups * (kAgeGroups - 1) / 2);
  }
  return total / static_cast<double>(n);
}

VerificationReport verification_gain_eval(AgrGan& model, const Dataset& eval, const OracleModels& oracles,
                                          bool self_projection) {
  // Youngest / oldest sample per identity; ties broken by sample index.
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> extremes;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const auto& s = eval.samples[i];
    auto [it, fresh] = extremes.try_emplace(s.identity, i, i);
    if (fresh) continue;
    if (s.age_years < eval.samples[it->second.first].age_years) it->second.first = i;
    if (s.age_years > eval.samples[it->second.second].age_years) it->second.second = i;
  }
  VerificationReport r;
  std::vector<std::size_t> gallery, probe, ids;
  for (const auto& [id, ext] : extremes) {
    if (ext.first == ext.second) {
      ++r.identities_skipped;
      continue;
    }
    gallery.push_back(ext.first);
    probe.push_back(ext.second);
    ids.push_back(id);
  }
  r.identities_used = ids.size();
  if (ids.size() < 2) throw ArgumentError("verification_gain_eval: need at least two identities with an age gap");

  const std::size_t m = ids.size();
  auto gallery_emb = embed(oracles.verifier, image_batch(eval, gallery));
  auto probe_emb = embed(oracles.verifier, image_batch(eval, probe));

  // The pair goes through the model: the gallery at its own group, probe j
  // towards gallery i's group (or its own group).
  std::vector<std::size_t> gallery_groups;
  for (std::size_t g : gallery) gallery_groups.push_back(eval.samples[g].age_group());
  auto gallery_gen = embed(oracles.verifier, generate(model, eval, gallery, gallery_groups));
  std::vector<std::size_t> src, targets;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      src.push_back(probe[j]);
      targets.push_back(self_projection ? eval.samples[probe[j]].age_group() : eval.samples[gallery[i]].age_group());
    }
  }
  auto projected = embed(oracles.verifier, generate(model, eval, src, targets));

  std::vector<std::vector<double>> base_sim(m, std::vector<double>(m)), agr_sim(m, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double b = metrics::cosine_similarity(gallery_emb[i], probe_emb[j]);
      double a = metrics::cosine_similarity(gallery_gen[i], projected[i * m + j]);
      base_sim[j][i] = b;
      agr_sim[j][i] = a;
      (i == j ? r.baseline_scores.genuine : r.baseline_scores.impostor).push_back(b);
      (i == j ? r.agr_scores.genuine : r.agr_scores.impostor).push_back(a);
    }
  }
  r.baseline_eer = metrics::compute_eer(r.baseline_scores);
  r.agr_eer = metrics::compute_eer(r.agr_scores);
  r.baseline_tpr = metrics::tpr_at_fpr(r.baseline_scores, r.operating_fpr);
  r.agr_tpr = metrics::tpr_at_fpr(r.agr_scores, r.operating_fpr);
  r.baseline_rank1 = metrics::rank1_accuracy(base_sim, ids, ids);
  r.agr_rank1 = metrics::rank1_accuracy(agr_sim, ids, ids);
  return r;
}

LossWeights ablate(const LossWeights& base, const std::string& variant) {
  LossWeights w = base;
  if (variant == "full") return w;
  if (variant == "no_denc") w.adv_enc = 0.0;
  else if (variant == "no_identity") w.id = 0.0;
  else if (variant == "no_agegap") w.agegap = 0.0;
  else throw ArgumentError("unknown ablation variant '" + variant + "' (full, no_denc, no_identity, no_agegap)");
  return w;
}

VariantResult evaluate_variant(AgrGan& model, const Dataset& eval, const OracleModels& oracles,
                               const std::string& variant, const LossWeights& weights) {
  VariantResult v;
  v.variant = variant;
  v.weights = weights;
  v.aging = aging_model_eval(model, eval, oracles);
  v.identity = identity_preservation_eval(model, eval, oracles);
  v.diversity = output_diversity(model, eval);
  return v;
}

VariantResult ablation_run(const TrainConfig& config, const Dataset& train, const Dataset& eval,
                           const OracleModels& oracles, const std::string& variant,
                           const std::filesystem::path& out_dir) {
  TrainConfig c = config;
  c.weights = ablate(config.weights, variant);
  AgrGan model(c.profile, c.seed);
  auto result = agrgan::train(model, oracles.phi, c, train, out_dir, {{"variant", variant}});
  VariantResult v = evaluate_variant(model, eval, oracles, variant, c.weights);
  v.final_checkpoint = result.checkpoints.back();
  return v;
}

// ---------------------------------------------------------------------------
// Report files

void write_aging_csv(const AgingReport& r, const std::filesystem::path& path) {
  std::string s = "target_group,mean_predicted_group,samples\n";
  for (std::size_t t = 0; t < kAgeGroups; ++t) {
    s += std::to_string(t) + "," + num(r.mean_predicted[t]) + "," + std::to_string(r.samples_per_group) + "\n";
  }
  write_file(path, s);
}

void write_identity_csv(const IdentityReport& r, const std::filesystem::path& path) {
  std::string s = "target_group,eer,genuine_pairs,impostor_pairs\n";
  for (std::size_t t = 0; t < kAgeGroups; ++t) {
    s += std::to_string(t) + "," + num(r.eer[t]) + "," + std::to_string(r.genuine_pairs) + "," +
         std::to_string(r.impostor_pairs) + "\n";
  }
  write_file(path, s);
}

void write_roc_csv(const metrics::ScoreSet& scores, const std::filesystem::path& path) {
  std::string s = "fpr,tpr\n";
  for (const auto& p : metrics::roc_curve(scores)) s += num(p.fpr) + "," + num(p.tpr) + "\n";
  write_file(path, s);
}

void write_verification_csv(const VerificationReport& r, const std::filesystem::path& path) {
  std::string s = "method,eer,tpr_at_fpr,fpr,rank1,genuine_pairs,impostor_pairs\n";
  auto row = [&](const char* name, double eer, double tpr, double rank1, const metrics::ScoreSet& sc) {
    s += std::string(name) + "," + num(eer) + "," + num(tpr) + "," + num(r.operating_fpr) + "," + num(rank1) + "," +
         std::to_string(sc.genuine.size()) + "," + std::to_string(sc.impostor.size()) + "\n";
  };
  row("baseline", r.baseline_eer, r.baseline_tpr, r.baseline_rank1, r.baseline_scores);
  row("agr", r.agr_eer, r.agr_tpr, r.agr_rank1, r.agr_scores);
  write_file(path, s);
}

void write_ablation_csv(const std::vector<VariantResult>& results, const std::filesystem::path& path) {
  std::string s = "variant,target_group,mean_predicted_group,eer\n";
  for (const auto& v : results) {
    for (std::size_t t = 0; t < kAgeGroups; ++t) {
      s += v.variant + "," + std::to_string(t) + "," + num(v.aging.mean_predicted[t]) + "," + num(v.identity.eer[t]) +
           "\n";
    }
  }
  write_file(path, s);
}

namespace {

nlohmann::ordered_json aging_obj(const AgingReport& r) {
  return {{"mean_predicted_group", r.mean_predicted},
          {"samples_per_group", r.samples_per_group},
          {"increasing_pairs", r.increasing_pairs},
          {"spearman", r.spearman},
          {"spread", r.spread}};
}

nlohmann::ordered_json identity_obj(const IdentityReport& r) {
  return {{"eer", r.eer}, {"mean_eer", r.mean_eer}, {"genuine_pairs", r.genuine_pairs},
          {"impostor_pairs", r.impostor_pairs}};
}

}  // namespace

std::string aging_json(const AgingReport& r) { return aging_obj(r).dump(2) + "\n"; }

std::string identity_json(const IdentityReport& r) { return identity_obj(r).dump(2) + "\n"; }

std::string verification_json(const VerificationReport& r) {
  nlohmann::ordered_json j = {
      {"baseline", {{"eer", r.baseline_eer}, {"tpr_at_fpr", r.baseline_tpr}, {"rank1", r.baseline_rank1}}},
      {"agr", {{"eer", r.agr_eer}, {"tpr_at_fpr", r.agr_tpr}, {"rank1", r.agr_rank1}}},
      {"operating_fpr", r.operating_fpr},
      {"identities_used", r.identities_used},
      {"identities_skipped", r.identities_skipped},
      {"genuine_pairs", r.baseline_scores.genuine.size()},
      {"impostor_pairs", r.baseline_scores.impostor.size()}};
  return j.dump(2) + "\n";
}

std::string ablation_json(const std::vector<VariantResult>& results) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& v : results) {
    j.push_back({{"variant", v.variant},
                 {"weights",
                  {{"id", v.weights.id},
                   {"agegap", v.weights.agegap},
                   {"tv", v.weights.tv},
                   {"adv_face", v.weights.adv_face},
                   {"adv_enc", v.weights.adv_enc}}},
                 {"aging", aging_obj(v.aging)},
                 {"identity", identity_obj(v.identity)},
                 {"diversity", v.diversity},
                 {"checkpoint", v.final_checkpoint.string()}});
  }
  return j.dump(2) + "\n";
}

std::string oracle_json(const OracleReport& r) {
  nlohmann::ordered_json j = {{"age_exact", r.age_exact},
                              {"age_within_one", r.age_within_one},
                              {"phi_auc", r.phi_auc},
                              {"verifier_auc", r.verifier_auc}};
  return j.dump(2) + "\n";
}

}  // namespace agrgan
