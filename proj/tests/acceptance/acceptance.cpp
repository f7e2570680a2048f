// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   agrgan_acceptance [--only 1,2,3] [--work DIR]
//
// Criteria 5-8 share one training campaign (full model plus three ablations on
// the same seed); the longest part of the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "agrgan/checkpoint.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/evaluation.hpp"
#include "agrgan/spectral_norm.hpp"
#include "agrgan/training.hpp"
#include "gradient_suite.hpp"
#include "metric_oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace agrgan;

namespace {

// Campaign settings for criteria 5-8.
constexpr std::size_t kIdentities = 200;
constexpr std::size_t kPerIdentity = 10;
constexpr std::uint64_t kSeed = 2024;
constexpr std::size_t kEpochs = 60;
constexpr double kTrainFraction = 0.8;

LossWeights campaign_weights() {
  LossWeights w;
  w.id = 5.0;
  return w;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s | %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  auto outcomes = testing::run_gradient_suite(10, 1e-5);
  double elapsed = seconds_since(t0);
  double worst = 0;
  std::string worst_name, failed;
  for (const auto& o : outcomes) {
    if (o.result.worst_relative_error > worst) {
      worst = o.result.worst_relative_error;
      worst_name = o.name;
    }
    if (!(o.result.worst_relative_error < 1e-4) || o.result.coordinates_checked < 10) failed += " " + o.name;
  }
  report(1, failed.empty() && elapsed < 120.0, "gradient suite (rel err < 1e-4, h=1e-5, >=10 coords, < 2 min)",
         fmt("%zu cases, worst %.2e (%s), %.1f s%s", outcomes.size(), worst, worst_name.c_str(), elapsed,
             failed.empty() ? "" : (", failing:" + failed).c_str()));
}

// Largest spectral norm of any D_face effective weight, tracked during training.
struct SnTracker {
  double worst = 0;
  std::size_t checks = 0;
  void check(AgrGan& m) {
    for (auto& conv : m.face_discriminator.convs()) {
      worst = std::max(worst, largest_singular_value(conv.effective_weight()));
      ++checks;
    }
  }
};

void criterion_2(const SnTracker* training) {
  Rng rng(0x5E2);
  double lo = 1e300, hi = 0;
  for (int k = 0; k < 20; ++k) {
    std::size_t rows = 4 + rng.index(29), cols = 4 + rng.index(61);
    Tensor w = testing::random_tensor({rows, cols}, rng);
    auto state = SpectralNormState::for_weight(w, rng);
    Tensor out = spectral_normalize(w, state, 50);
    double s = largest_singular_value(out);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  bool pass = lo >= 0.999 && hi <= 1.001;
  std::string detail = fmt("20 matrices: normalized norm in [%.6f, %.6f]", lo, hi);
  if (training) {
    pass = pass && training->checks > 0 && training->worst <= 1.001;
    detail += fmt("; training: max D_face norm %.6f over %zu post-step checks", training->worst, training->checks);
  } else {
    pass = false;
    detail += "; training check not run";
  }
  report(2, pass, "spectral norm in [0.999, 1.001] after 50 iterations, <= 1.001 post-step in training", detail);
}

void criterion_3() {
  auto t0 = std::chrono::steady_clock::now();
  double worst_eer = 0, worst_auc = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = testing::random_scores(1000 + seed);
    worst_eer = std::max(worst_eer, std::abs(metrics::compute_eer(s) - testing::eer_oracle(s)));
    worst_auc = std::max(worst_auc, std::abs(metrics::roc_auc(metrics::roc_curve(s)) - testing::auc_oracle(s)));
  }
  double elapsed = seconds_since(t0);
  report(3, worst_eer <= 1e-9 && worst_auc <= 1e-9 && elapsed < 30.0,
         "EER and AUC match brute-force oracles to 1e-9 on 100 random score sets (< 30 s)",
         fmt("max |dEER| %.2e, max |dAUC| %.2e, %.2f s", worst_eer, worst_auc, elapsed));
}

// Re-reads a loss CSV and returns the worst |total - weighted sum| over rows.
double csv_bookkeeping(const fs::path& csv, const LossWeights& w, std::size_t& rows) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  double worst = 0;
  rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 10) return INFINITY;
    StepReport r;
    r.g_adv_face = v[4];
    r.g_adv_enc = v[5];
    r.id = v[6];
    r.agegap = v[7];
    r.tv = v[8];
    worst = std::max(worst, std::abs(v[9] - weighted_total(r, w)));
    ++rows;
  }
  return worst;
}

struct Campaign;

void criterion_4(const Campaign* campaign, const fs::path& work);

// ---------------------------------------------------------------------------

struct Run {
  std::string variant;
  LossWeights weights;
  VariantResult result;
  fs::path loss_csv;
  std::vector<double> epoch_total;  // mean phase-4 total per epoch
  double seconds = 0;
};

struct Campaign {
  OracleModels oracles;
  Dataset train_split, eval_split;
  std::vector<Run> runs;
  VerificationReport verification;
  SnTracker sn;
  double oracle_seconds = 0;
  bool ok = false;
  std::string error;

  const Run* find(const std::string& v) const {
    for (const auto& r : runs)
      if (r.variant == v) return &r;
    return nullptr;
  }
};

void run_campaign(Campaign& c, const fs::path& work, bool need_ablations) {
  try {
    auto t0 = std::chrono::steady_clock::now();
    Dataset d = generate_synthetic(kIdentities, kPerIdentity, kSeed, 32);
    std::tie(c.train_split, c.eval_split) = split_by_identity(d, kTrainFraction, kSeed);
    c.oracles = pretrain_oracles(c.train_split, c.eval_split, kSeed);
    c.oracle_seconds = seconds_since(t0);
    std::printf("  oracles: age exact %.3f within-one %.3f, phi AUC %.4f, verifier AUC %.4f (%.0f s)\n",
                c.oracles.report.age_exact, c.oracles.report.age_within_one, c.oracles.report.phi_auc,
                c.oracles.report.verifier_auc, c.oracle_seconds);
    std::fflush(stdout);

    std::vector<std::string> variants{"full"};
    if (need_ablations) variants.insert(variants.end(), {"no_agegap", "no_identity", "no_denc"});
    for (const auto& v : variants) {
      auto t1 = std::chrono::steady_clock::now();
      TrainConfig cfg = TrainConfig::defaults_for(ScaleProfile::desk());
      cfg.seed = kSeed;
      cfg.epochs = kEpochs;
      cfg.checkpoint_every = kEpochs;
      cfg.weights = ablate(campaign_weights(), v);
      AgrGan model(cfg.profile, cfg.seed);
      Run run;
      run.variant = v;
      run.weights = cfg.weights;
      std::vector<double> sums(kEpochs + 1, 0.0);
      std::vector<std::size_t> counts(kEpochs + 1, 0);
      auto res = train(model, c.oracles.phi, cfg, c.train_split, work / v, {{"variant", v}},
                       [&](std::size_t epoch, std::size_t, const StepReport& r) {
                         sums[epoch] += r.total;
                         ++counts[epoch];
                         if (v == "full") c.sn.check(model);
                       });
      for (std::size_t e = 1; e <= kEpochs; ++e) run.epoch_total.push_back(sums[e] / std::max<std::size_t>(counts[e], 1));
      run.loss_csv = res.loss_csv;
      run.result = evaluate_variant(model, c.eval_split, c.oracles, v, cfg.weights);
      if (v == "full") {
        c.verification = verification_gain_eval(model, c.eval_split, c.oracles);
        write_verification_csv(c.verification, work / "verification.csv");
        write_aging_csv(run.result.aging, work / "aging.csv");
        write_identity_csv(run.result.identity, work / "identity.csv");
      }
      run.seconds = seconds_since(t1);
      const auto& a = run.result.aging;
      std::printf("  %-11s %.0f s  means", v.c_str(), run.seconds);
      for (double m : a.mean_predicted) std::printf(" %.2f", m);
      std::printf("  rho %.3f spread %.3f  EER %.4f  diversity %.3f\n", a.spearman, a.spread,
                  run.result.identity.mean_eer, run.result.diversity);
      std::fflush(stdout);
      c.runs.push_back(std::move(run));
    }
    std::vector<VariantResult> table;
    for (const auto& r : c.runs) table.push_back(r.result);
    write_ablation_csv(table, work / "ablation.csv");
    c.ok = true;
  } catch (const std::exception& e) {
    c.error = e.what();
  }
}

void criterion_4(const Campaign* campaign, const fs::path& work) {
  bool pass = true;
  std::string detail;
  for (const auto& profile : {ScaleProfile::desk(), ScaleProfile::paper()}) {
    AgrGan m(profile, 4);
    Rng rng(44);
    const std::size_t s = profile.image_size;
    Tensor x = ops::tanh(testing::random_tensor({2, 3, s, s}, rng)).detach();
    std::vector<ConditionVector> cv{encode_condition(1, 0), encode_condition(8, 1)};
    Tensor y;
    {
      NoGradGuard guard;
      y = m.generator.forward(m.representor.forward(x, false), condition_batch(cv));
    }
    bool same = y.shape() == x.shape();
    pass = pass && same;
    detail += fmt("%s %zux%zu->%zux%zu %s; ", profile.name.c_str(), s, s, y.dim(2), y.dim(3), same ? "ok" : "MISMATCH");
  }

  // Bookkeeping: every logged step of every campaign run, or a short run if
  // the campaign was skipped.
  double worst = 0;
  std::size_t rows = 0;
  if (campaign && campaign->ok) {
    for (const auto& r : campaign->runs) {
      std::size_t n = 0;
      worst = std::max(worst, csv_bookkeeping(r.loss_csv, r.weights, n));
      rows += n;
    }
  } else {
    Dataset d = generate_synthetic(16, 8, 3, 32);
    Rng rng(5);
    EmbeddingNet phi(32, 4, 8, rng);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 2;
    cfg.weights = {0.5, 2.0, 1.5, 0.7, 1.2};
    AgrGan m(cfg.profile, 9);
    auto res = train(m, phi, cfg, d, work / "bookkeeping");
    worst = csv_bookkeeping(res.loss_csv, cfg.weights, rows);
  }
  pass = pass && rows > 0 && worst <= 1e-10;
  detail += fmt("total vs weighted sum: max |diff| %.2e over %zu logged steps", worst, rows);
  report(4, pass, "G(R(x)) keeps x's shape for both profiles; logged total == weighted sum to 1e-10", detail);
}

void criterion_5(const Campaign& c) {
  const Run* full = c.find("full");
  if (!c.ok || !full) {
    report(5, false, "desk convergence", "campaign failed: " + c.error);
    return;
  }
  const auto& a = full->result.aging;
  bool pass = a.increasing_pairs >= 8 && a.spearman >= 0.9;
  std::string means;
  for (double m : a.mean_predicted) means += fmt(" %.2f", m);
  report(5, pass, fmt("desk convergence (%zu epochs): >= 8/9 increasing pairs, Spearman >= 0.9", kEpochs),
         fmt("means%s; %zu/9 increasing, Spearman %.4f, training %.0f s", means.c_str(), a.increasing_pairs,
             a.spearman, full->seconds));
  bool converged = full->epoch_total.back() < full->epoch_total.front();
  std::printf("  info: phase-4 total epoch 1 mean %.4f, final epoch mean %.4f (%s)\n", full->epoch_total.front(),
              full->epoch_total.back(), converged ? "decreased" : "did not decrease");
}

void criterion_6(const Campaign& c) {
  const Run* full = c.find("full");
  if (!c.ok || !full) {
    report(6, false, "identity preservation", "campaign failed: " + c.error);
    return;
  }
  const auto& r = full->result.identity;
  double worst = *std::max_element(r.eer.begin(), r.eer.end());
  std::string per;
  for (double e : r.eer) per += fmt(" %.3f", e);
  report(6, r.mean_eer <= 0.15 && worst < 0.5, "identity preservation: mean EER <= 0.15, every group < 0.5",
         fmt("mean %.4f, max %.4f; per group%s", r.mean_eer, worst, per.c_str()));
}

void criterion_7(const Campaign& c) {
  if (!c.ok) {
    report(7, false, "verification gain", "campaign failed: " + c.error);
    return;
  }
  const auto& v = c.verification;
  report(7, v.agr_eer <= v.baseline_eer, "verification on max-age-gap pairs: AGR EER <= baseline EER",
         fmt("baseline EER %.4f, AGR EER %.4f; TPR@FPR=0.1%% %.3f vs %.3f; rank-1 %.3f vs %.3f (%zu identities)",
             v.baseline_eer, v.agr_eer, v.baseline_tpr, v.agr_tpr, v.baseline_rank1, v.agr_rank1, v.identities_used));
}

void criterion_8(const Campaign& c) {
  const Run *full = c.find("full"), *na = c.find("no_agegap"), *ni = c.find("no_identity"), *nd = c.find("no_denc");
  if (!c.ok || !full || !na || !ni || !nd) {
    report(8, false, "ablation directions", "campaign failed: " + c.error);
    return;
  }
  double spread_ratio = na->result.aging.spread / full->result.aging.spread;
  bool a = spread_ratio <= 0.5;
  bool b = ni->result.identity.mean_eer > full->result.identity.mean_eer;
  bool d = nd->result.diversity < full->result.diversity;
  report(8, a && b && d, "ablations: (a) no_agegap spread <= 50%, (b) no_identity EER up, (c) no_denc diversity down",
         fmt("(a) spread %.3f vs %.3f, ratio %.3f %s; (b) EER %.4f vs %.4f %s; (c) diversity %.3f vs %.3f %s",
             na->result.aging.spread, full->result.aging.spread, spread_ratio, a ? "ok" : "no",
             ni->result.identity.mean_eer, full->result.identity.mean_eer, b ? "ok" : "no", nd->result.diversity,
             full->result.diversity, d ? "ok" : "no"));
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  std::string cmd = std::string(AGRGAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

void criterion_9(const fs::path& work) {
  const fs::path w = work / "cli";
  fs::remove_all(w);
  fs::create_directories(w);
  const std::string synth = " --identities 24 --per-identity 6 --size 32 --seed 77";
  bool ok = run_cli("synth" + synth + " --out " + (w / "ds_a").string()) == 0 &&
            run_cli("synth" + synth + " --out " + (w / "ds_b").string()) == 0;
  std::string ha, hb;
  if (ok) {
    ha = git_blob_hash(w / "ds_a" / "index.csv");
    hb = git_blob_hash(w / "ds_b" / "index.csv");
  }
  bool same_index = ok && ha == hb;
  bool same_images = same_index;
  if (same_index) {
    for (const auto& e : fs::directory_iterator(w / "ds_a")) {
      if (e.path().extension() != ".ppm") continue;
      same_images = same_images && testing::slurp(e.path()) == testing::slurp(w / "ds_b" / e.path().filename());
    }
  }

  const std::string train = " --data " + (w / "ds_a").string() + " --epochs 2 --batch 16 --seed 5";
  bool trained = run_cli("train" + train + " --out " + (w / "run_a").string()) == 0 &&
                 run_cli("train" + train + " --out " + (w / "run_b").string()) == 0;
  bool same_ckpt = false;
  if (trained) {
    auto a = testing::slurp(w / "run_a" / "checkpoints" / "epoch_002.agrgan");
    auto b = testing::slurp(w / "run_b" / "checkpoints" / "epoch_002.agrgan");
    same_ckpt = !a.empty() && a == b;
  }
  report(9, same_index && same_images && same_ckpt, "determinism: synth index hash and train checkpoints reproduce",
         fmt("index %s vs %s (%s), images %s, final checkpoints %s", ha.substr(0, 12).c_str(),
             hb.substr(0, 12).c_str(), same_index ? "equal" : "DIFFER", same_images ? "equal" : "DIFFER",
             trained ? (same_ckpt ? "byte-identical" : "DIFFER") : "not produced"));
}

void criterion_10(const fs::path& work) {
  const fs::path w = work / "ckpt";
  fs::create_directories(w);
  bool identical = true;
  for (const auto& profile : {ScaleProfile::desk(), ScaleProfile::paper()}) {
    AgrGan m(profile, 31);
    save_agrgan(m, w / (profile.name + "_a.agrgan"));
    AgrGan back = load_agrgan(w / (profile.name + "_a.agrgan"));
    save_agrgan(back, w / (profile.name + "_b.agrgan"));
    identical = identical && testing::slurp(w / (profile.name + "_a.agrgan")) ==
                                 testing::slurp(w / (profile.name + "_b.agrgan"));
  }
  std::string message;
  bool named = false;
  try {
    AgrGan desk(ScaleProfile::desk(), 1);
    load_into(desk, w / "paper_a.agrgan");
  } catch (const FormatError& e) {
    message = e.what();
    named = message.find("meta.profile") != std::string::npos;
  }
  report(10, identical && named, "checkpoint save/load/save byte-identical; profile mismatch names the tensor",
         fmt("round trip %s; mismatch: \"%s\"", identical ? "byte-identical" : "DIFFERS", message.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::temp_directory_path() / "agrgan_acceptance";
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--work DIR]\n", argv[0]);
      return 2;
    }
  }
  auto want = [&](int k) { return only.empty() || only.count(k) > 0; };
  fs::create_directories(work);
  set_warning_sink([](const std::string&) {});

  auto t0 = std::chrono::steady_clock::now();
  if (want(1)) criterion_1();
  if (want(3)) criterion_3();
  if (want(10)) criterion_10(work);
  if (want(9)) criterion_9(work);

  Campaign campaign;
  bool need_campaign = want(2) || want(4) || want(5) || want(6) || want(7) || want(8);
  if (need_campaign) {
    std::printf("  training campaign: %zu identities x %zu, seed %llu, %zu epochs\n", kIdentities, kPerIdentity,
                static_cast<unsigned long long>(kSeed), kEpochs);
    std::fflush(stdout);
    run_campaign(campaign, work / "campaign", want(8));
  }
  if (want(2)) criterion_2(campaign.ok ? &campaign.sn : nullptr);
  if (want(4)) criterion_4(&campaign, work);
  if (want(5)) criterion_5(campaign);
  if (want(6)) criterion_6(campaign);
  if (want(7)) criterion_7(campaign);
  if (want(8)) criterion_8(campaign);

  std::printf("%d criteria failed; %.0f s total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
