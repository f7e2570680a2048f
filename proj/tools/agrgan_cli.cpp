// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

// agrgan: dataset synthesis, training, generation and evaluation.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure or unmet
// oracle threshold, 4 internal error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "agrgan/checkpoint.hpp"
#include "agrgan/dataset.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/evaluation.hpp"
#include "agrgan/training.hpp"

namespace fs = std::filesystem;
using namespace agrgan;
using json = nlohmann::ordered_json;

namespace {

constexpr int kUsage = 2;
constexpr int kNumerical = 3;
constexpr int kInternal = 4;

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FormatError("cannot create output directory '" + dir.string() + "'");
}

Dataset load_data(const fs::path& dir) {
  if (!fs::exists(dir / "index.csv")) throw FormatError("no dataset at '" + dir.string() + "' (index.csv missing)");
  return read_dataset(dir);
}

// "id=2,tv=0.5" → overrides on top of `w`.
LossWeights parse_weights(const std::string& spec, LossWeights w) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ArgumentError("--weights: expected name=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ArgumentError("--weights: bad number in '" + item + "'");
    }
    if (key == "id") w.id = v;
    else if (key == "agegap") w.agegap = v;
    else if (key == "tv") w.tv = v;
    else if (key == "adv_face") w.adv_face = v;
    else if (key == "adv_enc") w.adv_enc = v;
    else throw ArgumentError("--weights: unknown term '" + key + "' (id, agegap, tv, adv_face, adv_enc)");
  }
  w.validate();
  return w;
}

std::vector<std::size_t> parse_groups(const std::string& spec) {
  if (spec == "all" || spec == "0..9") return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int g = -1;
    try {
      g = std::stoi(item, &used);
    } catch (const std::exception&) {
    }
    if (used != item.size() || g < 0 || g >= static_cast<int>(kAgeGroups)) {
      throw ArgumentError("--groups: '" + item + "' is not an age group 0..9");
    }
    out.push_back(static_cast<std::size_t>(g));
  }
  if (out.empty()) throw ArgumentError("--groups: empty list");
  return out;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t identities = 200, per_identity = 10, size = 32;
  std::uint64_t seed = 1;
  fs::path out;
};

int cmd_synth(const SynthArgs& a) {
  Dataset d = generate_synthetic(a.identities, a.per_identity, a.seed, a.size);
  make_dir(a.out);
  write_dataset(d, a.out);
  json m;
  m["command"] = "synth";
  m["created"] = utc_now();
  m["seed"] = a.seed;
  m["config"] = {{"identities", a.identities}, {"per_identity", a.per_identity}, {"size", a.size}};
  m["samples"] = d.size();
  m["index_hash"] = git_blob_hash(a.out / "index.csv");
  write_file(a.out / "manifest.json", m.dump(2) + "\n");
  std::printf("wrote %zu samples to %s (index %s)\n", d.size(), a.out.string().c_str(),
              m["index_hash"].get<std::string>().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path data, out;
  std::string profile = "desk";
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::optional<std::size_t> batch;
  double lr = 2e-4, beta1 = 0.5;
  std::string weights;
  std::size_t d_steps = 1, checkpoint_every = 1;
  double split = 0.8;
};

int cmd_train(const TrainArgs& a) {
  Dataset all = load_data(a.data);
  TrainConfig c = TrainConfig::defaults_for(ScaleProfile::by_name(a.profile));
  if (a.batch) c.batch_size = *a.batch;
  c.lr = a.lr;
  c.beta1 = a.beta1;
  c.epochs = a.epochs;
  c.seed = a.seed;
  c.d_steps = a.d_steps;
  c.checkpoint_every = a.checkpoint_every;
  c.weights = parse_weights(a.weights, c.weights);
  c.validate();
  auto [train_split, heldout] = split_by_identity(all, a.split, a.seed);

  make_dir(a.out);
  EmbeddingNet phi = train_phi(train_split, a.seed);
  {
    std::vector<nn::StateEntry> st;
    phi.collect_state(st);
    write_checkpoint(a.out / "phi.agrgan", snapshot(st));
  }
  std::map<std::string, std::string> notes{
      {"dataset_dir", fs::absolute(a.data).string()},
      {"dataset_index_hash", git_blob_hash(a.data / "index.csv")},
      {"split_train_fraction", std::to_string(a.split)},
      {"train_samples", std::to_string(train_split.size())},
      {"heldout_samples", std::to_string(heldout.size())},
      {"phi", "phi.agrgan"},
  };
  AgrGan model(c.profile, c.seed);
  const std::size_t per_epoch = train_split.size() / c.batch_size;
  auto res = train(model, phi, c, train_split, a.out, notes,
                   [&](std::size_t epoch, std::size_t step, const StepReport& r) {
                     if ((step + 1) % per_epoch == 0) {
                       std::fprintf(stderr, "epoch %zu/%zu  total %.4f  id %.4f  agegap %.4f\n", epoch, c.epochs,
                                    r.total, r.id, r.agegap);
                     }
                   });
  std::printf("trained %zu epochs, %zu steps; final checkpoint %s\n", c.epochs, res.history.size(),
              res.checkpoints.back().string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  fs::path ckpt, out;
  std::vector<fs::path> inputs;
  std::string groups = "all";
  std::size_t gender = 0;
};

int cmd_generate(const GenerateArgs& a) {
  AgrGan model = load_agrgan(a.ckpt);
  auto groups = parse_groups(a.groups);
  if (a.gender > 1) throw ArgumentError("--gender must be 0 or 1");
  const std::size_t s = model.profile.image_size, plane = s * s;
  make_dir(a.out);

  // Grid: one row per input, one column per target group.
  const std::size_t gw = s * groups.size(), gh = s * a.inputs.size();
  std::vector<double> grid(3 * gw * gh, 0.0);
  json outputs = json::array();
  for (std::size_t row = 0; row < a.inputs.size(); ++row) {
    std::size_t w = 0, h = 0;
    auto raw = read_ppm(a.inputs[row], w, h);
    if (w != s || h != s) {
      throw ArgumentError("input '" + a.inputs[row].string() + "' is " + std::to_string(w) + "x" +
                          std::to_string(h) + " but the checkpoint expects " + std::to_string(s) + "x" +
                          std::to_string(s));
    }
    Tensor x = Tensor::from_data({1, 3, s, s}, normalize(raw));
    std::vector<ConditionVector> conds;
    for (std::size_t g : groups) conds.push_back(encode_condition(g, a.gender));
    std::vector<double> xs;
    for (std::size_t k = 0; k < groups.size(); ++k) xs.insert(xs.end(), x.data().begin(), x.data().end());
    Tensor y;
    {
      NoGradGuard guard;
      y = model.transform(Tensor::from_data({groups.size(), 3, s, s}, std::move(xs)), condition_batch(conds));
    }
    for (std::size_t k = 0; k < groups.size(); ++k) {
      auto img = denormalize(y.data().subspan(k * 3 * plane, 3 * plane));
      char name[256];
      std::snprintf(name, sizeof name, "%s_g%zu.ppm", a.inputs[row].stem().string().c_str(), groups[k]);
      write_ppm(a.out / name, img, s, s);
      outputs.push_back(name);
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < s; ++j) {
            grid[c * gw * gh + (row * s + i) * gw + k * s + j] = img[c * plane + i * s + j];
          }
        }
      }
    }
  }
  write_ppm(a.out / "grid.ppm", grid, gw, gh);
  json m;
  m["command"] = "generate";
  m["created"] = utc_now();
  m["checkpoint"] = fs::absolute(a.ckpt).string();
  m["profile"] = model.profile.name;
  json inputs = json::array();
  for (const auto& p : a.inputs) inputs.push_back(p.string());
  m["inputs"] = inputs;
  m["groups"] = groups;
  m["gender"] = a.gender;
  m["outputs"] = outputs;
  m["grid"] = "grid.ppm";
  write_file(a.out / "manifest.json", m.dump(2) + "\n");
  std::printf("wrote %zu images and a %zux%zu grid to %s\n", outputs.size(), groups.size(), a.inputs.size(),
              a.out.string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path ckpt, data, out, oracles;
  std::string experiment = "aging";
  std::optional<std::uint64_t> seed;
  std::optional<double> split;
  std::optional<std::size_t> epochs;
};

int cmd_eval(const EvalArgs& a) {
  AgrGan model = load_agrgan(a.ckpt);
  Dataset all = load_data(a.data);
  if (all.image_size != model.profile.image_size) {
    throw ArgumentError("dataset images are " + std::to_string(all.image_size) + "px but the checkpoint expects " +
                        std::to_string(model.profile.image_size));
  }
  // Split, seed and training config default to the run that made the checkpoint.
  json run;
  fs::path run_manifest = a.ckpt.parent_path().parent_path() / "manifest.json";
  if (fs::exists(run_manifest)) {
    std::ifstream in(run_manifest);
    run = json::parse(in, nullptr, false);
    if (run.is_discarded()) run = json::object();
  }
  std::uint64_t seed = a.seed.value_or(run.value("seed", std::uint64_t{1}));
  double split = a.split.value_or(0.8);
  if (!a.split && run.contains("notes") && run["notes"].contains("split_train_fraction")) {
    split = std::stod(run["notes"]["split_train_fraction"].get<std::string>());
  }
  auto [train_split, eval_split] = split_by_identity(all, split, seed);

  make_dir(a.out);
  OracleModels oracles;
  if (!a.oracles.empty()) {
    oracles = load_oracles(a.oracles, all.image_size);
  } else {
    oracles = pretrain_oracles(train_split, eval_split, seed);
    save_oracles(oracles, a.out / "oracles.agrgan");
  }

  json m;
  m["command"] = "eval";
  m["created"] = utc_now();
  m["experiment"] = a.experiment;
  m["checkpoint"] = fs::absolute(a.ckpt).string();
  m["dataset_index_hash"] = git_blob_hash(a.data / "index.csv");
  m["seed"] = seed;
  m["split_train_fraction"] = split;
  m["eval_samples"] = eval_split.size();
  m["oracles"] = json::parse(oracle_json(oracles.report));
  if (a.experiment == "aging") {
    auto r = aging_model_eval(model, eval_split, oracles);
    write_aging_csv(r, a.out / "aging.csv");
    m["summary"] = json::parse(aging_json(r));
  } else if (a.experiment == "identity") {
    auto r = identity_preservation_eval(model, eval_split, oracles);
    write_identity_csv(r, a.out / "identity.csv");
    m["summary"] = json::parse(identity_json(r));
  } else if (a.experiment == "verification") {
    auto r = verification_gain_eval(model, eval_split, oracles);
    write_verification_csv(r, a.out / "verification.csv");
    write_roc_csv(r.baseline_scores, a.out / "roc_baseline.csv");
    write_roc_csv(r.agr_scores, a.out / "roc_agr.csv");
    m["summary"] = json::parse(verification_json(r));
  } else if (a.experiment == "ablation") {
    TrainConfig c = TrainConfig::defaults_for(model.profile);
    c.seed = seed;
    if (run.contains("config")) {
      c.batch_size = run["config"].value("batch_size", c.batch_size);
      c.lr = run["config"].value("lr", c.lr);
      c.beta1 = run["config"].value("beta1", c.beta1);
      c.epochs = run["config"].value("epochs", c.epochs);
      c.d_steps = run["config"].value("d_steps", c.d_steps);
    }
    if (run.contains("weights")) {
      const auto& w = run["weights"];
      c.weights = {w.value("id", 1.0), w.value("agegap", 1.0), w.value("tv", 1.0), w.value("adv_face", 1.0),
                   w.value("adv_enc", 1.0)};
    }
    if (a.epochs) c.epochs = *a.epochs;
    c.checkpoint_every = c.epochs == 0 ? 1 : c.epochs;
    std::vector<VariantResult> results{evaluate_variant(model, eval_split, oracles, "full", c.weights)};
    results.back().final_checkpoint = a.ckpt;
    for (const char* v : {"no_denc", "no_identity", "no_agegap"}) {
      std::fprintf(stderr, "training variant %s\n", v);
      results.push_back(ablation_run(c, train_split, eval_split, oracles, v, a.out / v));
    }
    write_ablation_csv(results, a.out / "ablation.csv");
    m["summary"] = json::parse(ablation_json(results));
  } else {
    throw ArgumentError("--experiment must be aging, identity, verification or ablation");
  }
  write_file(a.out / "report.json", m["summary"].dump(2) + "\n");
  write_file(a.out / "manifest.json", m.dump(2) + "\n");
  std::printf("%s\n", m["summary"].dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AGR-GAN desk-scale toolkit"};
  app.set_config("--config", "", "key=value file (train.epochs=5 or a [train] section); flags override it");
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset");
  synth->add_option("--identities", sa.identities)->check(CLI::PositiveNumber);
  synth->add_option("--per-identity", sa.per_identity)->check(CLI::PositiveNumber);
  synth->add_option("--size", sa.size)->check(CLI::PositiveNumber);
  synth->add_option("--seed", sa.seed);
  synth->add_option("--out", sa.out)->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train AGR-GAN on a dataset directory");
  trn->add_option("--data", ta.data)->required();
  trn->add_option("--out", ta.out)->required();
  trn->add_option("--profile", ta.profile)->check(CLI::IsMember({"desk", "paper"}));
  trn->add_option("--epochs", ta.epochs);
  trn->add_option("--seed", ta.seed);
  trn->add_option("--batch", ta.batch, "default 64 (desk) or 128 (paper)");
  trn->add_option("--lr", ta.lr);
  trn->add_option("--beta1", ta.beta1);
  trn->add_option("--weights", ta.weights, "overrides such as id=2,tv=0.5");
  trn->add_option("--d-steps", ta.d_steps);
  trn->add_option("--checkpoint-every", ta.checkpoint_every);
  trn->add_option("--split", ta.split, "fraction of identities used for training");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Transform images to target age groups");
  gen->add_option("--ckpt", ga.ckpt)->required()->check(CLI::ExistingFile);
  gen->add_option("--input", ga.inputs, "P6 image; repeat for several rows")->required()->check(CLI::ExistingFile);
  gen->add_option("--groups", ga.groups, "comma-separated groups or 'all'");
  gen->add_option("--gender", ga.gender);
  gen->add_option("--out", ga.out)->required();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Run one experiment against a checkpoint");
  ev->add_option("--ckpt", ea.ckpt)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ea.data)->required();
  ev->add_option("--experiment", ea.experiment)
      ->check(CLI::IsMember({"aging", "identity", "verification", "ablation"}));
  ev->add_option("--out", ea.out)->required();
  ev->add_option("--oracles", ea.oracles, "reuse saved oracles instead of training them")->check(CLI::ExistingFile);
  ev->add_option("--seed", ea.seed, "default: the training run's seed");
  ev->add_option("--split", ea.split, "default: the training run's split");
  ev->add_option("--epochs", ea.epochs, "ablation only: epochs per variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*trn) return cmd_train(ta);
    if (*gen) return cmd_generate(ga);
    if (*ev) return cmd_eval(ea);
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}
