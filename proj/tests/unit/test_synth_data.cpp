// Copyright (c) 2026 The agrgan Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "agrgan/dataset.hpp"
#include "agrgan/errors.hpp"
#include "agrgan/evaluation.hpp"
#include "agrgan/labels.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agrgan;
using agrgan::testing::CaptureWarnings;
using agrgan::testing::TempDir;

namespace {

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("age binning follows the ten-group table") {
  CHECK(age_to_group(3) == 0);
  CHECK(age_to_group(33) == 5);
  CHECK(age_to_group(70) == 8);
  CHECK(age_to_group(70.5) == 9);
  CHECK(age_to_group(20) == 3);
  CHECK(age_to_group(30) == 4);
  CHECK(age_to_group(0) == 0);
  CHECK(age_to_group(5) == 0);
  CHECK(age_to_group(5.01) == 1);
  CHECK(age_to_group(150) == 9);
  CHECK_THROWS_AS(age_to_group(-1), ArgumentError);
  CHECK_THROWS_AS(age_to_group(std::nan("")), ArgumentError);
}

TEST_CASE("age binning is monotone and surjective") {
  std::set<std::size_t> seen;
  std::size_t prev = 0;
  for (double a = 0; a <= 100; a += 0.25) {
    std::size_t g = age_to_group(a);
    CHECK(g >= prev);
    prev = g;
    seen.insert(g);
  }
  CHECK(seen.size() == kAgeGroups);
  for (std::size_t g = 0; g < kAgeGroups; ++g) {
    auto [lo, hi] = AgeBinning::range(g);
    CHECK(age_to_group(lo) == g);
    CHECK(age_to_group(hi) == g);
    CHECK(age_to_group(AgeBinning::representative_age(g)) == g);
  }
}

TEST_CASE("condition encoding") {
  auto c = encode_condition(0, 0);
  CHECK(c.age_onehot[0] == 1.0);
  CHECK(c.gender_onehot[0] == 1.0);
  auto d = encode_condition(9, 1);
  CHECK(d.age_onehot[9] == 1.0);
  CHECK(d.gender_onehot[1] == 1.0);
  for (std::size_t g = 0; g < kAgeGroups; ++g) {
    for (std::size_t s = 0; s < kGenders; ++s) {
      auto cv = encode_condition(g, s);
      double total = 0;
      for (double v : cv.flat()) total += v;
      CHECK(total == 2.0);
      CHECK(decode_condition(cv) == std::make_pair(g, s));
    }
  }
  CHECK_THROWS_AS(encode_condition(10, 0), ArgumentError);
  CHECK_THROWS_AS(encode_condition(0, 2), ArgumentError);
  ConditionVector bad;
  CHECK_THROWS_AS(decode_condition(bad), ArgumentError);

  std::vector<ConditionVector> conds{encode_condition(2, 1), encode_condition(7, 0)};
  Tensor t = condition_batch(conds);
  CHECK(t.shape() == Shape{2, 12});
  CHECK(t.data()[0 * 12 + 2] == 1.0);
  CHECK(t.data()[0 * 12 + 11] == 1.0);
  CHECK(t.data()[1 * 12 + 7] == 1.0);
  CHECK(t.data()[1 * 12 + 10] == 1.0);
}

TEST_CASE("intensity normalization") {
  CHECK(normalize_intensity(0) == -1.0);
  CHECK(normalize_intensity(255) == 1.0);
  CHECK(normalize_intensity(127.5) == 0.0);
  Rng rng(5);
  std::vector<double> raw(1000);
  for (double& v : raw) v = rng.uniform(0, 255);
  auto back = denormalize(normalize(raw));
  double worst = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) worst = std::max(worst, std::abs(back[i] - raw[i]));
  CHECK(worst <= 1e-12);

  CaptureWarnings w;
  CHECK(normalize_intensity(300) == 1.0);
  CHECK(normalize_intensity(-4) == -1.0);
  CHECK(w.messages.size() == 2);
}

TEST_CASE("synthetic renderer is deterministic and factor-controlled") {
  auto a = render_synthetic(11, 3, 25, 0, 32);
  auto b = render_synthetic(11, 3, 25, 0, 32);
  CHECK(a == b);
  CHECK(a.size() == 3 * 32 * 32);
  for (double v : a) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  // Each factor varied alone changes the image.
  CHECK(l2(a, render_synthetic(11, 4, 25, 0, 32)) > 0);
  CHECK(l2(a, render_synthetic(11, 3, 65, 0, 32)) > 0);
  CHECK(l2(a, render_synthetic(11, 3, 25, 1, 32)) > 0);
  CHECK_THROWS_AS(render_synthetic(11, 3, 25, 2, 32), ArgumentError);
}

TEST_CASE("distinct identities render distinct images") {
  for (std::size_t id = 0; id < 50; ++id) {
    CHECK(l2(render_synthetic(1, id, 40, 1, 32), render_synthetic(1, id + 1, 40, 1, 32)) > 0);
  }
}

TEST_CASE("generate_synthetic layout and determinism") {
  Dataset d = generate_synthetic(5, 4, 99, 16);
  CHECK(d.size() == 20);
  CHECK(d.image_size == 16);
  CHECK(d.identities() == std::vector<std::size_t>{0, 1, 2, 3, 4});
  Dataset e = generate_synthetic(5, 4, 99, 16);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.samples[i].pixels == e.samples[i].pixels);
    CHECK(d.samples[i].age_years == e.samples[i].age_years);
    // Same identity keeps one gender.
    CHECK(d.samples[i].gender == d.samples[i - i % 4].gender);
  }
  CHECK_THROWS_AS(generate_synthetic(0, 4, 1), ArgumentError);
  CHECK_THROWS_AS(generate_synthetic(4, 0, 1), ArgumentError);
}

TEST_CASE("split_by_identity keeps identities disjoint") {
  Dataset d = generate_synthetic(20, 3, 4, 16);
  auto [train, eval] = split_by_identity(d, 0.8, 7);
  CHECK(train.size() + eval.size() == d.size());
  CHECK(train.identities().size() == 16);
  auto a = train.identities(), b = eval.identities();
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  CHECK(common.empty());
  CHECK_THROWS_AS(split_by_identity(d, 1.0, 7), ArgumentError);
}

TEST_CASE("batch iterator") {
  BatchIterator it(256, 128, 3);
  CHECK(it.batches_per_epoch() == 2);
  CHECK(it.epoch(0) == BatchIterator(256, 128, 3).epoch(0));
  CHECK(it.epoch(0) != it.epoch(1));

  // Multiset oracle: one epoch covers the dataset minus the dropped remainder.
  BatchIterator odd(103, 10, 8);
  auto batches = odd.epoch(2);
  CHECK(batches.size() == 10);
  std::vector<std::size_t> seen;
  for (const auto& b : batches) {
    CHECK(b.size() == 10);
    seen.insert(seen.end(), b.begin(), b.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(seen.size() == 100);
  CHECK(seen.back() < 103);

  CHECK_THROWS_AS(BatchIterator(0, 1, 1), ArgumentError);
  CHECK_THROWS_AS(BatchIterator(10, 11, 1), ArgumentError);
}

TEST_CASE("image_batch packs NCHW") {
  Dataset d = generate_synthetic(2, 2, 1, 8);
  std::vector<std::size_t> idx{3, 0};
  Tensor t = image_batch(d, idx);
  CHECK(t.shape() == Shape{2, 3, 8, 8});
  CHECK(t.data()[0] == d.samples[3].pixels[0]);
  CHECK(t.data()[3 * 64] == d.samples[0].pixels[0]);
}

TEST_CASE("dataset cache round-trips through P6 files") {
  TempDir dir("cache");
  Dataset d = generate_synthetic(3, 2, 21, 16);
  write_dataset(d, dir.path);
  CHECK(std::filesystem::exists(dir.path / "index.csv"));
  std::ifstream in(dir.path / "index.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "path,identity,age,gender");

  Dataset back = read_dataset(dir.path);
  REQUIRE(back.size() == d.size());
  CHECK(back.image_size == 16);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.samples[i].pixels == d.samples[i].pixels);
    CHECK(back.samples[i].identity == d.samples[i].identity);
    CHECK(back.samples[i].age_years == d.samples[i].age_years);
    CHECK(back.samples[i].gender == d.samples[i].gender);
  }
  CHECK_THROWS_AS(read_dataset(dir.path / "missing"), FormatError);
}

TEST_CASE("git blob hash matches git's object id") {
  TempDir dir("hash");
  auto p = dir.path / "hello.txt";
  std::ofstream(p) << "hello\n";
  // `echo hello | git hash-object --stdin`
  CHECK(git_blob_hash(p) == "ce013625030ba8dba906f756967f9e9ca394464a");
  std::ofstream(dir.path / "empty.txt").close();
  CHECK(git_blob_hash(dir.path / "empty.txt") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("synthetic age factors are learnable by a small conv classifier") {
  // 625 identities x 10 samples -> 5000 training images after the 80/20 split.
  Dataset d = generate_synthetic(625, 10, 77, 32);
  auto [train, heldout] = split_by_identity(d, 0.8, 77);
  OracleConfig config;
  config.age_epochs = 6;
  AgeEstimator net = train_age_classifier(train, 77, config);
  double exact = age_accuracy(net, heldout, 0);
  MESSAGE("held-out exact age-group accuracy: " << exact);
  CHECK(exact >= 0.8);
}
