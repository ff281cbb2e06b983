/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "common/error.hpp"
#include "corpus/corpus.hpp"

using namespace munmt;
using namespace munmt::corpus;

namespace {

Dataset mono_of(const std::string& id, std::vector<std::size_t> lengths, int lang = 0) {
  Dataset d;
  d.id = id;
  d.kind = DatasetKind::Mono;
  d.lang = lang;
  int next = 5;
  for (auto n : lengths) {
    TokenSeq s;
    s.lang = lang;
    for (std::size_t i = 0; i < n; ++i) s.ids.push_back(next++ % 50 + 5);
    d.mono.push_back(s);
  }
  return d;
}

Dataset parallel_of(const std::string& id, std::size_t n, int a = 0, int b = 1) {
  Dataset d;
  d.id = id;
  d.kind = DatasetKind::Parallel;
  d.src_lang = a;
  d.tgt_lang = b;
  for (std::size_t i = 0; i < n; ++i) {
    d.pairs.push_back({TokenSeq{{7, 8}, a}, TokenSeq{{9}, b}});
  }
  return d;
}

// Independent formula: n^(1/T) normalised; the total cancels.
std::vector<double> oracle_weights(const std::vector<std::size_t>& n, double t) {
  std::vector<double> w;
  double z = 0;
  for (auto v : n) {
    w.push_back(std::exp(std::log(static_cast<double>(v)) / t));
    z += w.back();
  }
  for (auto& v : w) v /= z;
  return w;
}

}  // namespace

TEST_CASE("temperature weights") {
  const std::vector<std::size_t> sizes{100, 10};
  const auto w = temperature_weights(sizes, 5.0);
  const auto o = oracle_weights(sizes, 5.0);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(o[0]).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(0.613).epsilon(1e-3));
  CHECK(w[1] == doctest::Approx(0.387).epsilon(1e-3));

  const std::vector<std::size_t> equal{7, 7, 7, 7};
  for (double v : temperature_weights(equal, 5.0)) CHECK(v == doctest::Approx(0.25));

  const std::vector<std::size_t> skew{1, 1000000};
  for (double v : temperature_weights(skew, 1e6)) CHECK(std::abs(v - 0.5) < 1e-3);

  // T = 1 is proportional sampling.
  const auto p = temperature_weights(sizes, 1.0);
  CHECK(p[0] == doctest::Approx(100.0 / 110.0));

  CHECK_THROWS_AS(temperature_weights(std::span<const std::size_t>{}, 5.0), Error);
  const std::vector<std::size_t> zero{3, 0};
  CHECK_THROWS_AS(temperature_weights(zero, 5.0), Error);
  CHECK_THROWS_AS(temperature_weights(sizes, 0.0), Error);
}

TEST_CASE("temperature weights are normalised and monotone in size") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> sizes(1 + rng.below(8));
    for (auto& s : sizes) s = 1 + rng.below(100000);
    const double t = 0.5 + 10.0 * rng.uniform();
    const auto w = temperature_weights(sizes, t);
    double sum = 0;
    for (double v : w) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::size_t j = 0; j < sizes.size(); ++j) {
        if (sizes[i] > sizes[j]) CHECK(w[i] >= w[j]);
      }
    }
  }
}

TEST_CASE("dataset choice frequencies") {
  const auto m1 = mono_of("m1", {3, 3});
  const auto m2 = mono_of("m2", {4});
  const auto pa = parallel_of("pa", 100);
  const auto pb = parallel_of("pb", 10);
  const std::vector<const Dataset*> pool{&m1, &pa, &m2, &pb};
  SamplingPolicy policy;
  Rng rng(5);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[choose_dataset(pool, policy, rng)];
  const double mono = (counts[0] + counts[2]) / double(n);
  CHECK(std::abs(mono - 0.5) < 0.01);
  CHECK(std::abs(counts[0] / double(counts[0] + counts[2]) - 0.5) < 0.01);
  const auto o = oracle_weights({100, 10}, 5.0);
  CHECK(std::abs(counts[1] / double(counts[1] + counts[3]) - o[0]) < 0.01);

  SamplingPolicy mono_only{0.0, 5.0};
  for (int i = 0; i < 1000; ++i) {
    const auto k = choose_dataset(pool, mono_only, rng);
    CHECK((k == 0 || k == 2));
  }

  Rng a(99), b(99);
  for (int i = 0; i < 500; ++i) CHECK(choose_dataset(pool, policy, a) == choose_dataset(pool, policy, b));

  const std::vector<const Dataset*> no_parallel{&m1};
  SamplingPolicy par_only{1.0, 5.0};
  CHECK_THROWS_AS(choose_dataset(no_parallel, par_only, rng), Error);
}

TEST_CASE("sampling policy validation") {
  CHECK_NOTHROW(SamplingPolicy{}.validate());
  CHECK_THROWS_AS((SamplingPolicy{1.5, 5.0}.validate()), Error);
  CHECK_THROWS_AS((SamplingPolicy{0.5, 0.0}.validate()), Error);
}

TEST_CASE("draw_batch") {
  Rng rng(1);
  const auto one = mono_of("one", {4});
  const auto b = draw_batch(one, 8, rng);
  CHECK(b.items.size() == 8);
  for (auto i : b.items) CHECK(i == 0);
  CHECK(b.second.empty());

  const auto two = mono_of("two", {3, 5});
  const auto b2 = make_batch(two, {0, 1});
  CHECK(b2.width() == 5);

  const auto pa = parallel_of("pa", 3);
  const auto b3 = draw_batch(pa, 4, rng);
  CHECK(b3.first.size() == 4);
  CHECK(b3.second.size() == 4);
  CHECK(b3.width() == 2);

  const auto ten = mono_of("ten", std::vector<std::size_t>(10, 2));
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) {
    for (auto k : draw_batch(ten, 10, rng).items) ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c / 100000.0 - 0.1) < 0.01);

  const auto empty = mono_of("empty", {});
  CHECK_THROWS_AS(draw_batch(empty, 2, rng), Error);
}

namespace {

void check_partition(const Dataset& d, const std::vector<std::vector<std::size_t>>& batches,
                     std::size_t max_tokens) {
  std::multiset<std::size_t> seen;
  for (const auto& b : batches) {
    REQUIRE_FALSE(b.empty());
    std::size_t widest = 0;
    for (auto i : b) {
      seen.insert(i);
      widest = std::max(widest, d.item_length(i));
    }
    CHECK(b.size() * widest <= max_tokens);
  }
  CHECK(seen.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(seen.count(i) == 1);
}

}  // namespace

TEST_CASE("bucket_batches") {
  const auto hundred = mono_of("h", std::vector<std::size_t>(10, 100));
  auto b = bucket_batches(hundred, 2000, 8);
  for (const auto& batch : b) CHECK(batch.size() <= 20);
  check_partition(hundred, b, 2000);

  const auto single = mono_of("s", {5});
  b = bucket_batches(single, 2000, 8);
  REQUIRE(b.size() == 1);
  CHECK(b[0] == std::vector<std::size_t>{0});

  std::vector<std::size_t> mixed_lengths(10, 8);
  mixed_lengths.insert(mixed_lengths.end(), 10, 64);
  const auto mixed = mono_of("m", mixed_lengths);
  b = bucket_batches(mixed, 2000, 8);
  for (const auto& batch : b) {
    std::set<std::size_t> lens;
    for (auto i : batch) lens.insert(mixed.item_length(i));
    CHECK(lens.size() == 1);
  }
  check_partition(mixed, b, 2000);

  const auto too_long = mono_of("t", {3, 2001});
  CHECK_THROWS_AS(bucket_batches(too_long, 2000, 8), Error);
}

TEST_CASE("bucket_batches partitions random datasets") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> lengths(1 + rng.below(300));
    for (auto& l : lengths) l = 1 + rng.below(90);
    const auto d = mono_of("r", lengths);
    const std::size_t max_tokens = 90 + rng.below(2000);
    const std::size_t width = 1 + rng.below(16);
    const auto b = bucket_batches(d, max_tokens, width);
    check_partition(d, b, max_tokens);
    for (const auto& batch : b) {
      const auto key = (d.item_length(batch[0]) - 1) / width;
      for (auto i : batch) CHECK((d.item_length(i) - 1) / width == key);
    }
  }
}

TEST_CASE("dataset validation") {
  auto m = mono_of("m", {2, 3});
  CHECK_NOTHROW(m.validate());
  m.mono[1].lang = 4;
  CHECK_THROWS_AS(m.validate(), Error);
  auto p = parallel_of("p", 2);
  CHECK_NOTHROW(p.validate());
  p.pairs[0].second.ids.clear();
  CHECK_THROWS_AS(p.validate(), Error);
  auto same = parallel_of("s", 1, 1, 1);
  CHECK_THROWS_AS(same.validate(), Error);
}

TEST_CASE("language registry") {
  LanguageRegistry reg({{"En", true, false}, {"A1", false, false}, {"X1", false, true}});
  CHECK(reg.size() == 3);
  CHECK(reg.english() == 0);
  CHECK(reg.id("X1") == 2);
  CHECK(reg.targets() == std::vector<int>{2});
  CHECK_FALSE(reg.find("Zz").has_value());
  CHECK_THROWS_AS(reg.id("Zz"), Error);
  CHECK_THROWS_AS(reg.at(3), Error);
  CHECK_THROWS_AS(LanguageRegistry({{"A", false, false}}), Error);
  CHECK_THROWS_AS(LanguageRegistry({{"En", true, false}, {"En", false, true}}), Error);
}

TEST_CASE("manifest roundtrip and file readers") {
  const auto dir = std::filesystem::temp_directory_path() / "munmt_test_corpus";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  Manifest m;
  m.root = dir;
  m.datasets.push_back({"en.mono", DatasetKind::Mono, "En", "", "", "en.txt", "", "", false});
  m.datasets.push_back({"en-a1", DatasetKind::Parallel, "", "En", "A1", "", "p.en", "p.a1", false});
  m.testsets.push_back({"test", "X1", "En", "t.x1", "t.en"});
  m.save(dir / "manifest.json");
  const auto back = Manifest::load(dir / "manifest.json");
  CHECK(back.to_json() == m.to_json());
  CHECK(back.resolve("en.txt") == dir / "en.txt");
  CHECK(back.testsets[0].direction() == "X1-En");

  CHECK_THROWS_AS(Manifest::parse("{", dir), Error);
  CHECK_THROWS_AS(Manifest::parse(R"({"datasets":[{"id":"a","kind":"weird"}]})", dir), Error);
  CHECK_THROWS_AS(
      Manifest::parse(R"({"datasets":[{"id":"a","kind":"mono","lang":"En","path":"x"},
                                      {"id":"a","kind":"mono","lang":"En","path":"y"}]})",
                      dir),
      Error);

  write_lines(dir / "a.txt", {"one", "", "  ", "two"});
  CHECK(read_lines(dir / "a.txt") == std::vector<std::string>{"one", "two"});
  write_lines(dir / "b.txt", {"uno", "dos", "tres", "cuatro"});
  const auto pairs = read_parallel(dir / "a.txt", dir / "b.txt");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].second == "uno");
  CHECK(pairs[1].second == "cuatro");
  write_lines(dir / "c.txt", {"x"});
  CHECK_THROWS_AS(read_parallel(dir / "a.txt", dir / "c.txt"), Error);
  CHECK_THROWS_AS(read_lines(dir / "missing.txt"), Error);
  std::filesystem::remove_all(dir);
}
