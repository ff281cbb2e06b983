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

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/corpus.hpp"
#include "pipeline/experiment.hpp"
#include "tokenizer/bpe.hpp"

using namespace munmt;
using namespace munmt::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "benchmark": {"vocab_types": 80, "mono_lines": 300, "parallel_lines": 120,
                "dev_lines": 12, "test_lines": 16, "seed": 5},
  "vocab": {"size": 160},
  "model": {"layers": 1, "hidden": 16, "ffn": 32, "heads": 2, "max_positions": 40},
  "stage1": {"steps": 10, "batch_size": 4, "warmup_steps": 3, "lr_peak": 0.001},
  "stage2": {"steps": 4, "round2_steps": 3, "warmup_steps": 2, "lr_peak": 0.001},
  "stage3": {"sweeps": 1, "max_tokens": 200, "warmup_steps": 1},
  "synth": {"english_lines_per_target": 20, "decode_batch": 16}
})";

fs::path scratch_root() {
  return fs::temp_directory_path() / ("munmt_pipeline_" + std::to_string(::getpid()));
}

struct Cleanup {
  ~Cleanup() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  auto p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny(const std::vector<std::string>& overrides = {}) {
  return ExperimentConfig::parse(kTinyConfig, overrides);
}

// Toy benchmark and vocabulary shared by every test in this binary.
const fs::path& shared_root() {
  static const fs::path root = [] {
    auto dir = scratch("shared");
    Experiment e(tiny(), dir);
    e.synth_data();
    e.train_vocab();
    return dir;
  }();
  return root;
}

// A run directory that reuses the shared data and vocabulary.
Experiment make_run(const std::string& name, std::vector<std::string> overrides = {}) {
  const auto& root = shared_root();
  auto dir = scratch(name);
  fs::copy_file(root / "vocab.txt", dir / "vocab.txt");
  overrides.push_back("manifest=" + (root / "data" / "manifest.json").string());
  return Experiment(tiny(overrides), dir);
}

std::string read(const fs::path& p) { return read_file(p); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("config overrides and error enumeration") {
  auto c = tiny({"stage1.steps=7", "seed=9", "eval.mode=13a", "pivots.X1=[\"A1\",\"A2\"]"});
  CHECK(c.stage1.steps == 7);
  CHECK(c.seed == 9);
  CHECK(c.eval.mode == eval::BleuMode::Detok13a);
  CHECK(c.pivots.at("X1") == std::vector<std::string>{"A1", "A2"});
  CHECK(c.eval_directions() == std::vector<std::string>{"X1-En", "En-X1"});

  // Round trip through JSON is stable.
  auto again = ExperimentConfig::parse(c.to_json());
  CHECK(again.to_json() == c.to_json());
  CHECK(again.digest() == c.digest());

  try {
    ExperimentConfig::parse(R"({"stage1": {"stepz": 3, "lr_peak": "fast"}, "model": {"heads": 3}})");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    const std::string msg = e.what();
    CHECK(msg.find("3 problems") != std::string::npos);
    CHECK(msg.find("stepz") != std::string::npos);
    CHECK(msg.find("lr_peak") != std::string::npos);
    CHECK(msg.find("heads") != std::string::npos);
  }
  CHECK(kind_of([] { ExperimentConfig::parse("{not json"); }) == ErrorKind::Config);
  CHECK(kind_of([] { tiny({"stage1.warmup_steps=0"}); }) == ErrorKind::Config);
  CHECK(kind_of([] { tiny({"nokey"}); }) == ErrorKind::Config);
}

TEST_CASE("checkpoint round trip and corruption") {
  auto run = make_run("ckpt");
  const auto mcfg = run.model_config();
  Checkpoint c;
  c.params = model::init_params(mcfg, 3);
  c.optim = tensor::make_optim_state(tensor::OptimizerKind::Adamax, c.params);
  c.optim.step = 12;
  c.optim.first[0].data()[0] = 0.25f;
  c.stage = StageTag::Stage2a;
  c.global_step = 42;
  c.stage_step = 7;
  c.vocab_digest = run.vocab().digest();
  c.config_digest = "arch";

  const auto bytes = serialize_checkpoint(c);
  CHECK(parse_checkpoint(bytes) == c);
  const auto path = run.out() / "c.bin";
  save_checkpoint(c, path);
  CHECK(load_checkpoint(path) == c);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { parse_checkpoint(bad_magic); }) == ErrorKind::Data);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(kind_of([&] { parse_checkpoint(bad_version); }) == ErrorKind::Data);
  CHECK(kind_of([&] { parse_checkpoint(bytes.substr(0, bytes.size() - 3)); }) == ErrorKind::Data);
  CHECK(kind_of([&] { parse_checkpoint(bytes + "x"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { check_compatible(c, "other", "arch"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { check_compatible(c, c.vocab_digest, "other"); }) == ErrorKind::Data);
  CHECK(kind_of([&] { load_checkpoint(run.out() / "missing.bin"); }) == ErrorKind::Io);
}

TEST_CASE("zero steps pass the initial parameters through") {
  auto run = make_run("zero", {"stage1.steps=0"});
  const auto c = run.stage1();
  CHECK(c.params == model::init_params(run.model_config(), derive_seed(1, "init")));
  CHECK(c.global_step == 0);
  CHECK(read_audit(run.stage_dir(StageTag::Stage1) / "audit.tsv").empty());
}

TEST_CASE("interrupted stage 1 resumes to the same state") {
  auto full = make_run("resume_full");
  const auto reference = full.stage1();
  const auto ref_audit = read(full.stage_dir(StageTag::Stage1) / "audit.tsv");
  CHECK(read_audit(full.stage_dir(StageTag::Stage1) / "audit.tsv").size() == 10);

  const auto& root = shared_root();
  auto dir = scratch("resume_cut");
  fs::copy_file(root / "vocab.txt", dir / "vocab.txt");
  auto cfg = tiny({"stage1.checkpoint_interval=5",
                   "manifest=" + (root / "data" / "manifest.json").string()});
  {
    // The logger reports progress after every update; throwing at step 7
    // leaves the step-5 checkpoint and seven audit lines behind.
    Experiment cut(cfg, dir, [](const std::string& msg) {
      if (msg.find("step 7/10") != std::string::npos) throw std::runtime_error("killed");
    });
    CHECK_THROWS_WITH(cut.stage1(), "killed");
  }
  CHECK(load_checkpoint(dir / "stage1" / "checkpoint.bin").stage_step == 5);
  CHECK(read_audit(dir / "stage1" / "audit.tsv").size() == 7);

  Experiment resumed(cfg, dir);
  const auto after = resumed.stage1();
  CHECK(after == reference);
  CHECK(read(dir / "stage1" / "audit.tsv") == ref_audit);
}

TEST_CASE("synthetic selection sizes and disjointness") {
  corpus::Dataset mono;
  mono.id = "mono.X";
  mono.kind = corpus::DatasetKind::Mono;
  mono.lang = 3;
  for (int i = 0; i < 1000; ++i) mono.mono.push_back(tok::TokenSeq{{5 + i % 7}, 3});
  const auto cfg = tiny();
  const auto r1 = synthetic_selection(mono, cfg, 1);
  const auto r2 = synthetic_selection(mono, cfg, 2);
  CHECK(r1.size() == 100);
  CHECK(r2.size() == 200);
  std::set<std::size_t> all(r1.begin(), r1.end());
  all.insert(r2.begin(), r2.end());
  CHECK(all.size() == 300);
  CHECK(*all.rbegin() < 1000);
  CHECK(synthetic_selection(mono, cfg, 1) == r1);

  mono.mono.resize(20);
  auto greedy = tiny({"synth.round1_mono_fraction=0.5"});
  CHECK(kind_of([&] { synthetic_selection(mono, greedy, 2); }) == ErrorKind::Data);
}

TEST_CASE("full tiny pipeline: layout, hygiene, synthetic data, stage-3 audit") {
  auto run = make_run("pipeline");
  const auto report = run.run_pipeline();
  const auto& out = run.out();

  for (const char* f : {"config.resolved.json", "digests.json", "run.json", "vocab.txt",
                        "report.tsv", "report.json"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  for (auto tag : {StageTag::Stage1, StageTag::Stage2a, StageTag::Stage2b, StageTag::Stage3}) {
    CHECK(fs::exists(run.stage_dir(tag) / "checkpoint.bin"));
    CHECK(fs::exists(run.stage_dir(tag) / "report.tsv"));
  }
  CHECK(report.rows.size() == 2);
  CHECK(report.find("X1-En") != nullptr);
  CHECK(report.find("En-X1") != nullptr);
  CHECK(load_checkpoint(run.stage_dir(StageTag::Stage3) / "checkpoint.bin").stage == StageTag::Stage3);

  // Stages 1 and 2a never see parallel data with the target language, except
  // round-1 synthetic pairs in 2a.
  for (auto tag : {StageTag::Stage1, StageTag::Stage2a}) {
    for (const auto& e : read_audit(run.stage_dir(tag) / "audit.tsv")) {
      if (e.objective != "ce_bidir") continue;
      const bool touches_target = e.src_lang == "X1" || e.tgt_lang == "X1";
      if (tag == StageTag::Stage1) CHECK_FALSE(touches_target);
      if (touches_target) CHECK(e.dataset.rfind("synth.r1.", 0) == 0);
    }
  }

  // The target side of round-1 synthetic data is copied from the mono corpus.
  const auto synth_manifest = corpus::Manifest::load(out / "synth" / "round1" / "manifest.json");
  REQUIRE(synth_manifest.datasets.size() == 1);
  const auto& sd = synth_manifest.datasets[0];
  CHECK(sd.synthetic);
  CHECK(sd.src_lang == "En");
  CHECK(sd.tgt_lang == "X1");
  const auto pairs = corpus::read_parallel(synth_manifest.resolve(sd.src_path),
                                           synth_manifest.resolve(sd.tgt_path));
  const auto mono = corpus::read_lines(run.manifest().resolve("mono.X1.txt"));
  std::set<std::string> mono_set;
  for (const auto& l : mono) mono_set.insert(tok::normalize(l));
  CHECK(!pairs.empty());
  for (const auto& [en, x] : pairs) CHECK(mono_set.count(x) == 1);

  // Round 2 adds X1->En pairs whose English side comes from the En mono.
  const auto r2 = corpus::Manifest::load(out / "synth" / "round2" / "manifest.json");
  CHECK(r2.datasets.size() == 2);

  // One stage-3 sweep, enumerated by hand for this manifest and pivot map
  // X1:[A1]: English mono is back-translated through the single target;
  // target mono through its pivot and English; auxiliary mono is skipped;
  // En-A1 cross-translates through X1 (its pivot is A1); En-A2 feeds no
  // target; each synthetic set gets one CE update in its labeled direction.
  using Row = std::tuple<std::string, std::string, std::string, std::string>;
  std::multiset<Row> expected{
      {"mono.En", "bt", "X1", "En"},
      {"mono.X1", "bt", "A1", "X1"},
      {"mono.X1", "bt", "En", "X1"},
      {"para.En-A1", "ct", "X1", "A1"},
      {"synth.r2.En-X1", "ce", "En", "X1"},
      {"synth.r2.X1-En", "ce", "X1", "En"},
  };
  std::multiset<Row> got;
  for (const auto& e : read_audit(run.stage_dir(StageTag::Stage3) / "audit.tsv")) {
    got.insert({e.dataset, e.objective, e.src_lang, e.tgt_lang});
  }
  CHECK(got == expected);

  // evaluate on an explicit checkpoint writes the report beside it.
  const auto s1 = run.evaluate(run.stage_dir(StageTag::Stage1) / "checkpoint.bin");
  CHECK(s1.rows.size() == 2);

  SUBCASE("ablation arms") {
    run.ablate("no-synthetic");
    for (const auto& e : read_audit(out / "ablate" / "no-synthetic" / "stage3" / "audit.tsv")) {
      CHECK(e.dataset.rfind("synth.", 0) != 0);
    }
    CHECK(read(out / "ablate" / "no-synthetic" / "stage1" / "checkpoint.bin") ==
          read(run.stage_dir(StageTag::Stage1) / "checkpoint.bin"));

    run.ablate("bt-only");
    for (const auto& e : read_audit(out / "ablate" / "bt-only" / "stage3" / "audit.tsv")) {
      CHECK(e.objective != "ct");
    }

    run.ablate("single-aux");
    for (const auto& e : read_audit(out / "ablate" / "single-aux" / "stage1" / "audit.tsv")) {
      CHECK(e.dataset != "para.En-A2");
    }
    CHECK(kind_of([&] { run.ablate("nope"); }) == ErrorKind::Config);
  }
}

TEST_CASE("fixed seed gives identical runs") {
  auto a = make_run("det_a");
  auto b = make_run("det_b");
  a.stage1();
  b.stage1();
  CHECK(read(a.stage_dir(StageTag::Stage1) / "audit.tsv") ==
        read(b.stage_dir(StageTag::Stage1) / "audit.tsv"));
  CHECK(read(a.stage_dir(StageTag::Stage1) / "checkpoint.bin") ==
        read(b.stage_dir(StageTag::Stage1) / "checkpoint.bin"));
  auto c = make_run("det_c", {"seed=2"});
  c.stage1();
  CHECK(read(a.stage_dir(StageTag::Stage1) / "audit.tsv") !=
        read(c.stage_dir(StageTag::Stage1) / "audit.tsv"));
}

TEST_CASE("missing inputs are reported") {
  auto run = make_run("missing");
  CHECK(kind_of([&] { run.stage2(1); }) == ErrorKind::Io);
  CHECK(kind_of([&] { run.synth_bt(3); }) == ErrorKind::Config);
  auto bad = make_run("bad_exclude", {"exclude_datasets=[\"nope\"]"});
  CHECK(kind_of([&] { bad.stage1(); }) == ErrorKind::Config);
}
