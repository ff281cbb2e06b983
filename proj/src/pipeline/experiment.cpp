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

#include "pipeline/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "json.hpp"

#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace munmt::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string arch_digest(const model::ModelConfig& mcfg) { return sha256_hex(mcfg.canonical()); }

// Keeps the audit lines of updates that precede the resume point.
void truncate_audit(const fs::path& path, std::uint64_t before_step) {
  if (!fs::exists(path)) return;
  std::string kept;
  for (const auto& e : read_audit(path)) {
    if (e.step < before_step) kept += e.line() + "\n";
  }
  write_file_atomic(path, kept);
}

double mean_score(const eval::Report& r) {
  if (r.rows.empty()) return 0;
  double s = 0;
  for (const auto& row : r.rows) s += row.bleu.score;
  return s / static_cast<double>(r.rows.size());
}

std::string format_report(const eval::Report& r) {
  std::string out;
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "  %-8s BLEU %6.2f\n", row.direction.c_str(), row.bleu.score);
    out += buf;
  }
  return out;
}

}  // namespace

Experiment::Experiment(ExperimentConfig cfg, fs::path out, Logger log)
    : cfg_(std::move(cfg)), out_(std::move(out)), log_(std::move(log)) {
  cfg_.validate();
  fs::create_directories(out_);
  write_snapshot();
}

void Experiment::log(const std::string& msg) const {
  if (log_) log_(msg);
}

void Experiment::write_snapshot() {
  write_file_atomic(out_ / "config.resolved.json", cfg_.to_json() + "\n");
  json run = json::object();
  const auto run_path = out_ / "run.json";
  if (fs::exists(run_path)) {
    try {
      run = json::parse(read_file(run_path));
    } catch (const json::exception&) {
      run = json::object();
    }
  }
  if (!run.contains("created_at")) run["created_at"] = utc_now();
  run["last_invocation_at"] = utc_now();
  write_file_atomic(run_path, run.dump(2) + "\n");
}

const corpus::Manifest& Experiment::manifest() {
  if (!manifest_) {
    const auto path = cfg_.manifest_path(out_);
    if (!fs::exists(path)) {
      fail(ErrorKind::Io, "manifest not found: " + path.string() +
                              (cfg_.manifest.empty() ? " (run synth-data first)" : ""));
    }
    manifest_ = corpus::Manifest::load(path);
  }
  return *manifest_;
}

const corpus::LanguageRegistry& Experiment::registry() {
  if (!registry_) registry_ = cfg_.registry();
  return *registry_;
}

const tok::Vocab& Experiment::vocab() {
  if (!vocab_) {
    const auto path = out_ / "vocab.txt";
    if (fs::exists(path)) {
      vocab_ = tok::Vocab::load(path);
    } else {
      train_vocab();
    }
  }
  return *vocab_;
}

model::ModelConfig Experiment::model_config() { return cfg_.model_config(vocab().size()); }

const Corpora& Experiment::real_corpora() {
  if (!real_) {
    const auto& m = manifest();
    for (const auto& id : cfg_.exclude_datasets) {
      bool known = false;
      for (const auto& d : m.datasets) known |= d.id == id;
      if (!known) fail(ErrorKind::Config, "exclude_datasets names unknown dataset '" + id + "'");
    }
    for (const auto& d : m.datasets) {
      if (d.synthetic) {
        fail(ErrorKind::Data, "manifest dataset '" + d.id +
                                  "' is synthetic; synthetic data is generated by synth-bt");
      }
    }
    real_ = std::make_unique<Corpora>(load_corpora(cfg_, m, registry(), vocab()));
    check_topology(cfg_, registry(), *real_);
  }
  return *real_;
}

fs::path Experiment::stage_dir(StageTag tag) const {
  switch (tag) {
    case StageTag::Stage1: return out_ / "stage1";
    case StageTag::Stage2a: return out_ / "stage2a";
    case StageTag::Stage2b: return out_ / "stage2b";
    case StageTag::Stage3: return out_ / "stage3";
    case StageTag::Init: break;
  }
  return out_ / "init";
}

void Experiment::synth_data() {
  if (!cfg_.manifest.empty()) {
    log("synth-data: manifest " + cfg_.manifest + " is configured, nothing to generate");
    return;
  }
  const auto dir = out_ / "data";
  log("synth-data: building toy benchmark in " + dir.string());
  build_benchmark(cfg_.benchmark, dir);
  manifest_.reset();
  real_.reset();
}

void Experiment::train_vocab() {
  log("train-vocab: " + std::to_string(cfg_.vocab.size) + " pieces");
  vocab_ = pipeline::train_vocab(cfg_, manifest());
  vocab_->save(out_ / "vocab.txt");
  real_.reset();

  json d;
  d["config_digest"] = cfg_.digest();
  d["vocab_digest"] = vocab_->digest();
  d["model_digest"] = arch_digest(model_config());
  json inputs = json::object();
  const auto& m = manifest();
  auto add = [&](const std::string& rel) {
    if (!rel.empty()) inputs[rel] = git_blob_hash(read_file(m.resolve(rel)));
  };
  for (const auto& ds : m.datasets) {
    add(ds.path);
    add(ds.src_path);
    add(ds.tgt_path);
  }
  for (const auto& t : m.testsets) {
    add(t.src_path);
    add(t.ref_path);
  }
  d["inputs"] = inputs;
  write_file_atomic(out_ / "digests.json", d.dump(2) + "\n");
}

Checkpoint Experiment::fresh_checkpoint() {
  const auto mcfg = model_config();
  Checkpoint c;
  c.params = model::init_params(mcfg, derive_seed(cfg_.seed, "init"));
  c.optim = tensor::make_optim_state(cfg_.stage1.optimizer, c.params);
  c.stage = StageTag::Init;
  c.vocab_digest = vocab().digest();
  c.config_digest = arch_digest(mcfg);
  return c;
}

Checkpoint Experiment::load_stage(StageTag tag) {
  const auto path = stage_dir(tag) / "checkpoint.bin";
  if (!fs::exists(path)) {
    fail(ErrorKind::Io, std::string("missing ") + stage_tag_name(tag) + " checkpoint: " +
                            path.string());
  }
  auto c = load_checkpoint(path);
  check_compatible(c, vocab().digest(), arch_digest(model_config()));
  if (c.stage != tag) {
    fail(ErrorKind::Data, path.string() + " holds a " + stage_tag_name(c.stage) + " checkpoint");
  }
  return c;
}

void Experiment::save_stage(const Checkpoint& ckpt, StageTag tag) {
  const auto dir = stage_dir(tag);
  fs::create_directories(dir);
  save_checkpoint(ckpt, dir / "checkpoint.bin");
}

eval::Report Experiment::report_stage(const Checkpoint& ckpt, const fs::path& dir) {
  const auto sets = load_testsets(manifest(), registry(), cfg_.eval.split, cfg_.eval_directions());
  auto report = eval::evaluate_model(ckpt.params, model_config(), vocab(), sets, cfg_.eval.mode);
  report.save(dir / "report");
  log(std::string(stage_tag_name(ckpt.stage)) + " " + cfg_.eval.split + " BLEU:\n" +
      format_report(report));
  return report;
}

Checkpoint Experiment::run_alg1_stage(Checkpoint start, StageTag tag,
                                      const std::vector<const corpus::Dataset*>& pool,
                                      std::uint64_t steps, double lr_peak, std::uint64_t warmup,
                                      const std::string& seed_name) {
  const auto dir = stage_dir(tag);
  fs::create_directories(dir);
  const auto ckpt_path = dir / "checkpoint.bin";
  const auto audit_path = dir / "audit.tsv";
  const auto mcfg = model_config();

  Checkpoint ckpt;
  bool resumed = false;
  if (fs::exists(ckpt_path)) {
    auto prev = load_checkpoint(ckpt_path);
    if (prev.stage == tag && prev.stage_step < steps &&
        prev.vocab_digest == start.vocab_digest && prev.config_digest == start.config_digest &&
        prev.global_step == start.global_step + prev.stage_step) {
      ckpt = std::move(prev);
      resumed = true;
    }
  }
  if (resumed) {
    log(std::string(stage_tag_name(tag)) + ": resuming at step " +
        std::to_string(ckpt.stage_step) + "/" + std::to_string(steps));
    truncate_audit(audit_path, ckpt.global_step);
  } else {
    ckpt = std::move(start);
    ckpt.stage = tag;
    ckpt.stage_step = 0;
    fs::remove(audit_path);
  }

  AuditLog audit(audit_path);
  if (steps > 0) {
    PretrainOptions opts;
    opts.steps = steps;
    opts.batch_size = cfg_.stage1.batch_size;
    opts.lr = {lr_peak, std::min(warmup, steps), steps + 1};
    opts.weight_decay = cfg_.stage1.weight_decay;
    opts.sampling = cfg_.sampling;
    opts.stage_seed = derive_seed(cfg_.seed, seed_name);
    opts.checkpoint_interval = cfg_.stage1.checkpoint_interval;
    opts.on_checkpoint = [&](const Checkpoint& c) { save_stage(c, tag); };
    opts.progress_every = std::max<std::uint64_t>(1, steps / 10);
    opts.on_progress = [&](const Checkpoint& c, double loss) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s: step %llu/%llu loss %.4f", stage_tag_name(tag),
                    static_cast<unsigned long long>(c.stage_step),
                    static_cast<unsigned long long>(steps), loss);
      log(buf);
    };
    run_pretraining(ckpt, mcfg, registry(), pool, opts, audit);
  }
  save_stage(ckpt, tag);
  report_stage(ckpt, dir);
  return ckpt;
}

Checkpoint Experiment::stage1() {
  return run_alg1_stage(fresh_checkpoint(), StageTag::Stage1, real_corpora().pool(false),
                        cfg_.stage1.steps, cfg_.stage1.lr_peak, cfg_.stage1.warmup_steps, "stage1");
}

corpus::Manifest Experiment::synth_bt(int round) {
  if (round != 1 && round != 2) fail(ErrorKind::Config, "synth-bt round must be 1 or 2");
  const auto ckpt = load_stage(round == 1 ? StageTag::Stage1 : StageTag::Stage2a);
  const auto dir = out_ / "synth" / ("round" + std::to_string(round));
  SyntheticStats stats;
  auto m = generate_synthetic(ckpt.params, model_config(), vocab(), registry(), real_corpora(),
                              cfg_, round, dir, &stats);
  log("synth-bt round " + std::to_string(round) + ": " + std::to_string(stats.pairs) +
      " pairs, " + std::to_string(stats.skipped) + " empty decodes skipped");
  return m;
}

Corpora Experiment::synthetic_corpora(int round) {
  const auto path = out_ / "synth" / ("round" + std::to_string(round)) / "manifest.json";
  if (!fs::exists(path)) {
    fail(ErrorKind::Io, "missing synthetic data for round " + std::to_string(round) + ": " +
                            path.string() + " (run synth-bt)");
  }
  return load_corpora(cfg_, corpus::Manifest::load(path), registry(), vocab());
}

Checkpoint Experiment::stage2(int round) {
  if (round != 1 && round != 2) fail(ErrorKind::Config, "stage2 round must be 1 or 2");
  const auto& s2 = cfg_.stage2;
  auto pool = real_corpora().pool(false);
  Corpora synth;
  if (s2.use_synthetic) {
    if (round == 1 || s2.round2_keeps_round1) synth.append(synthetic_corpora(1));
    if (round == 2) synth.append(synthetic_corpora(2));
    for (const auto* d : synth.pool(true)) pool.push_back(d);
  }
  if (round == 1) {
    return run_alg1_stage(load_stage(StageTag::Stage1), StageTag::Stage2a, pool, s2.steps,
                          s2.lr_peak, s2.warmup_steps, "stage2a");
  }
  return run_alg1_stage(load_stage(StageTag::Stage2a), StageTag::Stage2b, pool, s2.round2_steps,
                        s2.lr_peak, s2.warmup_steps, "stage2b");
}

Checkpoint Experiment::stage3() {
  const auto& s3 = cfg_.stage3;
  auto ckpt = load_stage(StageTag::Stage2b);
  ckpt.stage = StageTag::Stage3;
  ckpt.stage_step = 0;
  ckpt.optim = tensor::make_optim_state(s3.optimizer, ckpt.params);

  auto pool = real_corpora().pool(false);
  Corpora synth;
  if (s3.use_synthetic) {
    if (cfg_.stage2.round2_keeps_round1) synth.append(synthetic_corpora(1));
    synth.append(synthetic_corpora(2));
    for (const auto* d : synth.pool(true)) pool.push_back(d);
  }

  const auto dir = stage_dir(StageTag::Stage3);
  fs::create_directories(dir);
  fs::remove(dir / "audit.tsv");
  AuditLog audit(dir / "audit.tsv");

  const auto mcfg = model_config();
  const auto dev = load_testsets(manifest(), registry(), cfg_.eval.dev_split, cfg_.eval_directions());

  Stage3Options opts;
  opts.sweeps = s3.sweeps;
  opts.max_tokens = s3.max_tokens;
  opts.bucket_width = s3.bucket_width;
  opts.lr_peak = cfg_.stage2.lr_peak / s3.lr_divisor;
  opts.warmup_steps = s3.warmup_steps;
  opts.weight_decay = s3.weight_decay;
  opts.stage_seed = derive_seed(cfg_.seed, "stage3");
  opts.pivots = cfg_.pivots;
  opts.patience = s3.patience;
  opts.eval_every = s3.eval_every;
  opts.keep_best = s3.keep_best;
  if (!dev.empty()) {
    opts.dev_score = [&](const tensor::ParamStore<float>& params) {
      const double s = mean_score(eval::evaluate_model(params, mcfg, vocab(), dev, cfg_.eval.mode));
      char buf[64];
      std::snprintf(buf, sizeof buf, "stage3: dev BLEU %.2f", s);
      log(buf);
      return s;
    };
  }
  log("stage3: " + std::to_string(s3.sweeps) + " sweeps of " +
      std::to_string(stage3_updates_per_sweep(registry(), pool, cfg_.pivots)) + " updates");
  const auto result = run_stage3_sweeps(ckpt, mcfg, registry(), pool, opts, audit);

  json summary;
  summary["sweeps_run"] = result.sweeps_run;
  summary["skipped_items"] = result.skipped_items;
  summary["dev_scores"] = result.dev_scores;
  summary["best_index"] = result.best_index;
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

  save_stage(ckpt, StageTag::Stage3);
  report_stage(ckpt, dir);
  return ckpt;
}

eval::Report Experiment::evaluate(const std::optional<fs::path>& checkpoint) {
  fs::path path;
  if (checkpoint) {
    path = *checkpoint;
  } else {
    for (auto tag : {StageTag::Stage3, StageTag::Stage2b, StageTag::Stage2a, StageTag::Stage1}) {
      if (fs::exists(stage_dir(tag) / "checkpoint.bin")) {
        path = stage_dir(tag) / "checkpoint.bin";
        break;
      }
    }
    if (path.empty()) fail(ErrorKind::Io, "no checkpoint found under " + out_.string());
  }
  const auto ckpt = load_checkpoint(path);
  check_compatible(ckpt, vocab().digest(), arch_digest(model_config()));
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  auto report = report_stage(ckpt, dir);
  if (!checkpoint) report.save(out_ / "report");
  return report;
}

eval::Report Experiment::run_pipeline() {
  synth_data();
  train_vocab();
  stage1();
  if (cfg_.stage2.use_synthetic) synth_bt(1);
  stage2(1);
  if (cfg_.stage2.use_synthetic || cfg_.stage3.use_synthetic) synth_bt(2);
  stage2(2);
  stage3();
  return evaluate();
}

eval::Report Experiment::ablate(const std::string& arm) {
  if (arm != "no-synthetic" && arm != "single-aux" && arm != "bt-only") {
    fail(ErrorKind::Config, "unknown ablation arm '" + arm +
                                "' (expected no-synthetic, single-aux or bt-only)");
  }
  const auto dir = out_ / "ablate" / arm;
  fs::create_directories(dir);
  const auto copy_dir = [&](const fs::path& from, const fs::path& to) {
    if (!fs::exists(from)) fail(ErrorKind::Io, "missing " + from.string() + " (run it first)");
    fs::create_directories(to);
    fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  };

  ExperimentConfig sub_cfg = cfg_;
  sub_cfg.manifest = fs::absolute(cfg_.manifest_path(out_)).string();
  // Shares the parent's vocabulary.
  vocab();
  fs::copy_file(out_ / "vocab.txt", dir / "vocab.txt", fs::copy_options::overwrite_existing);
  if (fs::exists(out_ / "digests.json")) {
    fs::copy_file(out_ / "digests.json", dir / "digests.json", fs::copy_options::overwrite_existing);
  }

  if (arm == "no-synthetic") {
    sub_cfg.stage2.use_synthetic = false;
    sub_cfg.stage3.use_synthetic = false;
    copy_dir(stage_dir(StageTag::Stage1), dir / "stage1");
    Experiment sub(sub_cfg, dir, log_);
    sub.stage2(1);
    sub.stage2(2);
    sub.stage3();
    return sub.evaluate();
  }
  if (arm == "single-aux") {
    // Keep only the first pivot's real parallel data.
    std::string keep;
    for (const auto& [target, pivots] : cfg_.pivots) {
      if (!pivots.empty()) {
        keep = pivots.front();
        break;
      }
    }
    for (const auto& d : manifest().datasets) {
      if (d.kind != corpus::DatasetKind::Parallel) continue;
      const bool touches = d.src_lang == keep || d.tgt_lang == keep;
      if (!touches) sub_cfg.exclude_datasets.push_back(d.id);
    }
    for (auto& [target, pivots] : sub_cfg.pivots) {
      std::erase_if(pivots, [&](const std::string& p) { return p != keep; });
    }
    Experiment sub(sub_cfg, dir, log_);
    sub.stage1();
    if (sub_cfg.stage2.use_synthetic) sub.synth_bt(1);
    sub.stage2(1);
    if (sub_cfg.stage2.use_synthetic || sub_cfg.stage3.use_synthetic) sub.synth_bt(2);
    sub.stage2(2);
    sub.stage3();
    return sub.evaluate();
  }
  // bt-only: stage 3 without cross-translation, from this run's stage 2.
  for (auto& [target, pivots] : sub_cfg.pivots) pivots.clear();
  for (auto tag : {StageTag::Stage1, StageTag::Stage2a, StageTag::Stage2b}) {
    copy_dir(stage_dir(tag), dir / stage_dir(tag).filename());
  }
  if (fs::exists(out_ / "synth")) copy_dir(out_ / "synth", dir / "synth");
  Experiment sub(sub_cfg, dir, log_);
  sub.stage3();
  return sub.evaluate();
}

}  // namespace munmt::pipeline
