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

#include "pipeline/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "objectives/objectives.hpp"
#include "tensor/ops.hpp"

namespace munmt::pipeline {

using tensor::Graph;
using tensor::Var;

std::string AuditEntry::line() const {
  char loss_text[48];
  if (skipped) {
    std::snprintf(loss_text, sizeof loss_text, "skipped");
  } else {
    std::snprintf(loss_text, sizeof loss_text, "%.9g", loss);
  }
  return std::to_string(step) + "\t" + dataset + "\t" + objective + "\t" + src_lang + "\t" +
         tgt_lang + "\t" + loss_text;
}

AuditLog::AuditLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) fail(ErrorKind::Io, "cannot open audit log " + path.string());
}

void AuditLog::record(AuditEntry e) {
  if (out_.is_open()) {
    out_ << e.line() << '\n';
    out_.flush();
  }
  entries_.push_back(std::move(e));
}

std::vector<AuditEntry> read_audit(const std::filesystem::path& path) {
  std::vector<AuditEntry> out;
  for (const auto& line : corpus::read_lines(path)) {
    std::istringstream in(line);
    AuditEntry e;
    std::string loss;
    if (!(in >> e.step >> e.dataset >> e.objective >> e.src_lang >> e.tgt_lang >> loss)) {
      fail(ErrorKind::Data, "malformed audit line: " + line);
    }
    if (loss == "skipped") {
      e.skipped = true;
      e.loss = std::numeric_limits<double>::quiet_NaN();
    } else {
      e.loss = std::stod(loss);
    }
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

void check_finite(double loss, const AuditEntry& what) {
  if (!std::isfinite(loss)) {
    fail(ErrorKind::Numeric, "non-finite loss at step " + std::to_string(what.step) + " (dataset " +
                                 what.dataset + ", objective " + what.objective + ", " +
                                 what.src_lang + "->" + what.tgt_lang + ")");
  }
}

// Backward, optimizer update and bookkeeping for one scalar loss.
void apply_update(Checkpoint& ckpt, Graph<float>& g, Var loss, double lr, double weight_decay) {
  auto grads = g.backward(loss, ckpt.params);
  tensor::optimizer_step(ckpt.params, grads, ckpt.optim, lr, weight_decay);
  ++ckpt.global_step;
  ++ckpt.stage_step;
}

const std::string& lang_name(const corpus::LanguageRegistry& r, int id) { return r.at(id).name; }

}  // namespace

void run_pretraining(Checkpoint& ckpt, const model::ModelConfig& mcfg,
                     const corpus::LanguageRegistry& registry,
                     const std::vector<const corpus::Dataset*>& pool, const PretrainOptions& opts,
                     AuditLog& audit) {
  if (ckpt.stage_step >= opts.steps) return;
  if (pool.empty()) fail(ErrorKind::Data, "training pool is empty");
  opts.lr.validate();
  opts.sampling.validate();
  if (ckpt.optim.first.size() != ckpt.params.size()) {
    fail(ErrorKind::Internal, "optimizer state does not match the parameters");
  }
  double window = 0;
  std::uint64_t in_window = 0;
  while (ckpt.stage_step < opts.steps) {
    Rng rng(derive_seed(opts.stage_seed, ckpt.global_step));
    const auto& ds = *pool[corpus::choose_dataset(pool, opts.sampling, rng)];
    const auto batch = corpus::draw_batch(ds, opts.batch_size, rng);

    Graph<float> g;
    model::Forward<float> f(g, ckpt.params, mcfg);
    AuditEntry e;
    e.step = ckpt.global_step;
    e.dataset = ds.id;
    Var loss;
    if (ds.is_parallel()) {
      e.objective = "ce_bidir";
      e.src_lang = lang_name(registry, ds.src_lang);
      e.tgt_lang = lang_name(registry, ds.tgt_lang);
      const Var fwd = obj::cross_entropy_loss(f, batch.first, batch.second, ds.tgt_lang);
      const Var bwd = obj::cross_entropy_loss(f, batch.second, batch.first, ds.src_lang);
      loss = tensor::add(g, fwd, bwd);
    } else {
      e.objective = "mass";
      e.src_lang = e.tgt_lang = lang_name(registry, ds.lang);
      loss = obj::mass_loss(f, batch.first, rng);
    }
    e.loss = g.value(loss).item();
    check_finite(e.loss, e);
    const double lr = tensor::lr_at(opts.lr, ckpt.stage_step + 1);
    apply_update(ckpt, g, loss, lr, opts.weight_decay);
    window += e.loss;
    ++in_window;
    audit.record(std::move(e));
    if (opts.progress_every > 0 && opts.on_progress && ckpt.stage_step % opts.progress_every == 0) {
      opts.on_progress(ckpt, window / static_cast<double>(in_window));
      window = 0;
      in_window = 0;
    }
    if (opts.checkpoint_interval > 0 && opts.on_checkpoint &&
        ckpt.stage_step % opts.checkpoint_interval == 0 && ckpt.stage_step < opts.steps) {
      opts.on_checkpoint(ckpt);
    }
  }
}

namespace {

// Third languages for cross-translation on a real parallel dataset: targets
// that list either side as a pivot.
std::vector<int> ct_languages(const corpus::LanguageRegistry& registry, const corpus::Dataset& d,
                              const std::map<std::string, std::vector<std::string>>& pivots) {
  std::vector<int> out;
  for (int t : registry.targets()) {
    if (t == d.src_lang || t == d.tgt_lang) continue;
    auto it = pivots.find(registry.at(t).name);
    if (it == pivots.end()) continue;
    for (const auto& p : it->second) {
      const int pid = registry.id(p);
      if (pid == d.src_lang || pid == d.tgt_lang) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}

// Intermediate languages for back-translation of a monolingual dataset.
std::vector<int> bt_languages(const corpus::LanguageRegistry& registry, const corpus::Dataset& d,
                              const std::map<std::string, std::vector<std::string>>& pivots) {
  const int en = registry.english();
  std::vector<int> out;
  if (d.lang == en) {
    for (int t : registry.targets()) {
      if (t != en) out.push_back(t);
    }
    return out;
  }
  if (!registry.at(d.lang).is_target) return out;  // auxiliary mono is not swept
  auto it = pivots.find(registry.at(d.lang).name);
  if (it != pivots.end()) {
    for (const auto& p : it->second) out.push_back(registry.id(p));
  }
  out.push_back(en);
  return out;
}

// Shuffled pass over a dataset's token-bucketed batches, reshuffled every
// epoch.
class BatchCursor {
 public:
  BatchCursor(const corpus::Dataset& d, const Stage3Options& opts)
      : d_(&d), seed_(derive_seed(opts.stage_seed, d.id)),
        batches_(corpus::bucket_batches(d, opts.max_tokens, opts.bucket_width)) {
    reshuffle();
  }

  corpus::ExampleBatch next() {
    if (pos_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    return corpus::make_batch(*d_, batches_[order_[pos_++]]);
  }

 private:
  void reshuffle() {
    order_.resize(batches_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng rng(derive_seed(seed_, epoch_));
    rng.shuffle(order_.begin(), order_.end());
    pos_ = 0;
  }

  const corpus::Dataset* d_;
  std::uint64_t seed_;
  std::vector<std::vector<std::size_t>> batches_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace

std::uint64_t stage3_updates_per_sweep(const corpus::LanguageRegistry& registry,
                                       const std::vector<const corpus::Dataset*>& pool,
                                       const std::map<std::string, std::vector<std::string>>& pivots) {
  std::uint64_t n = 0;
  for (const auto* d : pool) {
    if (!d->is_parallel()) {
      n += bt_languages(registry, *d, pivots).size();
    } else if (d->synthetic) {
      n += 1;
    } else {
      n += ct_languages(registry, *d, pivots).size();
    }
  }
  return n;
}

Stage3Result run_stage3_sweeps(Checkpoint& ckpt, const model::ModelConfig& mcfg,
                               const corpus::LanguageRegistry& registry,
                               const std::vector<const corpus::Dataset*>& pool,
                               const Stage3Options& opts, AuditLog& audit) {
  Stage3Result result;
  if (opts.sweeps == 0) return result;
  const auto per_sweep = stage3_updates_per_sweep(registry, pool, opts.pivots);
  if (per_sweep == 0) fail(ErrorKind::Data, "stage 3 has nothing to train on");
  tensor::LrSchedule lr;
  lr.peak = opts.lr_peak;
  lr.total_steps = opts.sweeps * per_sweep + 1;
  // Short budgets shrink the warmup instead of failing.
  lr.warmup_steps = std::max<std::uint64_t>(1, std::min(opts.warmup_steps, lr.total_steps - 1));
  lr.validate();

  std::vector<BatchCursor> cursors;
  cursors.reserve(pool.size());
  for (const auto* d : pool) cursors.emplace_back(*d, opts);

  Checkpoint best;
  double best_score = -1;
  std::uint64_t stale = 0;
  auto evaluate = [&]() {
    if (!opts.dev_score) return false;
    const double s = opts.dev_score(ckpt.params);
    result.dev_scores.push_back(s);
    if (s > best_score) {
      best_score = s;
      result.best_index = result.dev_scores.size() - 1;
      if (opts.keep_best) best = ckpt;
      stale = 0;
    } else {
      ++stale;
    }
    return opts.patience > 0 && stale >= opts.patience;
  };
  evaluate();

  for (std::uint64_t sweep = 0; sweep < opts.sweeps; ++sweep) {
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const auto& d = *pool[k];
      const auto batch = cursors[k].next();
      auto update = [&](const std::string& objective, int src, int tgt, auto&& build) {
        AuditEntry e;
        e.step = ckpt.global_step;
        e.dataset = d.id;
        e.objective = objective;
        e.src_lang = lang_name(registry, src);
        e.tgt_lang = lang_name(registry, tgt);
        Graph<float> g;
        model::Forward<float> f(g, ckpt.params, mcfg);
        std::optional<Var> loss = build(f);
        if (!loss) {
          e.skipped = true;
          e.loss = std::numeric_limits<double>::quiet_NaN();
          audit.record(std::move(e));
          return;
        }
        e.loss = g.value(*loss).item();
        check_finite(e.loss, e);
        apply_update(ckpt, g, *loss, tensor::lr_at(lr, ckpt.stage_step + 1), opts.weight_decay);
        audit.record(std::move(e));
      };

      if (!d.is_parallel()) {
        for (int l : bt_languages(registry, d, opts.pivots)) {
          update("bt", l, d.lang, [&](model::Forward<float>& f) -> std::optional<Var> {
            auto r = obj::back_translation_loss(f, batch.first, l);
            result.skipped_items += r.skipped;
            return r.loss;
          });
        }
      } else if (d.synthetic) {
        update("ce", d.src_lang, d.tgt_lang, [&](model::Forward<float>& f) -> std::optional<Var> {
          return obj::cross_entropy_loss(f, batch.first, batch.second, d.tgt_lang);
        });
      } else {
        for (int l : ct_languages(registry, d, opts.pivots)) {
          update("ct", l, d.tgt_lang, [&](model::Forward<float>& f) -> std::optional<Var> {
            auto r = obj::cross_translation_loss(f, batch.first, batch.second, l);
            result.skipped_items += r.skipped;
            return r.loss;
          });
        }
      }
    }
    ++result.sweeps_run;
    if ((sweep + 1) % opts.eval_every == 0 && evaluate()) break;
  }
  if (opts.keep_best && !result.dev_scores.empty() && result.best_index + 1 != result.dev_scores.size()) {
    // Step counters keep counting the updates that were run.
    const auto global = ckpt.global_step;
    const auto stage = ckpt.stage_step;
    ckpt = std::move(best);
    ckpt.global_step = global;
    ckpt.stage_step = stage;
  }
  return result;
}

}  // namespace munmt::pipeline
