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

#include "munmt/munmt.h"

#include <algorithm>
#include <filesystem>
#include <map>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "eval/bleu.hpp"
#include "pipeline/experiment.hpp"

struct munmt_session {
  std::string config_path;
  std::string out = "out";
  std::optional<unsigned long long> seed;
  std::vector<std::string> overrides;
  bool quiet = false;
  munmt_log_fn log_fn = nullptr;
  void* log_user = nullptr;
  std::map<std::string, std::string> options;
  std::string last_error;
  std::string report_tsv;
};

namespace {

using munmt::ErrorKind;
using munmt::fail;
namespace fs = std::filesystem;

munmt_status to_status(ErrorKind k) { return static_cast<munmt_status>(static_cast<int>(k)); }

// Runs f, mapping exceptions to status codes and recording the message.
template <typename F>
munmt_status guarded(munmt_session* s, F&& f) {
  std::string msg;
  munmt_status st = MUNMT_OK;
  try {
    f();
  } catch (const munmt::Error& e) {
    st = to_status(e.kind());
    msg = e.what();
  } catch (const fs::filesystem_error& e) {
    st = MUNMT_ERR_IO;
    msg = e.what();
  } catch (const std::bad_alloc&) {
    st = MUNMT_ERR_INTERNAL;
    msg = "out of memory";
  } catch (const std::exception& e) {
    st = MUNMT_ERR_INTERNAL;
    msg = e.what();
  }
  if (s != nullptr) s->last_error = msg;
  return st;
}

int parse_round(const std::map<std::string, std::string>& opts) {
  auto it = opts.find("round");
  if (it == opts.end()) return 1;
  if (it->second == "1") return 1;
  if (it->second == "2") return 2;
  fail(ErrorKind::Config, "round must be 1 or 2, got '" + it->second + "'");
}

std::string option(const std::map<std::string, std::string>& opts, const std::string& name) {
  auto it = opts.find(name);
  return it == opts.end() ? std::string() : it->second;
}

void run_command(munmt_session& s, const std::string& command) {
  using munmt::pipeline::Experiment;
  using munmt::pipeline::ExperimentConfig;
  static const std::vector<std::string> kCommands{"synth-data", "train-vocab", "stage1",
                                                  "synth-bt",   "stage2",      "stage3",
                                                  "evaluate",   "pipeline",    "ablate"};
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
    fail(ErrorKind::Config, "unknown command '" + command + "'");
  }
  if (command == "ablate" && option(s.options, "arm").empty()) fail(ErrorKind::Config, "ablate needs an arm");
  auto overrides = s.overrides;
  if (s.seed) overrides.push_back("seed=" + std::to_string(*s.seed));
  ExperimentConfig cfg = s.config_path.empty()
                             ? ExperimentConfig::parse("", overrides, fs::current_path())
                             : ExperimentConfig::load(s.config_path, overrides);
  Experiment::Logger logger;
  if (!s.quiet && s.log_fn != nullptr) {
    logger = [fn = s.log_fn, user = s.log_user](const std::string& line) { fn(line.c_str(), user); };
  }
  Experiment e(std::move(cfg), s.out, logger);
  s.report_tsv.clear();
  if (command == "synth-data") {
    e.synth_data();
  } else if (command == "train-vocab") {
    e.train_vocab();
  } else if (command == "stage1") {
    e.stage1();
  } else if (command == "synth-bt") {
    e.synth_bt(parse_round(s.options));
  } else if (command == "stage2") {
    e.stage2(parse_round(s.options));
  } else if (command == "stage3") {
    e.stage3();
  } else if (command == "evaluate") {
    const auto ckpt = option(s.options, "checkpoint");
    s.report_tsv = e.evaluate(ckpt.empty() ? std::nullopt : std::optional<fs::path>(ckpt)).to_tsv();
  } else if (command == "pipeline") {
    s.report_tsv = e.run_pipeline().to_tsv();
  } else {
    s.report_tsv = e.ablate(option(s.options, "arm")).to_tsv();
  }
}

}  // namespace

extern "C" {

const char* munmt_version(void) { return "0.1.0"; }

munmt_status munmt_session_create(munmt_session** out) {
  if (out == nullptr) return MUNMT_ERR_INTERNAL;
  *out = new (std::nothrow) munmt_session();
  return *out == nullptr ? MUNMT_ERR_INTERNAL : MUNMT_OK;
}

void munmt_session_destroy(munmt_session* s) { delete s; }

const char* munmt_session_last_error(const munmt_session* s) {
  return s == nullptr ? "null session" : s->last_error.c_str();
}

munmt_status munmt_session_set_config(munmt_session* s, const char* path) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  s->config_path = path == nullptr ? "" : path;
  s->last_error.clear();
  return MUNMT_OK;
}

munmt_status munmt_session_set_out(munmt_session* s, const char* dir) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  return guarded(s, [&] {
    if (dir == nullptr || *dir == '\0') fail(ErrorKind::Config, "output directory must not be empty");
    s->out = dir;
  });
}

munmt_status munmt_session_set_seed(munmt_session* s, unsigned long long seed) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  s->seed = seed;
  s->last_error.clear();
  return MUNMT_OK;
}

munmt_status munmt_session_add_override(munmt_session* s, const char* key_value) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  return guarded(s, [&] {
    if (key_value == nullptr) fail(ErrorKind::Config, "override must not be null");
    s->overrides.emplace_back(key_value);
  });
}

munmt_status munmt_session_set_quiet(munmt_session* s, int quiet) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  s->quiet = quiet != 0;
  s->last_error.clear();
  return MUNMT_OK;
}

munmt_status munmt_session_set_logger(munmt_session* s, munmt_log_fn fn, void* user) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  s->log_fn = fn;
  s->log_user = user;
  s->last_error.clear();
  return MUNMT_OK;
}

munmt_status munmt_session_set_option(munmt_session* s, const char* name, const char* value) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  return guarded(s, [&] {
    if (name == nullptr || value == nullptr) fail(ErrorKind::Config, "option name and value are required");
    const std::string n(name);
    if (n != "round" && n != "checkpoint" && n != "arm") {
      fail(ErrorKind::Config, "unknown option '" + n + "'");
    }
    s->options[n] = value;
  });
}

munmt_status munmt_session_run(munmt_session* s, const char* command) {
  if (s == nullptr) return MUNMT_ERR_INTERNAL;
  return guarded(s, [&] { run_command(*s, command == nullptr ? "" : command); });
}

const char* munmt_session_report_tsv(const munmt_session* s) {
  return s == nullptr ? "" : s->report_tsv.c_str();
}

munmt_status munmt_bleu(const char* const* hyps, const char* const* refs, size_t n, int tokenize,
                        double* score) {
  return guarded(nullptr, [&] {
    if (score == nullptr || (n > 0 && (hyps == nullptr || refs == nullptr))) {
      fail(ErrorKind::Config, "munmt_bleu: null argument");
    }
    if (tokenize != 0 && tokenize != 1) fail(ErrorKind::Config, "munmt_bleu: tokenize must be 0 or 1");
    std::vector<std::string> h(hyps, hyps + n), r(refs, refs + n);
    *score = munmt::eval::bleu(h, r, tokenize == 1 ? munmt::eval::BleuMode::Detok13a
                                                   : munmt::eval::BleuMode::Pretokenized)
                 .score;
  });
}

}  // extern "C"
