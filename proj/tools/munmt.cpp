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

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "munmt/munmt.h"

namespace {

const char* kind_name(munmt_status st) {
  switch (st) {
    case MUNMT_OK: return "ok";
    case MUNMT_ERR_CONFIG: return "config";
    case MUNMT_ERR_DATA: return "data";
    case MUNMT_ERR_NUMERIC: return "numeric";
    case MUNMT_ERR_IO: return "io";
    case MUNMT_ERR_INTERNAL: break;
  }
  return "internal";
}

// One line on stderr: error kind=<kind> code=<n> message="<escaped>"
int report_error(munmt_status st, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') {
      escaped += '\\';
      escaped += c;
    } else if (c == '\n' || c == '\r') {
      escaped += ' ';
    } else {
      escaped += c;
    }
  }
  std::fprintf(stderr, "error kind=%s code=%d message=\"%s\"\n", kind_name(st), static_cast<int>(st),
               escaped.c_str());
  return static_cast<int>(st);
}

void log_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual unsupervised NMT with auxiliary parallel data, at toy scale"};
  app.set_version_flag("--version", std::string(munmt_version()));
  app.require_subcommand(1);

  std::string config, out = "out", checkpoint, arm;
  unsigned long long seed = 0;
  std::vector<std::string> overrides;
  bool quiet = false;
  int round = 1;

  app.add_option("--config", config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Top-level seed");
  app.add_option("--override", overrides, "Dotted KEY=VALUE, repeatable")->allow_extra_args(false);
  app.add_flag("--quiet", quiet, "Suppress progress logging");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth-data", "Generate the toy benchmark"},
      {"train-vocab", "Train the shared subword vocabulary"},
      {"stage1", "Multilingual pre-training (MASS + auxiliary CE)"},
      {"synth-bt", "Offline back-translation for synthetic data"},
      {"stage2", "Pre-training with synthetic data"},
      {"stage3", "Back-translation and cross-translation fine-tuning"},
      {"evaluate", "BLEU on the configured test split"},
      {"pipeline", "Run every stage in order"},
      {"ablate", "Run an ablation arm"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "synth-bt" || name == "stage2") {
      sub->add_option("--round", round, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
    }
    if (name == "evaluate") sub->add_option("--checkpoint", checkpoint, "Checkpoint to score");
    if (name == "ablate") {
      sub->add_option("--arm", arm, "Ablation arm")
          ->required()
          ->check(CLI::IsMember({"no-synthetic", "single-aux", "bt-only"}));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(MUNMT_ERR_CONFIG, e.what());
  }

  munmt_session* s = nullptr;
  if (munmt_session_create(&s) != MUNMT_OK) return report_error(MUNMT_ERR_INTERNAL, "cannot create session");
  const std::string command = app.get_subcommands().front()->get_name();

  munmt_status st = munmt_session_set_config(s, config.c_str());
  if (st == MUNMT_OK) st = munmt_session_set_out(s, out.c_str());
  if (st == MUNMT_OK && seed_opt->count() > 0) st = munmt_session_set_seed(s, seed);
  for (const auto& kv : overrides) {
    if (st == MUNMT_OK) st = munmt_session_add_override(s, kv.c_str());
  }
  if (st == MUNMT_OK) st = munmt_session_set_quiet(s, quiet ? 1 : 0);
  if (st == MUNMT_OK) st = munmt_session_set_logger(s, log_line, nullptr);
  if (st == MUNMT_OK && (command == "synth-bt" || command == "stage2")) {
    st = munmt_session_set_option(s, "round", std::to_string(round).c_str());
  }
  if (st == MUNMT_OK && command == "evaluate" && !checkpoint.empty()) {
    st = munmt_session_set_option(s, "checkpoint", checkpoint.c_str());
  }
  if (st == MUNMT_OK && command == "ablate") st = munmt_session_set_option(s, "arm", arm.c_str());
  if (st == MUNMT_OK) st = munmt_session_run(s, command.c_str());

  int code = 0;
  if (st != MUNMT_OK) {
    code = report_error(st, munmt_session_last_error(s));
  } else {
    std::cout << munmt_session_report_tsv(s);
  }
  munmt_session_destroy(s);
  return code;
}
