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

#include "pipeline/config.hpp"

#include <set>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "json.hpp"

namespace munmt::pipeline {

using nlohmann::json;

namespace {

// Objects whose keys are user-chosen rather than fixed by the schema.
bool open_map(const std::string& path) { return path == "pivots"; }

void merge(json& into, const json& from, const std::string& path,
           std::vector<std::string>& problems) {
  for (auto it = from.begin(); it != from.end(); ++it) {
    const auto key = path.empty() ? it.key() : path + "." + it.key();
    if (!open_map(path) && !into.contains(it.key())) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    auto& slot = into[it.key()];
    if (slot.is_object() && it.value().is_object() && !open_map(key)) {
      merge(slot, it.value(), key, problems);
    } else {
      slot = it.value();
    }
  }
}

void apply_override(json& root, const std::string& kv, std::vector<std::string>& problems) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    problems.push_back("override '" + kv + "' is not KEY=VALUE");
    return;
  }
  const auto key = kv.substr(0, eq);
  const auto text = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &root;
  std::string path;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const auto part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || (!open_map(path) && !node->contains(part))) {
      problems.push_back("unknown key '" + key + "'");
      return;
    }
    path = path.empty() ? part : path + "." + part;
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = value;
}

class Reader {
 public:
  Reader(const json& root, std::vector<std::string>& problems) : root_(root), problems_(problems) {}

  template <typename T>
  void get(const std::string& path, T& out) const {
    const json* node = &root_;
    std::size_t pos = 0;
    while (true) {
      const auto dot = path.find('.', pos);
      const auto part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (!node->contains(part)) return;
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      pos = dot + 1;
    }
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!node->is_boolean()) throw std::invalid_argument("type");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (node->is_number_integer() && node->get<long long>() < 0) {
          problems_.push_back("'" + path + "' must be non-negative");
          return;
        }
        if (!node->is_number_integer()) throw std::invalid_argument("type");
      }
      if constexpr (std::is_floating_point_v<T>) {
        if (!node->is_number()) throw std::invalid_argument("type");
      }
      out = node->get<T>();
    } catch (const std::exception&) {
      problems_.push_back("'" + path + "' has the wrong type");
    }
  }

  void optimizer(const std::string& path, tensor::OptimizerKind& out) const {
    std::string name = tensor::optimizer_kind_name(out);
    get(path, name);
    try {
      out = tensor::parse_optimizer_kind(name);
    } catch (const Error&) {
      problems_.push_back("'" + path + "' must be adam or adamax");
    }
  }

 private:
  const json& root_;
  std::vector<std::string>& problems_;
};

[[noreturn]] void report(const std::vector<std::string>& problems) {
  std::string msg = "invalid config (" + std::to_string(problems.size()) + " problem" +
                    (problems.size() == 1 ? "" : "s") + "): " + problems[0];
  for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
  fail(ErrorKind::Config, msg);
}

const char* mode_name(eval::BleuMode m) {
  return m == eval::BleuMode::Pretokenized ? "pretokenized" : "13a";
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json langs = json::array();
  for (const auto& l : languages) {
    langs.push_back({{"name", l.name}, {"english", l.english}, {"target", l.target}});
  }
  json j;
  j["seed"] = seed;
  j["languages"] = langs;
  j["pivots"] = json::object();
  for (const auto& [k, v] : pivots) j["pivots"][k] = v;
  j["manifest"] = manifest;
  j["exclude_datasets"] = exclude_datasets;
  j["benchmark"] = json::parse(benchmark.to_json());
  j["vocab"] = {{"size", vocab.size},
                {"max_lines_per_corpus", vocab.max_lines_per_corpus},
                {"max_pieces", vocab.max_pieces}};
  j["model"] = {{"layers", model.layers},
                {"hidden", model.hidden},
                {"ffn", model.ffn},
                {"heads", model.heads},
                {"max_positions", model.max_positions}};
  j["sampling"] = {{"p_parallel", sampling.p_parallel}, {"temperature", sampling.temperature}};
  j["stage1"] = {{"steps", stage1.steps},
                 {"batch_size", stage1.batch_size},
                 {"optimizer", tensor::optimizer_kind_name(stage1.optimizer)},
                 {"lr_peak", stage1.lr_peak},
                 {"warmup_steps", stage1.warmup_steps},
                 {"weight_decay", stage1.weight_decay},
                 {"checkpoint_interval", stage1.checkpoint_interval}};
  j["stage2"] = {{"steps", stage2.steps},
                 {"round2_steps", stage2.round2_steps},
                 {"lr_peak", stage2.lr_peak},
                 {"warmup_steps", stage2.warmup_steps},
                 {"use_synthetic", stage2.use_synthetic},
                 {"round2_keeps_round1", stage2.round2_keeps_round1}};
  j["stage3"] = {{"sweeps", stage3.sweeps},
                 {"max_tokens", stage3.max_tokens},
                 {"bucket_width", stage3.bucket_width},
                 {"optimizer", tensor::optimizer_kind_name(stage3.optimizer)},
                 {"lr_divisor", stage3.lr_divisor},
                 {"warmup_steps", stage3.warmup_steps},
                 {"weight_decay", stage3.weight_decay},
                 {"use_synthetic", stage3.use_synthetic},
                 {"keep_best", stage3.keep_best},
                 {"patience", stage3.patience},
                 {"eval_every", stage3.eval_every}};
  j["synth"] = {{"round1_mono_fraction", synth.round1_mono_fraction},
                {"round2_multiplier", synth.round2_multiplier},
                {"english_lines_per_target", synth.english_lines_per_target},
                {"decode_batch", synth.decode_batch}};
  j["eval"] = {{"directions", eval.directions},
               {"mode", mode_name(eval.mode)},
               {"split", eval.split},
               {"dev_split", eval.dev_split}};
  return j.dump(2) + "\n";
}

std::string ExperimentConfig::digest() const { return sha256_hex(to_json()); }

ExperimentConfig ExperimentConfig::parse(const std::string& text,
                                         const std::vector<std::string>& overrides,
                                         const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  json root = json::parse(ExperimentConfig{}.to_json());
  json user;
  try {
    user = text.empty() ? json::object() : json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
  merge(root, user, "", problems);
  for (const auto& kv : overrides) apply_override(root, kv, problems);

  ExperimentConfig c;
  c.base_dir = base_dir;
  Reader r(root, problems);
  r.get("seed", c.seed);
  if (root["languages"].is_array()) {
    c.languages.clear();
    for (std::size_t i = 0; i < root["languages"].size(); ++i) {
      const auto& e = root["languages"][i];
      LanguageEntry l;
      const auto where = "languages[" + std::to_string(i) + "]";
      if (!e.is_object() || !e.contains("name") || !e["name"].is_string()) {
        problems.push_back(where + " needs a string 'name'");
        continue;
      }
      for (auto it = e.begin(); it != e.end(); ++it) {
        if (it.key() != "name" && it.key() != "english" && it.key() != "target") {
          problems.push_back("unknown key '" + where + "." + it.key() + "'");
        }
      }
      l.name = e["name"].get<std::string>();
      l.english = e.value("english", false);
      l.target = e.value("target", false);
      c.languages.push_back(l);
    }
  } else {
    problems.push_back("'languages' must be an array");
  }
  if (root["pivots"].is_object()) {
    c.pivots.clear();
    for (auto it = root["pivots"].begin(); it != root["pivots"].end(); ++it) {
      try {
        c.pivots[it.key()] = it.value().get<std::vector<std::string>>();
      } catch (const json::exception&) {
        problems.push_back("'pivots." + it.key() + "' must be a list of language names");
      }
    }
  } else {
    problems.push_back("'pivots' must be an object");
  }
  r.get("manifest", c.manifest);
  r.get("exclude_datasets", c.exclude_datasets);
  try {
    c.benchmark = synth::BenchmarkConfig::from_json(root["benchmark"].dump());
  } catch (const Error& e) {
    problems.push_back(std::string("benchmark: ") + e.what());
  }
  r.get("vocab.size", c.vocab.size);
  r.get("vocab.max_lines_per_corpus", c.vocab.max_lines_per_corpus);
  r.get("vocab.max_pieces", c.vocab.max_pieces);
  r.get("model.layers", c.model.layers);
  r.get("model.hidden", c.model.hidden);
  r.get("model.ffn", c.model.ffn);
  r.get("model.heads", c.model.heads);
  r.get("model.max_positions", c.model.max_positions);
  r.get("sampling.p_parallel", c.sampling.p_parallel);
  r.get("sampling.temperature", c.sampling.temperature);
  r.get("stage1.steps", c.stage1.steps);
  r.get("stage1.batch_size", c.stage1.batch_size);
  r.optimizer("stage1.optimizer", c.stage1.optimizer);
  r.get("stage1.lr_peak", c.stage1.lr_peak);
  r.get("stage1.warmup_steps", c.stage1.warmup_steps);
  r.get("stage1.weight_decay", c.stage1.weight_decay);
  r.get("stage1.checkpoint_interval", c.stage1.checkpoint_interval);
  r.get("stage2.steps", c.stage2.steps);
  r.get("stage2.round2_steps", c.stage2.round2_steps);
  r.get("stage2.lr_peak", c.stage2.lr_peak);
  r.get("stage2.warmup_steps", c.stage2.warmup_steps);
  r.get("stage2.use_synthetic", c.stage2.use_synthetic);
  r.get("stage2.round2_keeps_round1", c.stage2.round2_keeps_round1);
  r.get("stage3.sweeps", c.stage3.sweeps);
  r.get("stage3.max_tokens", c.stage3.max_tokens);
  r.get("stage3.bucket_width", c.stage3.bucket_width);
  r.optimizer("stage3.optimizer", c.stage3.optimizer);
  r.get("stage3.lr_divisor", c.stage3.lr_divisor);
  r.get("stage3.warmup_steps", c.stage3.warmup_steps);
  r.get("stage3.weight_decay", c.stage3.weight_decay);
  r.get("stage3.use_synthetic", c.stage3.use_synthetic);
  r.get("stage3.keep_best", c.stage3.keep_best);
  r.get("stage3.patience", c.stage3.patience);
  r.get("stage3.eval_every", c.stage3.eval_every);
  r.get("synth.round1_mono_fraction", c.synth.round1_mono_fraction);
  r.get("synth.round2_multiplier", c.synth.round2_multiplier);
  r.get("synth.english_lines_per_target", c.synth.english_lines_per_target);
  r.get("synth.decode_batch", c.synth.decode_batch);
  r.get("eval.directions", c.eval.directions);
  std::string mode = mode_name(c.eval.mode);
  r.get("eval.mode", mode);
  if (mode == "pretokenized") {
    c.eval.mode = eval::BleuMode::Pretokenized;
  } else if (mode == "13a") {
    c.eval.mode = eval::BleuMode::Detok13a;
  } else {
    problems.push_back("'eval.mode' must be 13a or pretokenized");
  }
  r.get("eval.split", c.eval.split);
  r.get("eval.dev_split", c.eval.dev_split);

  for (auto& p : c.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) report(problems);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("cannot read config: ") + e.what());
  }
  return parse(text, overrides, path.parent_path());
}

void ExperimentConfig::validate() const {
  const auto found = problems();
  if (!found.empty()) report(found);
}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> problems;
  std::set<std::string> names;
  std::size_t english = 0, targets = 0;
  for (const auto& l : languages) {
    if (l.name.empty()) problems.push_back("language with an empty name");
    if (!names.insert(l.name).second) problems.push_back("duplicate language '" + l.name + "'");
    english += l.english;
    targets += l.target;
    if (l.english && l.target) problems.push_back("'" + l.name + "' cannot be English and a target");
  }
  if (english != 1) problems.push_back("exactly one language must be english");
  if (targets == 0) problems.push_back("at least one target language is required");
  auto find = [&](const std::string& n) -> const LanguageEntry* {
    for (const auto& l : languages) {
      if (l.name == n) return &l;
    }
    return nullptr;
  };
  for (const auto& [t, ps] : pivots) {
    const auto* tl = find(t);
    if (!tl || !tl->target) problems.push_back("pivot key '" + t + "' is not a target language");
    for (const auto& p : ps) {
      const auto* pl = find(p);
      if (!pl) {
        problems.push_back("pivot '" + p + "' of " + t + " is not a registered language");
      } else if (pl->english || pl->target) {
        problems.push_back("pivot '" + p + "' of " + t + " must be an auxiliary language");
      }
    }
  }
  if (vocab.size < 8) problems.push_back("vocab.size must be >= 8");
  if (vocab.max_pieces < 1) problems.push_back("vocab.max_pieces must be >= 1");
  try {
    model_config(vocab.size).validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    sampling.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  auto check_schedule = [&](const std::string& name, double peak, std::uint64_t warmup,
                            std::uint64_t steps) {
    if (!(peak > 0)) problems.push_back(name + ".lr_peak must be > 0");
    if (warmup == 0) problems.push_back(name + ".warmup_steps must be >= 1");
    if (steps > 0 && warmup > steps) {
      problems.push_back(name + ".warmup_steps must not exceed its step count");
    }
  };
  if (stage1.batch_size < 1) problems.push_back("stage1.batch_size must be >= 1");
  if (stage1.weight_decay < 0) problems.push_back("stage1.weight_decay must be >= 0");
  check_schedule("stage1", stage1.lr_peak, stage1.warmup_steps, stage1.steps);
  // Round 2 reuses the schedule; its warmup is clamped to its own length.
  check_schedule("stage2", stage2.lr_peak, stage2.warmup_steps, stage2.steps);
  if (stage3.max_tokens < 1) problems.push_back("stage3.max_tokens must be >= 1");
  if (stage3.bucket_width < 1) problems.push_back("stage3.bucket_width must be >= 1");
  if (!(stage3.lr_divisor > 0)) problems.push_back("stage3.lr_divisor must be > 0");
  if (stage3.weight_decay < 0) problems.push_back("stage3.weight_decay must be >= 0");
  if (stage3.warmup_steps < 1) problems.push_back("stage3.warmup_steps must be >= 1");
  if (stage3.eval_every < 1) problems.push_back("stage3.eval_every must be >= 1");
  if (!(synth.round1_mono_fraction > 0 && synth.round1_mono_fraction <= 1)) {
    problems.push_back("synth.round1_mono_fraction must be in (0, 1]");
  }
  if (synth.round2_multiplier < 1) problems.push_back("synth.round2_multiplier must be >= 1");
  if (synth.decode_batch < 1) problems.push_back("synth.decode_batch must be >= 1");
  for (const auto& d : eval.directions) {
    const auto dash = d.find('-');
    if (dash == std::string::npos || !find(d.substr(0, dash)) || !find(d.substr(dash + 1))) {
      problems.push_back("eval direction '" + d + "' must be SRC-TGT over registered languages");
    }
  }
  if (eval.split.empty() || eval.dev_split.empty()) problems.push_back("eval splits must be named");
  return problems;
}

corpus::LanguageRegistry ExperimentConfig::registry() const {
  std::vector<corpus::Language> langs;
  for (const auto& l : languages) langs.push_back({l.name, l.english, l.target});
  return corpus::LanguageRegistry(std::move(langs));
}

model::ModelConfig ExperimentConfig::model_config(std::size_t vocab_size) const {
  model::ModelConfig m;
  m.layers = model.layers;
  m.hidden = model.hidden;
  m.ffn = model.ffn;
  m.heads = model.heads;
  m.max_positions = model.max_positions;
  m.vocab_size = vocab_size;
  m.num_languages = languages.size();
  return m;
}

std::vector<std::string> ExperimentConfig::eval_directions() const {
  if (!eval.directions.empty()) return eval.directions;
  std::string en;
  for (const auto& l : languages) {
    if (l.english) en = l.name;
  }
  std::vector<std::string> out;
  for (const auto& l : languages) {
    if (!l.target) continue;
    out.push_back(l.name + "-" + en);
    out.push_back(en + "-" + l.name);
  }
  return out;
}

std::filesystem::path ExperimentConfig::manifest_path(const std::filesystem::path& out) const {
  if (manifest.empty()) return out / "data" / "manifest.json";
  const std::filesystem::path p(manifest);
  return p.is_absolute() ? p : base_dir / p;
}

}  // namespace munmt::pipeline
