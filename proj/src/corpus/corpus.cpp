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

#include "corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "json.hpp"

namespace munmt::corpus {

using nlohmann::json;

LanguageRegistry::LanguageRegistry(std::vector<Language> langs) : langs_(std::move(langs)) {
  std::set<std::string> seen;
  int english = 0;
  for (const auto& l : langs_) {
    if (l.name.empty()) fail(ErrorKind::Config, "language with empty name");
    if (!seen.insert(l.name).second) fail(ErrorKind::Config, "duplicate language " + l.name);
    if (l.is_english) ++english;
    if (l.is_english && l.is_target) {
      fail(ErrorKind::Config, "language " + l.name + " cannot be both English and a target");
    }
  }
  if (english != 1) {
    fail(ErrorKind::Config, "exactly one language must be marked english (found " +
                                std::to_string(english) + ")");
  }
}

const Language& LanguageRegistry::at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= langs_.size()) {
    fail(ErrorKind::Data, "language id " + std::to_string(id) + " out of range");
  }
  return langs_[static_cast<std::size_t>(id)];
}

std::optional<int> LanguageRegistry::find(const std::string& name) const {
  for (std::size_t i = 0; i < langs_.size(); ++i) {
    if (langs_[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

int LanguageRegistry::id(const std::string& name) const {
  auto found = find(name);
  if (!found) fail(ErrorKind::Data, "unknown language '" + name + "'");
  return *found;
}

int LanguageRegistry::english() const {
  for (std::size_t i = 0; i < langs_.size(); ++i) {
    if (langs_[i].is_english) return static_cast<int>(i);
  }
  fail(ErrorKind::Config, "no english language registered");
}

std::vector<int> LanguageRegistry::targets() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < langs_.size(); ++i) {
    if (langs_[i].is_target) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::size_t Dataset::item_length(std::size_t i) const {
  if (kind == DatasetKind::Mono) return mono.at(i).size();
  const auto& p = pairs.at(i);
  return std::max(p.first.size(), p.second.size());
}

void Dataset::validate() const {
  if (kind == DatasetKind::Mono) {
    if (synthetic) fail(ErrorKind::Data, "dataset " + id + ": synthetic data must be parallel");
    if (!pairs.empty()) fail(ErrorKind::Data, "dataset " + id + ": mono dataset holds pairs");
    for (const auto& s : mono) {
      if (s.lang != lang) fail(ErrorKind::Data, "dataset " + id + ": item language mismatch");
      if (s.ids.empty()) fail(ErrorKind::Data, "dataset " + id + ": empty sequence");
    }
  } else {
    if (src_lang == tgt_lang) fail(ErrorKind::Data, "dataset " + id + ": same language on both sides");
    if (!mono.empty()) fail(ErrorKind::Data, "dataset " + id + ": parallel dataset holds mono items");
    for (const auto& [a, b] : pairs) {
      if (a.lang != src_lang || b.lang != tgt_lang) {
        fail(ErrorKind::Data, "dataset " + id + ": item language mismatch");
      }
      if (a.ids.empty() || b.ids.empty()) fail(ErrorKind::Data, "dataset " + id + ": empty sequence");
    }
  }
}

void SamplingPolicy::validate() const {
  std::vector<std::string> problems;
  if (!(p_parallel >= 0.0 && p_parallel <= 1.0)) problems.push_back("p_parallel must be in [0, 1]");
  if (!(temperature > 0.0)) problems.push_back("temperature must be > 0");
  if (!problems.empty()) {
    std::string msg = "invalid sampling policy: " + problems[0];
    for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
    fail(ErrorKind::Config, msg);
  }
}

std::vector<double> temperature_weights(std::span<const std::size_t> sizes, double temperature) {
  if (sizes.empty()) fail(ErrorKind::Data, "temperature_weights: no datasets");
  if (!(temperature > 0.0)) fail(ErrorKind::Config, "temperature must be > 0");
  double total = 0;
  for (auto n : sizes) {
    if (n == 0) fail(ErrorKind::Data, "temperature_weights: empty dataset");
    total += static_cast<double>(n);
  }
  std::vector<double> w;
  w.reserve(sizes.size());
  double z = 0;
  for (auto n : sizes) {
    w.push_back(std::pow(static_cast<double>(n) / total, 1.0 / temperature));
    z += w.back();
  }
  for (auto& v : w) v /= z;
  return w;
}

std::size_t choose_dataset(const std::vector<const Dataset*>& pool, const SamplingPolicy& policy,
                           Rng& rng) {
  std::vector<std::size_t> mono, parallel;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i]->is_parallel()) {
      parallel.push_back(i);
      sizes.push_back(pool[i]->size());
    } else {
      mono.push_back(i);
    }
  }
  const bool want_parallel = rng.bernoulli(policy.p_parallel);
  if (want_parallel) {
    if (parallel.empty()) fail(ErrorKind::Data, "sampler chose parallel but the pool has none");
    const auto w = temperature_weights(sizes, policy.temperature);
    return parallel[rng.categorical(w)];
  }
  if (mono.empty()) fail(ErrorKind::Data, "sampler chose monolingual but the pool has none");
  return mono[rng.below(mono.size())];
}

std::size_t ExampleBatch::width() const {
  std::size_t w = 0;
  for (const auto* s : first) w = std::max(w, s->size());
  for (const auto* s : second) w = std::max(w, s->size());
  return w;
}

ExampleBatch make_batch(const Dataset& dataset, const std::vector<std::size_t>& items) {
  ExampleBatch b;
  b.items = items;
  for (auto i : items) {
    if (i >= dataset.size()) fail(ErrorKind::Internal, "batch item out of range");
    if (dataset.is_parallel()) {
      b.first.push_back(&dataset.pairs[i].first);
      b.second.push_back(&dataset.pairs[i].second);
    } else {
      b.first.push_back(&dataset.mono[i]);
    }
  }
  return b;
}

ExampleBatch draw_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng) {
  if (dataset.size() == 0) fail(ErrorKind::Data, "draw_batch: dataset " + dataset.id + " is empty");
  std::vector<std::size_t> items(batch_size);
  for (auto& i : items) i = rng.below(dataset.size());
  return make_batch(dataset, items);
}

std::vector<std::vector<std::size_t>> bucket_batches(const Dataset& dataset,
                                                     std::size_t max_tokens,
                                                     std::size_t bucket_width) {
  if (bucket_width < 1) fail(ErrorKind::Config, "bucket width must be >= 1");
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto len = dataset.item_length(i);
    if (len > max_tokens) {
      fail(ErrorKind::Data, "dataset " + dataset.id + ": item " + std::to_string(i) + " has " +
                                std::to_string(len) + " pieces, over the " +
                                std::to_string(max_tokens) + "-token budget");
    }
    buckets[len == 0 ? 0 : (len - 1) / bucket_width].push_back(i);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto& [key, items] : buckets) {
    std::vector<std::size_t> cur;
    std::size_t widest = 0;
    for (auto i : items) {
      const auto len = std::max<std::size_t>(1, dataset.item_length(i));
      const auto w = std::max(widest, len);
      if (!cur.empty() && (cur.size() + 1) * w > max_tokens) {
        out.push_back(std::move(cur));
        cur.clear();
        widest = 0;
      }
      cur.push_back(i);
      widest = std::max(widest, len);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
  }
  return out;
}

namespace {

const char* kind_name(DatasetKind k) { return k == DatasetKind::Mono ? "mono" : "parallel"; }

std::string get_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) {
    fail(ErrorKind::Data, "manifest: " + where + " lacks string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

}  // namespace

std::string Manifest::to_json() const {
  json j;
  j["format"] = "munmt-manifest-v1";
  j["datasets"] = json::array();
  for (const auto& d : datasets) {
    json e{{"id", d.id}, {"kind", kind_name(d.kind)}, {"synthetic", d.synthetic}};
    if (d.kind == DatasetKind::Mono) {
      e["lang"] = d.lang;
      e["path"] = d.path;
    } else {
      e["src_lang"] = d.src_lang;
      e["tgt_lang"] = d.tgt_lang;
      e["src_path"] = d.src_path;
      e["tgt_path"] = d.tgt_path;
    }
    j["datasets"].push_back(std::move(e));
  }
  j["testsets"] = json::array();
  for (const auto& t : testsets) {
    j["testsets"].push_back({{"split", t.split},
                             {"src_lang", t.src_lang},
                             {"tgt_lang", t.tgt_lang},
                             {"src_path", t.src_path},
                             {"ref_path", t.ref_path}});
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::parse(const std::string& text, const std::filesystem::path& root) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Data, std::string("manifest: malformed JSON: ") + e.what());
  }
  Manifest m;
  m.root = root;
  if (!j.contains("datasets") || !j["datasets"].is_array()) {
    fail(ErrorKind::Data, "manifest: missing 'datasets' array");
  }
  std::set<std::string> ids;
  for (const auto& e : j["datasets"]) {
    ManifestDataset d;
    d.id = get_string(e, "id", "dataset entry");
    if (!ids.insert(d.id).second) fail(ErrorKind::Data, "manifest: duplicate dataset id " + d.id);
    const auto kind = get_string(e, "kind", d.id);
    d.synthetic = e.value("synthetic", false);
    if (kind == "mono") {
      d.kind = DatasetKind::Mono;
      d.lang = get_string(e, "lang", d.id);
      d.path = get_string(e, "path", d.id);
      if (d.synthetic) fail(ErrorKind::Data, "manifest: mono dataset " + d.id + " marked synthetic");
    } else if (kind == "parallel") {
      d.kind = DatasetKind::Parallel;
      d.src_lang = get_string(e, "src_lang", d.id);
      d.tgt_lang = get_string(e, "tgt_lang", d.id);
      d.src_path = get_string(e, "src_path", d.id);
      d.tgt_path = get_string(e, "tgt_path", d.id);
    } else {
      fail(ErrorKind::Data, "manifest: dataset " + d.id + " has unknown kind '" + kind + "'");
    }
    m.datasets.push_back(std::move(d));
  }
  if (j.contains("testsets")) {
    for (const auto& e : j["testsets"]) {
      ManifestTestset t;
      t.split = get_string(e, "split", "testset");
      t.src_lang = get_string(e, "src_lang", "testset");
      t.tgt_lang = get_string(e, "tgt_lang", "testset");
      t.src_path = get_string(e, "src_path", "testset");
      t.ref_path = get_string(e, "ref_path", "testset");
      if (t.split != "dev" && t.split != "test") {
        fail(ErrorKind::Data, "manifest: testset split must be dev or test");
      }
      m.testsets.push_back(std::move(t));
    }
  }
  return m;
}

Manifest Manifest::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.parent_path());
}

void Manifest::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

std::filesystem::path Manifest::resolve(const std::string& rel) const {
  const std::filesystem::path p(rel);
  return p.is_absolute() ? p : root / p;
}

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = end + 1;
  }
  return lines;
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\f\v") == std::string::npos;
}

}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  auto lines = split_lines(read_file(path));
  std::erase_if(lines, blank);
  return lines;
}

std::vector<std::pair<std::string, std::string>> read_parallel(const std::filesystem::path& src,
                                                               const std::filesystem::path& tgt) {
  const auto a = split_lines(read_file(src));
  const auto b = split_lines(read_file(tgt));
  if (a.size() != b.size()) {
    fail(ErrorKind::Data, "parallel files differ in line count: " + src.string() + " (" +
                              std::to_string(a.size()) + ") vs " + tgt.string() + " (" +
                              std::to_string(b.size()) + ")");
  }
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (blank(a[i]) || blank(b[i])) continue;
    out.emplace_back(a[i], b[i]);
  }
  return out;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace munmt::corpus
