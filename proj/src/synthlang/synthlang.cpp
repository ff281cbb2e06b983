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

#include "synthlang/synthlang.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "json.hpp"

namespace munmt::synth {

namespace {

std::string join_problems(const std::string& what, const std::vector<std::string>& problems) {
  std::string msg = what + ": " + problems[0];
  for (std::size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
  return msg;
}

double hash_uniform(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(derive_seed(seed, index) >> 11) * 0x1.0p-53;
}

class Generator {
 public:
  explicit Generator(const CorpusSpec& spec)
      : spec_(spec),
        zipf_(spec.vocab_types, spec.zipf_exponent),
        rng_(derive_seed(spec.seed, "lines")),
        chain_seed_(derive_seed(spec.seed, "chain")) {}

  BaseSentence next() {
    const auto span = spec_.max_len - spec_.min_len + 1;
    const auto len = spec_.min_len + static_cast<std::size_t>(rng_.below(span));
    const std::uint64_t start = spec_.vocab_types;
    std::uint64_t a = start, b = start;
    BaseSentence s;
    s.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      int w;
      if (spec_.successors > 0 && rng_.bernoulli(spec_.follow)) {
        const auto j = rng_.below(spec_.successors);
        const auto ctx = (a * (spec_.vocab_types + 1) + b) * spec_.successors + j;
        w = zipf_.sample(hash_uniform(chain_seed_, ctx));
      } else {
        w = zipf_.sample(rng_.uniform());
      }
      s.push_back(w);
      a = b;
      b = static_cast<std::uint64_t>(w);
    }
    return s;
  }

 private:
  CorpusSpec spec_;
  Zipf zipf_;
  Rng rng_;
  std::uint64_t chain_seed_;
};

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<int> random_permutation(std::size_t n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p.begin(), p.end());
  return p;
}

}  // namespace

void CorpusSpec::validate() const {
  std::vector<std::string> problems;
  if (vocab_types < 2) problems.push_back("vocab_types must be >= 2");
  if (min_len < 1) problems.push_back("min_len must be >= 1");
  if (max_len < min_len) problems.push_back("max_len must be >= min_len");
  if (!(zipf_exponent > 0)) problems.push_back("zipf_exponent must be > 0");
  if (!(follow >= 0 && follow <= 1)) problems.push_back("follow must be in [0, 1]");
  if (!problems.empty()) fail(ErrorKind::Config, join_problems("invalid corpus spec", problems));
}

Zipf::Zipf(std::size_t n, double exponent) {
  cdf_.resize(n);
  double acc = 0;
  for (std::size_t r = 0; r < n; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -exponent);
    cdf_[r] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

int Zipf::sample(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1));
}

std::vector<BaseSentence> gen_base_corpus(const CorpusSpec& spec) {
  spec.validate();
  Generator gen(spec);
  std::vector<BaseSentence> out;
  out.reserve(spec.lines);
  for (std::size_t i = 0; i < spec.lines; ++i) out.push_back(gen.next());
  return out;
}

void LanguageSpec::validate(std::size_t stem_count) const {
  std::vector<std::string> problems;
  if (name.empty()) problems.push_back("empty name");
  if (lexicon.empty()) problems.push_back("empty lexicon");
  std::vector<bool> seen(stem_count, false);
  for (int t : lexicon) {
    if (t < 0 || static_cast<std::size_t>(t) >= stem_count || seen[static_cast<std::size_t>(t)]) {
      problems.push_back("lexicon must map types to distinct stems");
      break;
    }
    seen[static_cast<std::size_t>(t)] = true;
  }
  if (base && window > 1) problems.push_back("base language cannot reorder");
  if (!problems.empty()) fail(ErrorKind::Config, join_problems("language " + name, problems));
}

ToyLanguage::ToyLanguage(LanguageSpec spec, const std::vector<std::string>& stems)
    : spec_(std::move(spec)) {
  spec_.validate(stems.size());
  words_.reserve(spec_.lexicon.size());
  for (std::size_t t = 0; t < spec_.lexicon.size(); ++t) {
    words_.push_back(stems[static_cast<std::size_t>(spec_.lexicon[t])]);
    if (!index_.emplace(words_.back(), static_cast<int>(t)).second) {
      fail(ErrorKind::Config, "language " + spec_.name + ": duplicate surface word");
    }
  }
}

std::vector<std::string> window_reverse(std::vector<std::string> words, std::size_t window) {
  if (window < 2) return words;
  for (std::size_t i = 0; i < words.size(); i += window) {
    const auto end = std::min(words.size(), i + window);
    std::reverse(words.begin() + static_cast<long>(i), words.begin() + static_cast<long>(end));
  }
  return words;
}

std::string ToyLanguage::derive(const BaseSentence& s) const {
  std::vector<std::string> words;
  words.reserve(s.size());
  for (int t : s) words.push_back(word(t));
  return join_words(window_reverse(std::move(words), spec_.window));
}

BaseSentence ToyLanguage::parse(const std::string& sentence) const {
  // Window reversal is an involution, so undoing it is applying it again.
  const auto words = window_reverse(split_words(sentence), spec_.window);
  BaseSentence out;
  out.reserve(words.size());
  for (const auto& w : words) {
    auto it = index_.find(w);
    if (it == index_.end()) {
      fail(ErrorKind::Data, "language " + spec_.name + ": unmapped word '" + w + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::string oracle_translate(const std::string& sentence, const ToyLanguage& from,
                             const ToyLanguage& to) {
  return to.derive(from.parse(sentence));
}

std::vector<std::string> make_stems(std::size_t count, std::uint64_t seed) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static const char* vowels[] = {"a", "e", "i", "o", "u"};
  Rng rng(derive_seed(seed, "stems"));
  std::set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 10)) fail(ErrorKind::Config, "cannot make enough distinct stems");
    const auto syllables = 1 + rng.below(3);
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
      w += onsets[rng.below(14)];
      w += vowels[rng.below(5)];
    }
    if (rng.bernoulli(0.3)) w += onsets[rng.below(14)];
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

void BenchmarkConfig::validate() const {
  std::vector<std::string> problems;
  std::set<std::string> names{base};
  if (base.empty()) problems.push_back("base language needs a name");
  if (targets.empty()) problems.push_back("at least one target language is required");
  if (auxiliaries.empty()) problems.push_back("at least one auxiliary language is required");
  for (const auto& n : targets) {
    if (n.empty() || !names.insert(n).second) problems.push_back("duplicate or empty language '" + n + "'");
  }
  for (const auto& n : auxiliaries) {
    if (n.empty() || !names.insert(n).second) problems.push_back("duplicate or empty language '" + n + "'");
  }
  if (targets.size() > 4) problems.push_back("at most 4 target languages");
  if (auxiliaries.size() > 6) problems.push_back("at most 6 auxiliary languages");
  if (!auxiliary_windows.empty() && auxiliary_windows.size() != auxiliaries.size()) {
    problems.push_back("auxiliary_windows needs one entry per auxiliary (or none)");
  }
  if (!auxiliary_windows.empty() && auxiliary_windows.size() != auxiliaries.size()) {
    problems.push_back("auxiliary_windows needs one entry per auxiliary (or none)");
  }
  if (vocab_types < 2) problems.push_back("vocab_types must be >= 2");
  if (min_len < 1 || max_len < min_len) problems.push_back("need 1 <= min_len <= max_len");
  if (mono_lines < 1) problems.push_back("mono_lines must be >= 1");
  if (parallel_lines < 1) problems.push_back("parallel_lines must be >= 1");
  if (dev_lines < 1 || test_lines < 1) problems.push_back("dev_lines and test_lines must be >= 1");
  if (!(cognate_share >= 0 && cognate_share <= 1)) problems.push_back("cognate_share must be in [0, 1]");
  if (!(follow >= 0 && follow <= 1)) problems.push_back("follow must be in [0, 1]");
  if (!(zipf_exponent > 0)) problems.push_back("zipf_exponent must be > 0");
  if (!(word_dropout >= 0 && word_dropout < 1)) problems.push_back("word_dropout must be in [0, 1)");
  if (!problems.empty()) fail(ErrorKind::Config, join_problems("invalid benchmark config", problems));
}

std::string BenchmarkConfig::to_json() const {
  nlohmann::json j{{"base", base},
                   {"targets", targets},
                   {"auxiliaries", auxiliaries},
                   {"vocab_types", vocab_types},
                   {"min_len", min_len},
                   {"max_len", max_len},
                   {"mono_lines", mono_lines},
                   {"parallel_lines", parallel_lines},
                   {"dev_lines", dev_lines},
                   {"test_lines", test_lines},
                   {"target_window", target_window},
                   {"auxiliary_windows", auxiliary_windows},
                   {"cognate_share", cognate_share},
                   {"follow", follow},
                   {"successors", successors},
                   {"zipf_exponent", zipf_exponent},
                   {"word_dropout", word_dropout},
                   {"seed", seed}};
  return j.dump(2) + "\n";
}

BenchmarkConfig BenchmarkConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("benchmark config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Config, "benchmark config must be a JSON object");
  BenchmarkConfig c;
  std::vector<std::string> problems;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    try {
      if (k == "base") c.base = v.get<std::string>();
      else if (k == "targets") c.targets = v.get<std::vector<std::string>>();
      else if (k == "auxiliaries") c.auxiliaries = v.get<std::vector<std::string>>();
      else if (k == "vocab_types") c.vocab_types = v.get<std::size_t>();
      else if (k == "min_len") c.min_len = v.get<std::size_t>();
      else if (k == "max_len") c.max_len = v.get<std::size_t>();
      else if (k == "mono_lines") c.mono_lines = v.get<std::size_t>();
      else if (k == "parallel_lines") c.parallel_lines = v.get<std::size_t>();
      else if (k == "dev_lines") c.dev_lines = v.get<std::size_t>();
      else if (k == "test_lines") c.test_lines = v.get<std::size_t>();
      else if (k == "target_window") c.target_window = v.get<std::size_t>();
      else if (k == "auxiliary_windows") c.auxiliary_windows = v.get<std::vector<std::size_t>>();
      else if (k == "cognate_share") c.cognate_share = v.get<double>();
      else if (k == "follow") c.follow = v.get<double>();
      else if (k == "successors") c.successors = v.get<std::size_t>();
      else if (k == "zipf_exponent") c.zipf_exponent = v.get<double>();
      else if (k == "word_dropout") c.word_dropout = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else problems.push_back("unknown key '" + k + "'");
    } catch (const nlohmann::json::exception&) {
      problems.push_back("wrong type for '" + k + "'");
    }
  }
  if (!problems.empty()) fail(ErrorKind::Config, join_problems("invalid benchmark config", problems));
  c.validate();
  return c;
}

const ToyLanguage& Benchmark::language(const std::string& name) const {
  for (const auto& l : languages) {
    if (l.spec().name == name) return l;
  }
  fail(ErrorKind::Data, "benchmark has no language '" + name + "'");
}

Benchmark make_family(const BenchmarkConfig& cfg) {
  cfg.validate();
  const auto n = cfg.vocab_types;
  const auto naux = cfg.auxiliaries.size();
  // Pool 0 is English, pool 1 + a is auxiliary a.
  const auto stems = make_stems(n * (1 + naux), cfg.seed);
  Rng rng(derive_seed(cfg.seed, "lexicons"));

  std::vector<int> english(n);
  std::iota(english.begin(), english.end(), 0);

  std::vector<std::vector<int>> aux_lex;
  for (std::size_t a = 0; a < naux; ++a) {
    auto lex = random_permutation(n, rng);
    for (int& v : lex) v += static_cast<int>((1 + a) * n);
    aux_lex.push_back(std::move(lex));
  }

  // Each target deals its types into one group per auxiliary: the first
  // takes cognate_share of them, the others split the rest. A type takes the
  // surface word of its group's auxiliary.
  std::vector<std::vector<int>> target_lex;
  const auto first = static_cast<std::size_t>(std::llround(cfg.cognate_share * static_cast<double>(n)));
  for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
    const auto order = random_permutation(n, rng);
    std::vector<int> lex(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto type = static_cast<std::size_t>(order[r]);
      const std::size_t g = (r < first || naux == 1) ? 0 : 1 + (r - first) % (naux - 1);
      lex[type] = aux_lex[g][type];
    }
    target_lex.push_back(std::move(lex));
  }

  Benchmark b;
  b.config = cfg;
  b.languages.emplace_back(LanguageSpec{cfg.base, true, english, 0}, stems);
  for (std::size_t a = 0; a < naux; ++a) {
    const std::size_t window = cfg.auxiliary_windows.empty() ? 0 : cfg.auxiliary_windows[a];
    b.languages.emplace_back(LanguageSpec{cfg.auxiliaries[a], false, aux_lex[a], window}, stems);
  }
  for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
    b.languages.emplace_back(LanguageSpec{cfg.targets[t], false, target_lex[t], cfg.target_window},
                             stems);
  }
  return b;
}

namespace {

CorpusSpec spec_for(const BenchmarkConfig& cfg, std::size_t lines, const std::string& stream) {
  CorpusSpec s;
  s.vocab_types = cfg.vocab_types;
  s.min_len = cfg.min_len;
  s.max_len = cfg.max_len;
  s.lines = lines;
  s.zipf_exponent = cfg.zipf_exponent;
  s.follow = cfg.follow;
  s.successors = cfg.successors;
  s.seed = derive_seed(cfg.seed, stream);
  return s;
}

std::string drop_words(const std::string& line, double p, Rng& rng) {
  if (p <= 0) return line;
  const auto words = split_words(line);
  std::vector<std::string> kept;
  for (const auto& w : words) {
    if (!rng.bernoulli(p)) kept.push_back(w);
  }
  if (kept.empty()) kept.push_back(words.front());
  return join_words(kept);
}

}  // namespace

corpus::Manifest build_benchmark(const BenchmarkConfig& cfg, const std::filesystem::path& dir) {
  const auto family = make_family(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  corpus::Manifest m;
  m.root = dir;
  std::set<BaseSentence> training;

  for (const auto& lang : family.languages) {
    const auto& name = lang.spec().name;
    const auto base = gen_base_corpus(spec_for(cfg, cfg.mono_lines, "mono." + name));
    Rng noise(derive_seed(cfg.seed, "dropout." + name));
    std::vector<std::string> lines;
    lines.reserve(base.size());
    for (const auto& s : base) {
      training.insert(s);
      lines.push_back(drop_words(lang.derive(s), cfg.word_dropout, noise));
    }
    const std::string file = "mono." + name + ".txt";
    corpus::write_lines(dir / file, lines);
    m.datasets.push_back({"mono." + name, corpus::DatasetKind::Mono, name, "", "", file, "", "", false});
  }

  const auto& base_lang = family.languages.front();
  for (std::size_t a = 0; a < cfg.auxiliaries.size(); ++a) {
    const auto& aux = family.language(cfg.auxiliaries[a]);
    const std::string id = "para." + cfg.base + "-" + cfg.auxiliaries[a];
    const auto base = gen_base_corpus(spec_for(cfg, cfg.parallel_lines, id));
    std::vector<std::string> src, tgt;
    for (const auto& s : base) {
      training.insert(s);
      src.push_back(base_lang.derive(s));
      tgt.push_back(aux.derive(s));
    }
    const auto src_file = id + "." + cfg.base;
    const auto tgt_file = id + "." + cfg.auxiliaries[a];
    corpus::write_lines(dir / src_file, src);
    corpus::write_lines(dir / tgt_file, tgt);
    m.datasets.push_back({id, corpus::DatasetKind::Parallel, "", cfg.base, cfg.auxiliaries[a], "",
                          src_file, tgt_file, false});
  }

  // Held-out sentences: never seen in training and distinct across splits.
  for (const auto& [split, count] :
       std::vector<std::pair<std::string, std::size_t>>{{"dev", cfg.dev_lines}, {"test", cfg.test_lines}}) {
    Generator gen(spec_for(cfg, count, "heldout." + split));
    std::vector<BaseSentence> held;
    std::size_t attempts = 0;
    while (held.size() < count) {
      if (++attempts > 100 * (count + 100)) {
        fail(ErrorKind::Config, "cannot draw enough unseen " + split + " sentences");
      }
      auto s = gen.next();
      if (training.insert(s).second) held.push_back(std::move(s));
    }
    for (const auto& lang : family.languages) {
      std::vector<std::string> lines;
      for (const auto& s : held) lines.push_back(lang.derive(s));
      corpus::write_lines(dir / (split + "." + lang.spec().name), lines);
    }
    for (const auto& from : family.languages) {
      for (const auto& to : family.languages) {
        if (&from == &to) continue;
        m.testsets.push_back({split, from.spec().name, to.spec().name, split + "." + from.spec().name,
                              split + "." + to.spec().name});
      }
    }
  }

  write_file_atomic(dir / "benchmark.json", cfg.to_json());
  m.save(dir / "manifest.json");
  return m;
}

}  // namespace munmt::synth
