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

#include "eval/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <sstream>

#include "common/error.hpp"

namespace munmt::eval {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

struct Rules13a {
  std::regex punct{R"(([\x7B-\x7E\x5B-\x60\x20-\x26\x28-\x2B\x3A-\x40/]))"};
  std::regex period_after{R"(([^0-9])([.,]))"};
  std::regex period_before{R"(([.,])([^0-9]))"};
  std::regex dash{R"(([0-9])(-))"};
};

const Rules13a& rules() {
  static const Rules13a r;
  return r;
}

}  // namespace

std::vector<std::string> tokenize_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> tokenize_13a(std::string_view text) {
  std::string s(text);
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  std::replace(s.begin(), s.end(), '\n', ' ');
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  s = " " + s + " ";
  const auto& r = rules();
  s = std::regex_replace(s, r.punct, " $1 ");
  s = std::regex_replace(s, r.period_after, "$1 $2 ");
  s = std::regex_replace(s, r.period_before, " $1 $2");
  s = std::regex_replace(s, r.dash, "$1 $2 ");
  return tokenize_whitespace(s);
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  }
  return counts;
}

}  // namespace

BleuScore bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                      const std::vector<std::vector<std::string>>& refs) {
  if (hyps.size() != refs.size()) {
    fail(ErrorKind::Data, "bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                              std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) fail(ErrorKind::Data, "bleu: empty corpus");
  BleuScore s;
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    s.hyp_len += hyps[k].size();
    s.ref_len += refs[k].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = count_ngrams(hyps[k], n);
      const auto r = count_ngrams(refs[k], n);
      for (const auto& [gram, c] : h) {
        s.totals[n - 1] += c;
        auto it = r.find(gram);
        if (it != r.end()) s.matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (s.hyp_len == 0) return s;
  s.bp = s.hyp_len >= s.ref_len
             ? 1.0
             : std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  if (std::all_of(s.matches.begin(), s.matches.end(), [](std::size_t m) { return m == 0; })) {
    return s;
  }

  double smooth = 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    if (s.totals[n] == 0) {
      zero = true;
      break;
    }
    if (s.matches[n] == 0) {
      smooth *= 2.0;
      s.precisions[n] = 100.0 / (smooth * static_cast<double>(s.totals[n]));
    } else {
      s.precisions[n] =
          100.0 * static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    }
    log_sum += std::log(s.precisions[n] / 100.0);
  }
  if (zero) return s;
  s.score = 100.0 * s.bp * std::exp(log_sum / 4.0);
  return s;
}

BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
               BleuMode mode) {
  auto tok = [mode](const std::string& t) {
    return mode == BleuMode::Detok13a ? tokenize_13a(t) : tokenize_whitespace(t);
  };
  std::vector<std::vector<std::string>> h, r;
  h.reserve(hyps.size());
  r.reserve(refs.size());
  for (const auto& x : hyps) h.push_back(tok(x));
  for (const auto& x : refs) r.push_back(tok(x));
  return bleu_tokens(h, r);
}

}  // namespace munmt::eval
