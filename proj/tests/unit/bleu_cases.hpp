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

// The 20 fixed hypothesis/reference cases scored against the oracle.

#ifndef MUNMT_TESTS_BLEU_CASES_HPP
#define MUNMT_TESTS_BLEU_CASES_HPP

#include <string>
#include <vector>

#include "common/rng.hpp"
#include "eval/bleu.hpp"

namespace munmt::testing {

struct BleuCase {
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
};

// Random sentences over a small word list so n-gram overlap is frequent.
inline std::vector<std::string> random_corpus(Rng& rng, std::size_t lines, std::size_t max_len) {
  static const char* words[] = {"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "to"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lines; ++i) {
    std::string s;
    const auto n = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < n; ++k) {
      if (k) s += ' ';
      s += words[rng.below(9)];
    }
    out.push_back(s);
  }
  return out;
}

// Case 0 is the identical corpus; even cases are one-word deletions of the
// reference.
inline std::vector<BleuCase> fixed_bleu_cases() {
  Rng rng(20260401);
  std::vector<BleuCase> cases;
  for (int c = 0; c < 20; ++c) {
    const auto lines = 1 + rng.below(12);
    BleuCase bc;
    bc.refs = random_corpus(rng, lines, 14);
    if (c == 0) {
      bc.hyps = bc.refs;
    } else {
      bc.hyps = random_corpus(rng, lines, 14);
      if (c % 2 == 0) {
        for (std::size_t i = 0; i < lines; ++i) {
          auto t = eval::tokenize_whitespace(bc.refs[i]);
          if (t.size() > 2) t.erase(t.begin() + static_cast<long>(rng.below(t.size())));
          std::string s;
          for (std::size_t k = 0; k < t.size(); ++k) s += (k ? " " : "") + t[k];
          bc.hyps[i] = s;
        }
      }
    }
    cases.push_back(std::move(bc));
  }
  return cases;
}

}  // namespace munmt::testing

#endif  // MUNMT_TESTS_BLEU_CASES_HPP
