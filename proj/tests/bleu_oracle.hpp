// Copyright 2026 The coopgan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Brute-force sentence BLEU used to cross-check the scorer. It shares no code
// with the library: n-grams are compared element by element and every
// reference is rescanned for each hypothesis n-gram.

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace coopgan::testing {

using Sentence = std::vector<int>;

inline int count_occurrences(const Sentence& s, const Sentence& s_src, std::size_t pos, std::size_t n) {
  int c = 0;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    bool same = true;
    for (std::size_t k = 0; k < n && same; ++k) same = s[i + k] == s_src[pos + k];
    c += same;
  }
  return c;
}

inline double brute_sentence_bleu(const Sentence& hyp, const std::vector<Sentence>& refs, int max_n) {
  const std::size_t L = hyp.size();
  if (L == 0) return 0.0;
  double log_sum = 0;
  for (int ni = 1; ni <= max_n; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const std::size_t total = L >= n ? L - n + 1 : 0;
    double clipped = 0;
    for (std::size_t i = 0; i < total; ++i) {
      // Count each distinct n-gram once, at its first occurrence.
      bool first = true;
      for (std::size_t j = 0; j < i && first; ++j) {
        bool same = true;
        for (std::size_t k = 0; k < n && same; ++k) same = hyp[j + k] == hyp[i + k];
        if (same) first = false;
      }
      if (!first) continue;
      const int in_hyp = count_occurrences(hyp, hyp, i, n);
      int best = 0;
      for (const auto& r : refs) best = std::max(best, count_occurrences(r, hyp, i, n));
      clipped += std::min(in_hyp, best);
    }
    const double denom = std::max<double>(1.0, static_cast<double>(total));
    double p;
    if (clipped > 0) {
      p = clipped / denom;
    } else if (ni == 1) {
      return 0.0;
    } else {
      p = 1.0 / (denom + 1.0);
    }
    log_sum += std::log(p);
  }
  std::size_t r = refs[0].size();
  for (const auto& ref : refs) {
    const long d_new = std::labs(static_cast<long>(ref.size()) - static_cast<long>(L));
    const long d_old = std::labs(static_cast<long>(r) - static_cast<long>(L));
    if (d_new < d_old || (d_new == d_old && ref.size() < r)) r = ref.size();
  }
  const double bp = L > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(L));
  return bp * std::exp(log_sum / max_n);
}

inline double brute_bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs, int max_n) {
  double s = 0;
  for (const auto& h : hyps) s += brute_sentence_bleu(h, refs, max_n);
  return s / static_cast<double>(hyps.size());
}

struct BleuCase {
  std::string name;
  std::vector<Sentence> hyps;
  std::vector<Sentence> refs;
  int max_n;
};

// Twenty small cases covering clipping, smoothing, brevity, ties and repeats.
inline std::vector<BleuCase> bleu_cases() {
  return {
      {"exact_match", {{1, 2, 3, 4, 5}}, {{1, 2, 3, 4, 5}}, 4},
      {"exact_among_many", {{4, 5, 6, 7}}, {{1, 2}, {4, 5, 6, 7}, {9, 9, 9}}, 2},
      {"no_overlap", {{8, 8, 8}}, {{1, 2, 3}}, 2},
      {"clipped_repeats", {{7, 7, 7, 7}}, {{7, 1, 7, 2}}, 2},
      {"clip_by_max_single_ref", {{3, 3, 3}}, {{3, 1}, {3, 3, 2}}, 2},
      {"short_hypothesis", {{1, 2}}, {{1, 2, 3, 4, 5, 6}}, 3},
      {"long_hypothesis", {{1, 2, 3, 4, 5, 6, 7, 8}}, {{1, 2, 3}}, 4},
      {"closest_length_tie_shorter", {{1, 2, 3, 4}}, {{1, 2, 3}, {1, 2, 3, 4, 5}}, 2},
      {"unigram_only", {{1, 9, 2, 9}}, {{9, 1, 2}}, 1},
      {"bigram_smoothing", {{1, 3, 2, 4}}, {{1, 2, 3, 4}}, 2},
      {"trigram_partial", {{1, 2, 3, 5, 6}}, {{1, 2, 3, 4, 5, 6}}, 3},
      {"fivegram_full", {{2, 4, 6, 8, 10, 12}}, {{2, 4, 6, 8, 10, 12}, {1}}, 5},
      {"fivegram_broken", {{2, 4, 6, 0, 10, 12, 14}}, {{2, 4, 6, 8, 10, 12, 14}}, 5},
      {"single_token", {{5}}, {{5}, {5, 6}}, 2},
      {"multi_hyp_average", {{1, 2, 3}, {3, 2, 1}, {4, 4}}, {{1, 2, 3}, {2, 1, 4}}, 2},
      {"repeated_reference_ngram", {{1, 1, 2, 1, 1}}, {{1, 1, 2, 1, 1, 1}}, 3},
      {"hyp_shorter_than_n", {{1, 2}}, {{1, 2}, {3, 4, 5}}, 4},
      {"many_refs_max_count", {{6, 6, 7, 7}}, {{6, 7}, {6, 6}, {7, 7, 6}}, 2},
      {"shifted_overlap", {{10, 11, 12, 13, 14}}, {{9, 10, 11, 12, 13}}, 4},
      {"distant_lengths", {{1, 2, 3, 4, 5, 6}}, {{1, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}, 3},
  };
}

}  // namespace coopgan::testing
