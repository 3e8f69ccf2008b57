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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "coopgan/data.hpp"
#include "coopgan/models.hpp"

namespace coopgan::metrics {

// Mean per-token NLL of the sequences under `model`, pad positions masked.
// Evaluated in chunks; the result does not depend on the chunk size beyond
// floating-point summation order within a chunk.
double mean_token_nll(const SeqModel& model, std::span<const data::TokenSequence> corpus, std::size_t chunk = 500);

// Per-token NLL of real test data under the generator.
double nll_gen(const SeqModel& generator, std::span<const data::TokenSequence> test_corpus);

// Tokens that count for BLEU: up to the sequence length, EOS and PAD removed.
std::vector<int> content_tokens(const data::TokenSequence& s);

// Sentence BLEU against a whole reference corpus (each hypothesis is scored
// against every reference), averaged over hypotheses.
//
//   p_n = clip_n / max(1, L - n + 1)      clip_n: hypothesis n-gram counts
//                                         clipped by the max count in any
//                                         single reference
//   if clip_n == 0 and n >= 2: p_n = 1 / (max(1, L - n + 1) + 1)
//   if clip_1 == 0: score 0
//   BP = 1 if L > r else exp(1 - r / L), r = closest reference length
//        (shorter one on ties)
//   BLEU = BP * exp(mean_n log p_n), n = 1..max_n, uniform weights
class BleuScorer {
 public:
  BleuScorer(const std::vector<std::vector<int>>& references, int max_n);

  double sentence(const std::vector<int>& hypothesis) const;
  double corpus(const std::vector<std::vector<int>>& hypotheses) const;
  int max_n() const { return max_n_; }

 private:
  int max_n_;
  std::vector<std::unordered_map<std::string, int>> max_counts_;  // per order
  std::vector<std::size_t> ref_lengths_;                          // sorted
};

double bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references,
            int max_n);

inline constexpr int kSchemaVersion = 1;

struct MetricsRecord {
  std::size_t epoch = 0;
  std::string phase;  // "pretrain" | "adversarial"
  std::string tag;    // run label, e.g. the ablation name
  std::optional<double> temperature;
  std::optional<double> adv_g, adv_d, cot_theta, cot_psi;
  std::optional<double> nll_gen, nll_oracle, nll_lm;
  std::optional<double> bleu_2, bleu_3, bleu_4, bleu_5;
  std::optional<double> wall_clock_sec;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

nlohmann::ordered_json to_json(const MetricsRecord& r);
MetricsRecord record_from_json(const nlohmann::json& j);

// Append-only JSONL sink: a header line describing the run, then one record
// per line. Every write is flushed.
class MetricsLog {
 public:
  MetricsLog(const std::filesystem::path& path, const nlohmann::ordered_json& header);

  void write(const MetricsRecord& r);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

void log_record(const MetricsRecord& r, std::ostream& sink);

struct LogContents {
  nlohmann::json header;
  std::vector<MetricsRecord> records;
};
LogContents read_log(const std::filesystem::path& path);

}  // namespace coopgan::metrics
