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

#include "coopgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>

#include "coopgan/errors.hpp"

namespace coopgan::metrics {

double mean_token_nll(const SeqModel& model, std::span<const data::TokenSequence> corpus, std::size_t chunk) {
  if (corpus.empty()) throw InputError("mean_token_nll: empty corpus");
  if (chunk == 0) chunk = corpus.size();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < corpus.size(); start += chunk) {
    const std::size_t n = std::min(chunk, corpus.size() - start);
    auto part = corpus.subspan(start, n);
    const Array lp = log_prob(model, part);
    for (double x : lp.data()) total -= x;
    for (const auto& s : part) count += s.length;
  }
  if (count == 0) throw InputError("mean_token_nll: every position is masked");
  const double nll = total / static_cast<double>(count);
  if (!std::isfinite(nll)) throw NumericError("mean_token_nll: non-finite result");
  return nll;
}

double nll_gen(const SeqModel& generator, std::span<const data::TokenSequence> test_corpus) {
  return mean_token_nll(generator, test_corpus);
}

std::vector<int> content_tokens(const data::TokenSequence& s) {
  std::vector<int> out;
  for (std::size_t t = 0; t < s.length && t < s.ids.size(); ++t) {
    const int id = s.ids[t];
    if (id == data::kEos) break;
    if (id == data::kPad) continue;
    out.push_back(id);
  }
  return out;
}

namespace {

std::string ngram_key(const std::vector<int>& seq, std::size_t pos, int n) {
  std::string key(static_cast<std::size_t>(n) * sizeof(int), '\0');
  std::memcpy(key.data(), seq.data() + pos, key.size());
  return key;
}

std::unordered_map<std::string, int> count_ngrams(const std::vector<int>& seq, int n) {
  std::unordered_map<std::string, int> counts;
  const auto un = static_cast<std::size_t>(n);
  if (seq.size() < un) return counts;
  for (std::size_t i = 0; i + un <= seq.size(); ++i) ++counts[ngram_key(seq, i, n)];
  return counts;
}

}  // namespace

BleuScorer::BleuScorer(const std::vector<std::vector<int>>& references, int max_n) : max_n_(max_n) {
  if (max_n < 1) throw InputError("bleu: max_n must be at least 1");
  if (references.empty()) throw InputError("bleu: empty reference set");
  max_counts_.resize(static_cast<std::size_t>(max_n));
  for (const auto& ref : references) {
    ref_lengths_.push_back(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      auto& table = max_counts_[static_cast<std::size_t>(n - 1)];
      for (const auto& [key, c] : count_ngrams(ref, n)) {
        int& slot = table[key];
        slot = std::max(slot, c);
      }
    }
  }
  std::sort(ref_lengths_.begin(), ref_lengths_.end());
}

double BleuScorer::sentence(const std::vector<int>& hyp) const {
  const std::size_t len = hyp.size();
  if (len == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n_; ++n) {
    const auto& table = max_counts_[static_cast<std::size_t>(n - 1)];
    long clipped = 0;
    for (const auto& [key, c] : count_ngrams(hyp, n)) {
      auto it = table.find(key);
      if (it != table.end()) clipped += std::min(c, it->second);
    }
    const auto un = static_cast<std::size_t>(n);
    const double total = static_cast<double>(len >= un ? len - un + 1 : 0);
    const double denom = std::max(1.0, total);
    double p;
    if (clipped > 0) {
      p = static_cast<double>(clipped) / denom;
    } else if (n == 1) {
      return 0.0;
    } else {
      p = 1.0 / (denom + 1.0);
    }
    log_sum += std::log(p);
  }
  // Closest reference length; the shorter one wins a tie.
  auto it = std::lower_bound(ref_lengths_.begin(), ref_lengths_.end(), len);
  std::size_t r;
  if (it == ref_lengths_.end()) {
    r = ref_lengths_.back();
  } else if (it == ref_lengths_.begin()) {
    r = *it;
  } else {
    const std::size_t above = *it;
    const std::size_t below = *std::prev(it);
    r = (above - len < len - below) ? above : below;
  }
  const double bp = len > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(len));
  return bp * std::exp(log_sum / static_cast<double>(max_n_));
}

double BleuScorer::corpus(const std::vector<std::vector<int>>& hypotheses) const {
  if (hypotheses.empty()) throw InputError("bleu: no hypotheses");
  double s = 0.0;
  for (const auto& h : hypotheses) s += sentence(h);
  return s / static_cast<double>(hypotheses.size());
}

double bleu(const std::vector<std::vector<int>>& hypotheses, const std::vector<std::vector<int>>& references,
            int max_n) {
  return BleuScorer(references, max_n).corpus(hypotheses);
}

namespace {

void put(nlohmann::ordered_json& j, const char* key, const std::optional<double>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

std::optional<double> get(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

nlohmann::ordered_json to_json(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "record";
  j["tag"] = r.tag;
  j["phase"] = r.phase;
  j["epoch"] = r.epoch;
  put(j, "temperature", r.temperature);
  put(j, "adv_g", r.adv_g);
  put(j, "adv_d", r.adv_d);
  put(j, "cot_theta", r.cot_theta);
  put(j, "cot_psi", r.cot_psi);
  put(j, "nll_gen", r.nll_gen);
  put(j, "nll_oracle", r.nll_oracle);
  put(j, "nll_lm", r.nll_lm);
  put(j, "bleu_2", r.bleu_2);
  put(j, "bleu_3", r.bleu_3);
  put(j, "bleu_4", r.bleu_4);
  put(j, "bleu_5", r.bleu_5);
  put(j, "wall_clock_sec", r.wall_clock_sec);
  j["seed"] = r.seed;
  return j;
}

MetricsRecord record_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) throw IoError("metrics: unsupported schema version");
  MetricsRecord r;
  r.tag = j.value("tag", std::string());
  r.phase = j.at("phase").get<std::string>();
  r.epoch = j.at("epoch").get<std::size_t>();
  r.temperature = get(j, "temperature");
  r.adv_g = get(j, "adv_g");
  r.adv_d = get(j, "adv_d");
  r.cot_theta = get(j, "cot_theta");
  r.cot_psi = get(j, "cot_psi");
  r.nll_gen = get(j, "nll_gen");
  r.nll_oracle = get(j, "nll_oracle");
  r.nll_lm = get(j, "nll_lm");
  r.bleu_2 = get(j, "bleu_2");
  r.bleu_3 = get(j, "bleu_3");
  r.bleu_4 = get(j, "bleu_4");
  r.bleu_5 = get(j, "bleu_5");
  r.wall_clock_sec = get(j, "wall_clock_sec");
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

void log_record(const MetricsRecord& r, std::ostream& sink) { sink << to_json(r).dump() << '\n'; }

MetricsLog::MetricsLog(const std::filesystem::path& path, const nlohmann::ordered_json& header) : path_(path) {
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw IoError("metrics: cannot open " + path.string());
  nlohmann::ordered_json h;
  h["schema_version"] = kSchemaVersion;
  h["kind"] = "header";
  for (auto it = header.begin(); it != header.end(); ++it) h[it.key()] = it.value();
  out_ << h.dump() << '\n';
  out_.flush();
}

void MetricsLog::write(const MetricsRecord& r) {
  log_record(r, out_);
  out_.flush();
  if (!out_) throw IoError("metrics: write failed for " + path_.string());
}

LogContents read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("metrics: cannot open " + path.string());
  LogContents out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.value("kind", std::string()) == "header") {
      out.header = std::move(j);
    } else {
      out.records.push_back(record_from_json(j));
    }
  }
  return out;
}

}  // namespace coopgan::metrics
