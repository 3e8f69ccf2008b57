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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "coopgan/rng.hpp"

namespace coopgan::data {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr std::size_t kNumReserved = 4;

// Encoded sentence padded to a fixed length. Positions at or beyond `length`
// hold PAD and are masked out of every loss and metric.
struct TokenSequence {
  std::vector<int> ids;
  std::size_t length = 0;

  std::size_t padded_length() const { return ids.size(); }
  bool mask(std::size_t t) const { return t < length; }

  static TokenSequence full(std::vector<int> ids);
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

class Vocab {
 public:
  // Frequency-descending, ties broken lexicographically; reserved entries
  // occupy indices 0..3.
  static Vocab build(const std::vector<std::vector<std::string>>& sentences);
  // Index list including the reserved entries.
  static Vocab from_tokens(std::vector<std::string> tokens);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  int index(std::string_view token) const;  // kUnk when unseen
  const std::string& token(int index) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> tokenize(std::string_view line);

struct Corpus {
  Vocab vocab;
  std::vector<TokenSequence> sequences;
  std::size_t truncated = 0;
};

// Sentence -> ids + EOS, padded with PAD to max_len. Longer sentences are
// cut to max_len - 1 tokens before EOS.
TokenSequence encode(const Vocab& vocab, const std::vector<std::string>& tokens, std::size_t max_len,
                     bool* truncated = nullptr);
// Tokens up to (excluding) EOS, skipping PAD.
std::string decode(const Vocab& vocab, const TokenSequence& seq);

Corpus load_corpus(const std::filesystem::path& path, const std::optional<Vocab>& vocab, std::size_t max_len);

// Token-index text files: one space-separated sequence per line.
void save_index_corpus(const std::filesystem::path& path, const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> load_index_corpus(const std::filesystem::path& path);

// In-place Fisher-Yates driven by Rng::below.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

// Endless stream of index batches. Each epoch covers the corpus exactly once
// (the last batch of an epoch may be partial) in an order reshuffled per epoch
// when `shuffle` is set.
class BatchStream {
 public:
  BatchStream(std::size_t corpus_size, std::size_t batch_size, Rng rng, bool shuffle);

  std::vector<std::size_t> next();
  // All batches of one fresh epoch.
  std::vector<std::vector<std::size_t>> epoch();
  std::size_t epochs_started() const { return epochs_; }

  const Rng& rng() const { return rng_; }
  void set_rng(Rng rng) { rng_ = std::move(rng); }

 private:
  void start_epoch();

  std::size_t corpus_size_;
  std::size_t batch_size_;
  Rng rng_;
  bool shuffle_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epochs_ = 0;
};

std::vector<TokenSequence> gather(const std::vector<TokenSequence>& corpus, const std::vector<std::size_t>& idx);

}  // namespace coopgan::data
