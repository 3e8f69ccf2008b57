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

#include "coopgan/data.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "coopgan/errors.hpp"

namespace coopgan::data {

namespace {

const std::vector<std::string> kReservedTokens{"<pad>", "<bos>", "<eos>", "<unk>"};

}  // namespace

TokenSequence TokenSequence::full(std::vector<int> ids) {
  TokenSequence s;
  s.length = ids.size();
  s.ids = std::move(ids);
  return s;
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [tok, n] : counts) {
    if (std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) != kReservedTokens.end()) continue;
    entries.emplace_back(tok, n);
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens = kReservedTokens;
  for (auto& e : entries) tokens.push_back(e.first);
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) throw InputError("vocab must contain the four reserved tokens");
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw InputError("duplicate vocab entry '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocab file " + path.string());
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocab file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw InputError("token index " + std::to_string(index) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(index)];
}

std::uint64_t Vocab::fingerprint() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return fnv1a64(joined);
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

TokenSequence encode(const Vocab& vocab, const std::vector<std::string>& tokens, std::size_t max_len,
                     bool* truncated) {
  if (max_len < 2) throw InputError("max_len must leave room for a token and EOS");
  TokenSequence s;
  s.ids.assign(max_len, kPad);
  std::size_t n = tokens.size();
  bool cut = n + 1 > max_len;
  if (cut) n = max_len - 1;
  for (std::size_t i = 0; i < n; ++i) s.ids[i] = vocab.index(tokens[i]);
  s.ids[n] = kEos;
  s.length = n + 1;
  if (truncated) *truncated = cut;
  return s;
}

std::string decode(const Vocab& vocab, const TokenSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    int id = seq.ids[i];
    if (id == kEos) break;
    if (id == kPad) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path, const std::optional<Vocab>& vocab, std::size_t max_len) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<std::vector<std::string>> lines;
  for (std::string line; std::getline(in, line);) {
    auto toks = tokenize(line);
    if (!toks.empty()) lines.push_back(std::move(toks));
  }
  if (lines.empty()) throw InputError("corpus " + path.string() + " is empty");
  Corpus c{vocab ? *vocab : Vocab::build(lines), {}, 0};
  c.sequences.reserve(lines.size());
  for (const auto& l : lines) {
    bool cut = false;
    c.sequences.push_back(encode(c.vocab, l, max_len, &cut));
    if (cut) ++c.truncated;
  }
  if (c.truncated) {
    std::cerr << "warning: " << c.truncated << " line(s) in " << path.string() << " truncated to " << max_len
              << " tokens\n";
  }
  return c;
}

void save_index_corpus(const std::filesystem::path& path, const std::vector<TokenSequence>& seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.length; ++i) {
      if (i) out << ' ';
      out << s.ids[i];
    }
    out << '\n';
  }
}

std::vector<TokenSequence> load_index_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<TokenSequence> out;
  std::size_t width = 0;
  for (std::string line; std::getline(in, line);) {
    std::istringstream is(line);
    std::vector<int> ids;
    for (int id; is >> id;) ids.push_back(id);
    if (ids.empty()) continue;
    if (width && ids.size() != width) throw InputError("index corpus rows differ in length");
    width = ids.size();
    out.push_back(TokenSequence::full(std::move(ids)));
  }
  if (out.empty()) throw InputError("index corpus " + path.string() + " is empty");
  return out;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

BatchStream::BatchStream(std::size_t corpus_size, std::size_t batch_size, Rng rng, bool shuffle)
    : corpus_size_(corpus_size), batch_size_(batch_size), rng_(std::move(rng)), shuffle_(shuffle) {
  if (batch_size_ < 1) throw InputError("batch_size must be at least 1");
  if (corpus_size_ < 1) throw InputError("cannot batch an empty corpus");
}

void BatchStream::start_epoch() {
  order_.resize(corpus_size_);
  for (std::size_t i = 0; i < corpus_size_; ++i) order_[i] = i;
  if (shuffle_) shuffle_indices(order_, rng_);
  cursor_ = 0;
  ++epochs_;
}

std::vector<std::size_t> BatchStream::next() {
  if (cursor_ >= order_.size()) start_epoch();
  std::size_t end = std::min(cursor_ + batch_size_, order_.size());
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return batch;
}

std::vector<std::vector<std::size_t>> BatchStream::epoch() {
  start_epoch();
  std::vector<std::vector<std::size_t>> out;
  while (cursor_ < order_.size()) out.push_back(next());
  return out;
}

std::vector<TokenSequence> gather(const std::vector<TokenSequence>& corpus, const std::vector<std::size_t>& idx) {
  std::vector<TokenSequence> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(corpus.at(i));
  return out;
}

}  // namespace coopgan::data
