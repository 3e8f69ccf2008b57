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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "coopgan/errors.hpp"

namespace coopgan::data {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name, const std::string& contents) {
  auto dir = fs::temp_directory_path() / "coopgan_data_test";
  fs::create_directories(dir);
  auto p = dir / name;
  std::ofstream(p) << contents;
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Vocab, FreshVocabCountsReservedPlusTokens) {
  auto c = load_corpus(temp_file("aba.txt", "a b a\n"), std::nullopt, 8);
  EXPECT_EQ(c.vocab.size(), 6u);
  EXPECT_EQ(c.vocab.token(0), "<pad>");
  EXPECT_EQ(c.vocab.token(3), "<unk>");
  EXPECT_EQ(c.vocab.index("a"), 4);  // more frequent first
  EXPECT_EQ(c.vocab.index("b"), 5);
  ASSERT_EQ(c.sequences.size(), 1u);
  EXPECT_EQ(c.sequences[0].ids, (std::vector<int>{4, 5, 4, kEos, kPad, kPad, kPad, kPad}));
  EXPECT_EQ(c.sequences[0].length, 4u);
}

TEST(Vocab, TiesBreakLexicographically) {
  auto v = Vocab::build({{"zeta", "alpha", "mid"}, {"mid"}});
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<bos>", "<eos>", "<unk>", "mid", "alpha", "zeta"}));
}

TEST(Vocab, SaveIsByteDeterministicAndRoundTrips) {
  auto text = "the cat sat\nthe dog ran\na cat ran\n";
  auto c1 = load_corpus(temp_file("v1.txt", text), std::nullopt, 6);
  auto c2 = load_corpus(temp_file("v2.txt", text), std::nullopt, 6);
  auto dir = fs::temp_directory_path() / "coopgan_data_test";
  c1.vocab.save(dir / "vocab1.txt");
  c2.vocab.save(dir / "vocab2.txt");
  EXPECT_EQ(read_all(dir / "vocab1.txt"), read_all(dir / "vocab2.txt"));
  auto back = Vocab::load(dir / "vocab1.txt");
  EXPECT_EQ(back.tokens(), c1.vocab.tokens());
  EXPECT_EQ(back.fingerprint(), c1.vocab.fingerprint());
  for (const auto& s : c1.sequences)
    for (int id : s.ids) EXPECT_NE(id, kUnk);
}

TEST(Corpus, UnseenTokensMapToUnk) {
  auto v = Vocab::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "a"});
  auto c = load_corpus(temp_file("unk.txt", "a q\n"), v, 4);
  EXPECT_EQ(c.sequences[0].ids, (std::vector<int>{4, kUnk, kEos, kPad}));
}

TEST(Corpus, LongLinesAreTruncatedAndCounted) {
  auto c = load_corpus(temp_file("long.txt", "a b c d e f\na\n"), std::nullopt, 4);
  EXPECT_EQ(c.truncated, 1u);
  EXPECT_EQ(c.sequences[0].ids.size(), 4u);
  EXPECT_EQ(c.sequences[0].ids[3], kEos);
  EXPECT_EQ(c.sequences[0].length, 4u);
}

TEST(Corpus, EmptyFileIsAnError) {
  EXPECT_THROW(load_corpus(temp_file("empty.txt", ""), std::nullopt, 4), InputError);
  EXPECT_THROW(load_corpus(temp_file("blank.txt", "\n  \n"), std::nullopt, 4), InputError);
}

TEST(Corpus, DecodeStopsAtEos) {
  auto c = load_corpus(temp_file("dec.txt", "hello there world\n"), std::nullopt, 6);
  EXPECT_EQ(decode(c.vocab, c.sequences[0]), "hello there world");
}

TEST(Corpus, IndexFilesRoundTrip) {
  std::vector<TokenSequence> s = {TokenSequence::full({5, 6, 7}), TokenSequence::full({1, 0, 2})};
  auto p = fs::temp_directory_path() / "coopgan_data_test" / "idx.txt";
  save_index_corpus(p, s);
  EXPECT_EQ(load_index_corpus(p), s);
}

TEST(Batches, EachEpochCoversCorpusOnce) {
  BatchStream stream(10, 3, Rng(4), true);
  for (int epoch = 0; epoch < 3; ++epoch) {
    auto batches = stream.epoch();
    ASSERT_EQ(batches.size(), 4u);
    EXPECT_EQ(batches.back().size(), 1u);
    std::multiset<std::size_t> seen;
    for (const auto& b : batches) seen.insert(b.begin(), b.end());
    std::multiset<std::size_t> want;
    for (std::size_t i = 0; i < 10; ++i) want.insert(i);
    EXPECT_EQ(seen, want);
  }
}

TEST(Batches, SameSeedSameOrder) {
  BatchStream a(50, 7, Rng(9), true), b(50, 7, Rng(9), true), c(50, 7, Rng(10), true);
  auto ea = a.epoch(), eb = b.epoch(), ec = c.epoch();
  EXPECT_EQ(ea, eb);
  EXPECT_NE(ea, ec);
}

TEST(Batches, UnshuffledIsSequential) {
  BatchStream s(5, 2, Rng(1), false);
  EXPECT_EQ(s.next(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(s.next(), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(s.next(), (std::vector<std::size_t>{4}));
  EXPECT_EQ(s.next(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(s.epochs_started(), 2u);
}

TEST(Rng, SplitStreamsAreIndependentOfParentPosition) {
  Rng a(1), b(1);
  b.next_u64();
  EXPECT_EQ(a.split("x").next_u64(), b.split("x").next_u64());
  EXPECT_NE(a.split("x").next_u64(), a.split("y").next_u64());
}

TEST(Rng, StateRoundTrip) {
  Rng a(77);
  for (int i = 0; i < 10; ++i) a.normal();
  Rng b;
  b.set_state(a.state());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, BelowIsInRangeAndUniformish) {
  Rng r(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70'000; ++i) {
    auto x = r.below(7);
    ASSERT_LT(x, 7u);
    ++counts[x];
  }
  for (int c : counts) EXPECT_NEAR(c, 10'000, 500);
}

}  // namespace
}  // namespace coopgan::data
