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

#include "coopgan/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "coopgan/errors.hpp"

namespace coopgan::oracle {
namespace {

using data::TokenSequence;

TEST(Oracle, SameSeedSameCorpus) {
  auto o = make_oracle({20, 4, 4, 1.0, 3});
  EXPECT_EQ(oracle_corpus(o, 30, 5, 1), oracle_corpus(o, 30, 5, 1));
  EXPECT_NE(oracle_corpus(o, 30, 5, 1), oracle_corpus(o, 30, 5, 2));
  EXPECT_TRUE(make_oracle({20, 4, 4, 1.0, 3}).params.identical(o.params));
}

TEST(Oracle, RejectsEmptyRequestAndWrongLength) {
  auto o = make_oracle({5, 3, 3, 1.0, 3});
  EXPECT_THROW(oracle_corpus(o, 0, 3, 1), InputError);
  auto c = oracle_corpus(o, 4, 3, 1);
  EXPECT_THROW(nll_oracle(o, c, 4), InputError);
  EXPECT_THROW(nll_oracle(o, {}, 3), InputError);
}

// Per-token entropy of the oracle over length-3 sequences, by enumerating
// every sequence at V=5.
double exact_entropy(const OracleParams& o) {
  std::vector<TokenSequence> all;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int c = 0; c < 5; ++c) all.push_back(TokenSequence::full({a, b, c}));
  Array lp = log_prob(o, all);
  double h = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double l = lp.at(i, 0) + lp.at(i, 1) + lp.at(i, 2);
    h -= std::exp(l) * l;
  }
  return h / 3.0;
}

TEST(Oracle, OwnSamplesApproachExactEntropy) {
  auto o = make_oracle({5, 4, 6, 1.0, 8});
  const double h = exact_entropy(o);
  const double nll = nll_oracle(o, oracle_corpus(o, 200'000, 3, 5), 3);
  // Standard error of the mean of per-sequence log-probabilities is well below this.
  EXPECT_NEAR(nll, h, 0.01);
  EXPECT_GT(h, 0.1);
}

}  // namespace
}  // namespace coopgan::oracle
