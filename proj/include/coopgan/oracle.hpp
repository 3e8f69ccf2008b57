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
#include <span>
#include <vector>

#include "coopgan/data.hpp"
#include "coopgan/models.hpp"

namespace coopgan::oracle {

struct OracleSpec {
  std::size_t vocab = 1000;
  std::size_t embed = 32;
  std::size_t hidden = 32;
  double scale = 1.0;
  std::uint64_t seed = 1234;
};

// Frozen random recurrent model standing in for the data distribution. All
// weights and biases are N(0, scale^2) drawn from a stream seeded by `seed`.
OracleParams make_oracle(const OracleSpec& spec);

// n hard samples of length T, deterministic per seed.
std::vector<data::TokenSequence> oracle_corpus(const OracleParams& oracle, std::size_t n, std::size_t length,
                                               std::uint64_t seed);

// Mean per-token NLL of `generated` under the oracle (teacher forced).
double nll_oracle(const OracleParams& oracle, std::span<const data::TokenSequence> generated,
                  std::size_t expected_length);

}  // namespace coopgan::oracle
