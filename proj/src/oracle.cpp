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

#include "coopgan/errors.hpp"
#include "coopgan/metrics.hpp"
#include "coopgan/sampling.hpp"

namespace coopgan::oracle {

OracleParams make_oracle(const OracleSpec& spec) {
  Rng rng(spec.seed);
  return SeqModel::random({spec.vocab, spec.embed, spec.hidden}, rng, spec.scale, /*init_biases=*/true);
}

std::vector<data::TokenSequence> oracle_corpus(const OracleParams& oracle, std::size_t n, std::size_t length,
                                               std::uint64_t seed) {
  if (n < 1) throw InputError("oracle_corpus: n must be at least 1");
  Rng rng(seed);
  return sampling::generate_hard(oracle, n, length, rng);
}

double nll_oracle(const OracleParams& oracle, std::span<const data::TokenSequence> generated,
                  std::size_t expected_length) {
  if (generated.empty()) throw InputError("nll_oracle: no sequences to score");
  for (const auto& s : generated) {
    if (s.padded_length() != expected_length) {
      throw InputError("nll_oracle: sequence length " + std::to_string(s.padded_length()) +
                       " differs from the oracle's " + std::to_string(expected_length));
    }
  }
  return metrics::mean_token_nll(oracle, generated);
}

}  // namespace coopgan::oracle
