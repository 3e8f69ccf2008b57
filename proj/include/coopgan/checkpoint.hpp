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

#include <filesystem>
#include <optional>

#include "coopgan/config.hpp"
#include "coopgan/data.hpp"
#include "coopgan/trainer.hpp"

namespace coopgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: 8-byte magic, u32 version, u64 header size, a JSON header
// (config, phase, counters, vocabulary, array index) and then the raw
// little-endian doubles of every array in index order. Output bytes depend
// only on the saved content.
struct Checkpoint {
  TrainConfig config;
  TrainState state;
  std::optional<data::Vocab> vocab;
};

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, const TrainState& state,
                     const std::optional<data::Vocab>& vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace coopgan
