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
#include <map>
#include <string>

#include "json.hpp"

namespace coopgan {

enum class MetaMode { second_order, first_order };
// none: full method. cot_off: language model frozen after the initial copy.
// meta_off: losses summed at the current parameters, no inner step.
// lambda_zero: full method with lambda forced to 0. plain: adversarial
// training only, no language model at all.
enum class Ablation { none, cot_off, meta_off, lambda_zero, plain };
enum class Task { synthetic, corpus };

struct TrainConfig {
  Task task = Task::synthetic;
  std::uint64_t seed = 42;

  // synthetic task
  std::size_t vocab_size = 1000;
  std::size_t oracle_embed_dim = 32;
  std::size_t oracle_hidden_dim = 32;
  double oracle_scale = 1.0;
  std::uint64_t oracle_seed = 1234;
  std::size_t train_size = 10000;
  std::size_t test_size = 2000;

  // corpus task
  std::string corpus;
  std::string test_corpus;

  std::size_t seq_len = 20;

  // models
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  double init_scale = 0.1;
  std::size_t disc_embed_dim = 64;
  std::size_t disc_channels = 64;

  // pretraining
  std::size_t pretrain_epochs = 20;
  double pretrain_lr = 1e-2;
  std::size_t pretrain_batch_size = 64;

  // adversarial phase
  std::size_t adv_epochs = 100;
  std::size_t batch_size = 32;
  double alpha = 1e-2;   // inner step size
  double gen_lr = 1e-2;  // outer generator step size, equal to alpha by default
  double beta_d = 1e-3;
  double gamma = 1e-3;
  double lambda = 1.0;
  MetaMode meta_mode = MetaMode::second_order;
  Ablation ablation = Ablation::none;
  bool double_lambda = false;
  bool recompute_adv_grad = false;
  std::string gen_loss = "non_saturating";  // or "minimax"
  std::string kl_mode = "full";             // or "realized"
  std::size_t d_steps = 1;
  double beta_max = 100.0;
  std::string temperature_mode = "exponential";  // or "constant"
  double grad_clip = 0.0;

  // evaluation and logging
  std::size_t eval_every = 10;
  std::size_t eval_samples = 2000;
  std::size_t bleu_samples = 200;
  double lm_alarm_ratio = 1.1;
  bool log_wall_clock = false;

  // Sets one field from its textual value; throws ConfigError on unknown keys
  // or malformed values.
  void set(const std::string& key, const std::string& value);
  // Throws ConfigError when a constraint is violated.
  void validate() const;

  // Every field as key -> text, in a fixed order.
  std::map<std::string, std::string> to_map() const;
  nlohmann::ordered_json to_json() const;
  std::uint64_t hash() const;
};

// key = value lines, '#' starts a comment.
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
void apply_overrides(TrainConfig& cfg, const std::map<std::string, std::string>& kv);
TrainConfig config_from_json(const nlohmann::json& j);

std::string to_string(MetaMode m);
std::string to_string(Ablation a);
std::string to_string(Task t);
Ablation parse_ablation(const std::string& s);

}  // namespace coopgan
