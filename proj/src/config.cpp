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

#include "coopgan/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "coopgan/errors.hpp"
#include "coopgan/rng.hpp"

namespace coopgan {

std::string to_string(MetaMode m) { return m == MetaMode::second_order ? "second_order" : "first_order"; }

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::cot_off: return "cot-off";
    case Ablation::meta_off: return "meta-off";
    case Ablation::lambda_zero: return "lambda-zero";
    case Ablation::plain: return "plain";
  }
  return "none";
}

std::string to_string(Task t) { return t == Task::synthetic ? "synthetic" : "corpus"; }

Ablation parse_ablation(const std::string& s) {
  for (auto a : {Ablation::none, Ablation::cot_off, Ablation::meta_off, Ablation::lambda_zero, Ablation::plain}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown ablation '" + s + "' (expected none, cot-off, meta-off, lambda-zero or plain)");
}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Calls f(name, field) for every field in declaration order.
template <typename Cfg, typename F>
void for_each_field(Cfg& c, F&& f) {
  f("task", c.task);
  f("seed", c.seed);
  f("vocab_size", c.vocab_size);
  f("oracle_embed_dim", c.oracle_embed_dim);
  f("oracle_hidden_dim", c.oracle_hidden_dim);
  f("oracle_scale", c.oracle_scale);
  f("oracle_seed", c.oracle_seed);
  f("train_size", c.train_size);
  f("test_size", c.test_size);
  f("corpus", c.corpus);
  f("test_corpus", c.test_corpus);
  f("seq_len", c.seq_len);
  f("embed_dim", c.embed_dim);
  f("hidden_dim", c.hidden_dim);
  f("init_scale", c.init_scale);
  f("disc_embed_dim", c.disc_embed_dim);
  f("disc_channels", c.disc_channels);
  f("pretrain_epochs", c.pretrain_epochs);
  f("pretrain_lr", c.pretrain_lr);
  f("pretrain_batch_size", c.pretrain_batch_size);
  f("adv_epochs", c.adv_epochs);
  f("batch_size", c.batch_size);
  f("alpha", c.alpha);
  f("gen_lr", c.gen_lr);
  f("beta_d", c.beta_d);
  f("gamma", c.gamma);
  f("lambda", c.lambda);
  f("meta_mode", c.meta_mode);
  f("ablation", c.ablation);
  f("double_lambda", c.double_lambda);
  f("recompute_adv_grad", c.recompute_adv_grad);
  f("gen_loss", c.gen_loss);
  f("kl_mode", c.kl_mode);
  f("d_steps", c.d_steps);
  f("beta_max", c.beta_max);
  f("temperature_mode", c.temperature_mode);
  f("grad_clip", c.grad_clip);
  f("eval_every", c.eval_every);
  f("eval_samples", c.eval_samples);
  f("bleu_samples", c.bleu_samples);
  f("lm_alarm_ratio", c.lm_alarm_ratio);
  f("log_wall_clock", c.log_wall_clock);
}

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed fields share the size_t parser");

struct Setter {
  const std::string& key;
  const std::string& value;
  bool found = false;

  void assign(std::size_t& f) { f = parse_unsigned<std::size_t>(key, value); }
  void assign(double& f) { f = parse_double(key, value); }
  void assign(bool& f) { f = parse_bool(key, value); }
  void assign(std::string& f) { f = value; }
  void assign(Ablation& f) { f = parse_ablation(value); }
  void assign(MetaMode& f) {
    if (value == "second_order") {
      f = MetaMode::second_order;
    } else if (value == "first_order") {
      f = MetaMode::first_order;
    } else {
      throw ConfigError("meta_mode: expected second_order or first_order, got '" + value + "'");
    }
  }
  void assign(Task& f) {
    if (value == "synthetic") {
      f = Task::synthetic;
    } else if (value == "corpus") {
      f = Task::corpus;
    } else {
      throw ConfigError("task: expected synthetic or corpus, got '" + value + "'");
    }
  }

  template <typename T>
  void operator()(const char* name, T& field) {
    if (key != name) return;
    assign(field);
    found = true;
  }
};

std::string text(std::size_t v) { return std::to_string(v); }
std::string text(double v) { return format_double(v); }
std::string text(bool v) { return v ? "true" : "false"; }
std::string text(const std::string& v) { return v; }
std::string text(Ablation v) { return to_string(v); }
std::string text(MetaMode v) { return to_string(v); }
std::string text(Task v) { return to_string(v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  Setter s{key, value};
  for_each_field(*this, s);
  if (!s.found) throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  auto at_least_one = [](const char* name, std::size_t v) {
    if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
  };
  positive("alpha", alpha);
  positive("gen_lr", gen_lr);
  positive("beta_d", beta_d);
  positive("gamma", gamma);
  positive("pretrain_lr", pretrain_lr);
  positive("beta_max", beta_max);
  positive("lm_alarm_ratio", lm_alarm_ratio);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative");
  if (!(init_scale >= 0.0) || !(oracle_scale >= 0.0)) throw ConfigError("init scales must be non-negative");
  if (!(grad_clip >= 0.0)) throw ConfigError("grad_clip must be non-negative");
  at_least_one("seq_len", seq_len);
  at_least_one("embed_dim", embed_dim);
  at_least_one("hidden_dim", hidden_dim);
  at_least_one("disc_embed_dim", disc_embed_dim);
  at_least_one("disc_channels", disc_channels);
  at_least_one("batch_size", batch_size);
  at_least_one("pretrain_batch_size", pretrain_batch_size);
  at_least_one("d_steps", d_steps);
  at_least_one("eval_every", eval_every);
  at_least_one("eval_samples", eval_samples);
  if (gen_loss != "non_saturating" && gen_loss != "minimax") {
    throw ConfigError("gen_loss must be non_saturating or minimax");
  }
  if (kl_mode != "full" && kl_mode != "realized") throw ConfigError("kl_mode must be full or realized");
  if (temperature_mode != "exponential" && temperature_mode != "constant") {
    throw ConfigError("temperature_mode must be exponential or constant");
  }
  if (task == Task::synthetic) {
    if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
    at_least_one("train_size", train_size);
    at_least_one("test_size", test_size);
    at_least_one("oracle_embed_dim", oracle_embed_dim);
    at_least_one("oracle_hidden_dim", oracle_hidden_dim);
  } else if (corpus.empty()) {
    throw ConfigError("corpus task needs a corpus path");
  }
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> out;
  for_each_field(*this, [&](const char* name, const auto& field) { out[name] = text(field); });
  return out;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  for_each_field(*this, [&](const char* name, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, Ablation> || std::is_same_v<T, MetaMode> || std::is_same_v<T, Task>) {
      j[name] = to_string(field);
    } else {
      j[name] = field;
    }
  });
  return j;
}

std::uint64_t TrainConfig::hash() const {
  std::string canonical;
  for (const auto& [k, v] : to_map()) canonical += k + "=" + v + "\n";
  return fnv1a64(canonical);
}

void apply_overrides(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) cfg.set(k, v);
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    std::string s;
    if (v.is_string()) {
      s = v.get<std::string>();
    } else if (v.is_boolean()) {
      s = v.get<bool>() ? "true" : "false";
    } else if (v.is_number_unsigned()) {
      s = std::to_string(v.get<std::uint64_t>());
    } else if (v.is_number_integer()) {
      s = std::to_string(v.get<std::int64_t>());
    } else {
      s = format_double(v.get<double>());
    }
    cfg.set(it.key(), s);
  }
  return cfg;
}

}  // namespace coopgan
