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

// Command-line front end: pretrain, train, eval and generate.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 training aborted on
// numeric failure, 1 anything else.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coopgan/checkpoint.hpp"
#include "coopgan/config.hpp"
#include "coopgan/errors.hpp"
#include "coopgan/metrics.hpp"
#include "coopgan/oracle.hpp"
#include "coopgan/sampling.hpp"
#include "coopgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace coopgan;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string run_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--run-dir", o.run_dir, "output directory (default: $COOPGAN_RUN_ROOT/<hash>-<time>)");
}

std::map<std::string, std::string> parse_sets(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

// Precedence: command-line flags, then the config file, then `base`.
TrainConfig resolve(const CommonOptions& o, TrainConfig base, const std::map<std::string, std::string>& flags) {
  if (!o.config_file.empty()) base = load_config(o.config_file, base);
  apply_overrides(base, parse_sets(o.sets));
  apply_overrides(base, flags);
  if (o.seed) base.seed = *o.seed;
  base.validate();
  return base;
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

fs::path make_run_dir(const CommonOptions& o, const TrainConfig& cfg, const std::string& kind) {
  fs::path dir;
  if (!o.run_dir.empty()) {
    dir = o.run_dir;
  } else {
    const char* root = std::getenv("COOPGAN_RUN_ROOT");
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::gmtime(&now));
    dir = fs::path(root && *root ? root : "runs") / (kind + "-" + hex(cfg.hash()) + "-" + stamp);
  }
  fs::create_directories(dir);
  return dir;
}

nlohmann::ordered_json run_header(const TrainConfig& cfg, const std::string& command) {
  nlohmann::ordered_json h;
  h["command"] = command;
  h["config_hash"] = hex(cfg.hash());
  h["config"] = cfg.to_json();
  return h;
}

void check_state_matches(const TrainState& s, const TrainConfig& cfg, std::size_t vocab_size) {
  if (!(s.generator.shape == generator_shape(cfg, vocab_size)) || !(s.disc.shape == disc_shape(cfg, vocab_size))) {
    throw ConfigError("checkpoint model sizes do not match the resolved config");
  }
}

void print_record(const metrics::MetricsRecord& r) { std::cout << metrics::to_json(r).dump() << std::endl; }

// --- subcommands ------------------------------------------------------------------

struct PretrainArgs {
  CommonOptions common;
  std::string corpus;
  std::string test_corpus;
  std::string out;
};

int cmd_pretrain(const PretrainArgs& a) {
  std::map<std::string, std::string> flags;
  if (!a.corpus.empty()) {
    flags["task"] = "corpus";
    flags["corpus"] = a.corpus;
  }
  if (!a.test_corpus.empty()) flags["test_corpus"] = a.test_corpus;
  TrainConfig cfg = resolve(a.common, {}, flags);
  TaskData task = make_task(cfg);
  fs::path dir = make_run_dir(a.common, cfg, "pretrain");
  metrics::MetricsLog log(dir / "metrics.jsonl", run_header(cfg, "pretrain"));
  TrainState state = init_state(cfg, task.vocab_size);
  pretrain(state, cfg, task, [&](const metrics::MetricsRecord& r) {
    log.write(r);
    print_record(r);
  });
  fs::path out = a.out.empty() ? dir / "pretrain.ckpt" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(out, cfg, state, task.vocab);
  if (task.vocab) task.vocab->save(dir / "vocab.txt");
  std::cerr << "checkpoint: " << out.string() << "\nmetrics: " << log.path().string() << "\n";
  return 0;
}

struct TrainArgs {
  CommonOptions common;
  std::string checkpoint;
  std::string ablation;
};

int cmd_train(const TrainArgs& a) {
  if (!fs::exists(a.checkpoint)) throw ConfigError("checkpoint not found: " + a.checkpoint);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  std::map<std::string, std::string> flags;
  if (!a.ablation.empty()) flags["ablation"] = to_string(parse_ablation(a.ablation));
  TrainConfig cfg = resolve(a.common, ck.config, flags);
  TaskData task = make_task(cfg);
  if (ck.vocab && task.vocab && ck.vocab->fingerprint() != task.vocab->fingerprint()) {
    throw ConfigError("checkpoint vocabulary does not match the corpus vocabulary");
  }
  check_state_matches(ck.state, cfg, task.vocab_size);
  fs::path dir = make_run_dir(a.common, cfg, "train-" + to_string(cfg.ablation));
  metrics::MetricsLog log(dir / "metrics.jsonl", run_header(cfg, "train"));
  TrainState state = std::move(ck.state);
  RunHooks hooks;
  hooks.on_record = [&](const metrics::MetricsRecord& r) {
    log.write(r);
    if (r.nll_gen) print_record(r);
  };
  hooks.on_checkpoint = [&](const TrainState& s) {
    save_checkpoint(dir / ("adv-" + std::to_string(s.epoch) + ".ckpt"), cfg, s, task.vocab);
  };
  run_adversarial(state, cfg, task, hooks);
  save_checkpoint(dir / "final.ckpt", cfg, state, task.vocab);
  std::cerr << "run directory: " << dir.string() << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string test_corpus;
  std::optional<std::uint64_t> oracle_seed;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> eval_samples;
  std::string vocab;
  std::string metrics_out;
};

int cmd_eval(const EvalArgs& a) {
  if (!fs::exists(a.checkpoint)) throw ConfigError("checkpoint not found: " + a.checkpoint);
  Checkpoint ck = load_checkpoint(a.checkpoint);
  TrainConfig cfg = ck.config;
  if (a.seed) cfg.seed = *a.seed;
  if (a.eval_samples) cfg.eval_samples = *a.eval_samples;
  if (a.oracle_seed) cfg.oracle_seed = *a.oracle_seed;
  if (!a.vocab.empty()) {
    auto v = data::Vocab::load(a.vocab);
    if (!ck.vocab || v.fingerprint() != ck.vocab->fingerprint()) {
      throw ConfigError("vocabulary " + a.vocab + " does not match the checkpoint");
    }
  }
  TaskData task;
  if (!a.test_corpus.empty()) {
    task.seq_len = cfg.seq_len;
    if (ck.vocab) {
      task.vocab = ck.vocab;
      task.vocab_size = ck.vocab->size();
      task.test = data::load_corpus(a.test_corpus, ck.vocab, cfg.seq_len).sequences;
      task.eos = data::kEos;
      std::vector<std::vector<int>> refs;
      for (const auto& s : task.test) refs.push_back(metrics::content_tokens(s));
      for (int n = 2; n <= 5; ++n) task.bleu.push_back(std::make_shared<const metrics::BleuScorer>(refs, n));
    } else {
      task.vocab_size = ck.state.generator.shape.vocab;
      task.test = data::load_index_corpus(a.test_corpus);
      validate_batch(ck.state.generator.shape, task.test);
    }
  } else if (cfg.task == Task::synthetic) {
    task = make_synthetic_task(cfg, oracle::make_oracle({cfg.vocab_size, cfg.oracle_embed_dim,
                                                         cfg.oracle_hidden_dim, cfg.oracle_scale, cfg.oracle_seed}));
  } else {
    task = make_task(cfg);
  }
  check_state_matches(ck.state, cfg, task.vocab_size ? task.vocab_size : ck.state.generator.shape.vocab);
  auto r = evaluate(ck.state, cfg, task);
  print_record(r);
  if (!a.metrics_out.empty()) {
    std::ofstream out(a.metrics_out, std::ios::app);
    if (!out) throw IoError("cannot open " + a.metrics_out);
    metrics::log_record(r, out);
  }
  return 0;
}

struct GenerateArgs {
  std::string checkpoint;
  std::size_t n = 10;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  if (!fs::exists(a.checkpoint)) throw ConfigError("checkpoint not found: " + a.checkpoint);
  if (!(a.temperature > 0.0)) throw ConfigError("--temperature must be positive");
  Checkpoint ck = load_checkpoint(a.checkpoint);
  Rng rng = Rng(a.seed).split("generate");
  std::optional<int> eos;
  if (ck.vocab) eos = data::kEos;
  auto samples =
      sampling::generate_hard(ck.state.generator, a.n, ck.config.seq_len, rng, eos, 500, 1.0 / a.temperature);
  for (const auto& s : samples) {
    if (ck.vocab) {
      std::cout << data::decode(*ck.vocab, s) << "\n";
    } else {
      for (std::size_t t = 0; t < s.length; ++t) std::cout << (t ? " " : "") << s.ids[t];
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative adversarial text generation trainer"};
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* p = app.add_subcommand("pretrain", "MLE pretraining of the generator");
  add_common(p, pre.common);
  p->add_option("--corpus", pre.corpus, "training corpus, one sentence per line (default: synthetic oracle)");
  p->add_option("--test-corpus", pre.test_corpus, "held-out corpus");
  p->add_option("--out", pre.out, "checkpoint path");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "adversarial phase from a pretrained checkpoint");
  add_common(t, tr.common);
  t->add_option("--from-checkpoint", tr.checkpoint, "pretrained checkpoint")->required();
  t->add_option("--ablation", tr.ablation, "none | cot-off | meta-off | lambda-zero | plain");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "held-out metrics for a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint")->required();
  auto* tc = e->add_option("--test-corpus", ev.test_corpus, "test corpus (text, or token ids for synthetic runs)");
  e->add_option("--oracle-seed", ev.oracle_seed, "regenerate the synthetic oracle from this seed")->excludes(tc);
  e->add_option("--seed", ev.seed, "sampling seed");
  e->add_option("--eval-samples", ev.eval_samples, "generated samples scored by the oracle");
  e->add_option("--vocab", ev.vocab, "vocabulary file that must match the checkpoint");
  e->add_option("--metrics", ev.metrics_out, "append the record to this JSONL file");

  GenerateArgs ge;
  auto* g = app.add_subcommand("generate", "sample sentences from a checkpoint");
  g->add_option("--checkpoint", ge.checkpoint, "checkpoint")->required();
  g->add_option("--n", ge.n, "number of sentences");
  g->add_option("--temperature", ge.temperature, "sampling temperature");
  g->add_option("--seed", ge.seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*p) return cmd_pretrain(pre);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*g) return cmd_generate(ge);
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& err) {
    // ConfigError, InputError and ShapeError.
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
