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

#include "coopgan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "coopgan/errors.hpp"
#include "coopgan/oracle.hpp"
#include "coopgan/sampling.hpp"

namespace coopgan {

using ad::Node;

std::string to_string(Phase p) {
  switch (p) {
    case Phase::init: return "init";
    case Phase::pretrain: return "pretrain";
    case Phase::adversarial: return "adversarial";
  }
  return "init";
}

Phase parse_phase(const std::string& s) {
  for (auto p : {Phase::init, Phase::pretrain, Phase::adversarial})
    if (to_string(p) == s) return p;
  throw IoError("unknown phase '" + s + "'");
}

namespace {

void attach_bleu(TaskData& task) {
  if (!task.eos) return;
  std::vector<std::vector<int>> refs;
  refs.reserve(task.test.size());
  for (const auto& s : task.test) refs.push_back(metrics::content_tokens(s));
  for (int n = 2; n <= 5; ++n) task.bleu.push_back(std::make_shared<const metrics::BleuScorer>(refs, n));
}

bool finite_all(std::span<const Array> xs) {
  for (const auto& x : xs)
    if (!x.all_finite()) return false;
  return true;
}

std::vector<Array> values_of(std::span<const Node> nodes) {
  std::vector<Array> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.value());
  return out;
}

std::vector<Array> add_arrays(std::span<const Array> a, std::span<const Array> b, double b_scale) {
  std::vector<Array> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<double> v = a[i].vec();
    auto bd = b[i].data();
    if (b_scale == 1.0) {
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += bd[j];
    } else {
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += b_scale * bd[j];
    }
    out.emplace_back(a[i].shape(), std::move(v));
  }
  return out;
}

sampling::TemperatureSchedule schedule_of(const TrainConfig& cfg) {
  return {cfg.beta_max, cfg.adv_epochs,
          cfg.temperature_mode == "constant" ? sampling::ScheduleMode::constant : sampling::ScheduleMode::exponential};
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TaskData make_synthetic_task(const TrainConfig& cfg, OracleParams oracle_model) {
  TaskData task;
  Rng root(cfg.oracle_seed);
  task.train = oracle::oracle_corpus(oracle_model, cfg.train_size, cfg.seq_len, root.split("train").seed());
  task.test = oracle::oracle_corpus(oracle_model, cfg.test_size, cfg.seq_len, root.split("test").seed());
  task.vocab_size = oracle_model.shape.vocab;
  task.seq_len = cfg.seq_len;
  task.oracle = std::move(oracle_model);
  return task;
}

TaskData make_task(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.task == Task::synthetic) {
    return make_synthetic_task(cfg, oracle::make_oracle({cfg.vocab_size, cfg.oracle_embed_dim, cfg.oracle_hidden_dim,
                                                         cfg.oracle_scale, cfg.oracle_seed}));
  }
  TaskData task;
  auto train = data::load_corpus(cfg.corpus, std::nullopt, cfg.seq_len);
  task.vocab = train.vocab;
  task.train = std::move(train.sequences);
  if (!cfg.test_corpus.empty()) {
    task.test = data::load_corpus(cfg.test_corpus, task.vocab, cfg.seq_len).sequences;
  } else {
    // Hold out the last tenth of the training file.
    if (task.train.size() < 2) throw InputError("corpus needs at least two sentences to hold out a test split");
    const std::size_t held = std::max<std::size_t>(1, task.train.size() / 10);
    task.test.assign(task.train.end() - static_cast<std::ptrdiff_t>(held), task.train.end());
    task.train.resize(task.train.size() - held);
  }
  task.vocab_size = task.vocab->size();
  task.seq_len = cfg.seq_len;
  task.eos = data::kEos;
  attach_bleu(task);
  return task;
}

SeqModelShape generator_shape(const TrainConfig& cfg, std::size_t vocab_size) {
  return {vocab_size, cfg.embed_dim, cfg.hidden_dim};
}

DiscShape disc_shape(const TrainConfig& cfg, std::size_t vocab_size) {
  return {vocab_size, cfg.disc_embed_dim, cfg.disc_channels, 3, 3};
}

TrainState init_state(const TrainConfig& cfg, std::size_t vocab_size) {
  Rng root(cfg.seed);
  Rng g = root.split("generator");
  Rng d = root.split("discriminator");
  TrainState s;
  s.generator = SeqModel::random(generator_shape(cfg, vocab_size), g, cfg.init_scale);
  s.lm = s.generator;
  s.disc = Discriminator::random(disc_shape(cfg, vocab_size), d);
  return s;
}

Streams make_streams(const TrainConfig& cfg, std::size_t corpus_size, std::size_t start_epoch) {
  Rng base = Rng(cfg.seed).split("adversarial@" + std::to_string(start_epoch));
  return Streams{data::BatchStream(corpus_size, cfg.batch_size, base.split("real"), true),
                 data::BatchStream(corpus_size, cfg.batch_size, base.split("meta"), true), base.split("gen"),
                 base.split("lm"), base.split("disc")};
}

InnerStep inner_update(std::span<const Node> theta, const Node& adv_g_loss, double alpha, MetaMode mode) {
  const bool second = mode == MetaMode::second_order;
  InnerStep out;
  out.adv_grad = ad::backward(adv_g_loss, theta, /*create_graph=*/second);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!out.adv_grad[i].value().all_finite()) throw NumericError("inner update: non-finite adversarial gradient");
  }
  out.differentiable = second;
  out.theta_prime.reserve(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (second) {
      out.theta_prime.push_back(ad::sub(theta[i], ad::scale(out.adv_grad[i], alpha)));
    } else {
      ad::NoGradGuard guard;
      Node step = ad::sub(Node::constant(theta[i].value()), ad::scale(Node::constant(out.adv_grad[i].value()), alpha));
      out.theta_prime.push_back(Node::parameter(step.value()));
    }
  }
  return out;
}

std::vector<Array> meta_gradient(std::span<const Node> theta, const InnerStep& inner, const CotLoss& cot,
                                 double lambda, MetaMode mode) {
  if (inner.theta_prime.size() != theta.size()) throw ShapeError("meta gradient: parameter count mismatch");
  const bool second = mode == MetaMode::second_order;
  if (second && !inner.differentiable) {
    throw InputError("meta gradient: second-order mode needs an inner step built with create_graph");
  }
  Node loss = ad::scale(cot(inner.theta_prime), lambda);
  auto grads = second ? ad::backward(loss, theta) : ad::backward(loss, inner.theta_prime);
  auto out = values_of(grads);
  if (!finite_all(out)) throw NumericError("meta gradient: non-finite values");
  return out;
}

namespace {

metrics::MetricsRecord base_record(const TrainState& state, const TrainConfig& cfg) {
  metrics::MetricsRecord r;
  r.seed = cfg.seed;
  r.tag = to_string(cfg.ablation);
  r.phase = state.phase == Phase::adversarial ? "adversarial" : "pretrain";
  r.epoch = state.phase == Phase::adversarial ? state.epoch : state.pretrain_epoch;
  return r;
}

}  // namespace

metrics::MetricsRecord evaluate(const TrainState& state, const TrainConfig& cfg, const TaskData& task) {
  auto r = base_record(state, cfg);
  r.nll_gen = metrics::nll_gen(state.generator, task.test);
  if (task.oracle) {
    Rng rng = Rng(cfg.seed).split("eval");
    auto samples = sampling::generate_hard(state.generator, cfg.eval_samples, task.seq_len, rng);
    r.nll_oracle = oracle::nll_oracle(*task.oracle, samples, task.seq_len);
  }
  if (state.phase == Phase::adversarial && cfg.ablation != Ablation::plain) {
    r.nll_lm = metrics::mean_token_nll(state.lm, task.test);
  }
  if (!task.bleu.empty() && cfg.bleu_samples > 0) {
    Rng rng = Rng(cfg.seed).split("bleu");
    auto samples = sampling::generate_hard(state.generator, cfg.bleu_samples, task.seq_len, rng, task.eos);
    std::vector<std::vector<int>> hyps;
    for (const auto& s : samples) hyps.push_back(metrics::content_tokens(s));
    std::optional<double>* slots[] = {&r.bleu_2, &r.bleu_3, &r.bleu_4, &r.bleu_5};
    for (std::size_t i = 0; i < task.bleu.size() && i < 4; ++i) *slots[i] = task.bleu[i]->corpus(hyps);
  }
  return r;
}

void pretrain(TrainState& state, const TrainConfig& cfg, const TaskData& task, const RecordSink& sink) {
  if (task.train.empty()) throw InputError("pretrain: empty corpus");
  if (state.phase == Phase::adversarial) throw InputError("pretrain: state is already in the adversarial phase");
  state.phase = Phase::pretrain;
  const auto t0 = std::chrono::steady_clock::now();
  auto emit = [&](metrics::MetricsRecord r) {
    if (cfg.log_wall_clock) r.wall_clock_sec = elapsed_since(t0);
    if (sink) sink(r);
  };
  data::BatchStream stream(task.train.size(), cfg.pretrain_batch_size, Rng(cfg.seed).split("pretrain"), true);
  for (std::size_t e = 0; e < state.pretrain_epoch; ++e) stream.epoch();
  if (state.pretrain_epoch == 0) emit(evaluate(state, cfg, task));
  const Adam opt{cfg.pretrain_lr};
  while (state.pretrain_epoch < cfg.pretrain_epochs) {
    for (const auto& idx : stream.epoch()) {
      auto batch = data::gather(task.train, idx);
      auto theta = state.generator.params.as_parameters();
      Node loss = seq::nll_loss(theta, state.generator.shape, batch);
      auto grads = values_of(ad::backward(loss, theta));
      if (!std::isfinite(loss.value().item()) || !finite_all(grads)) {
        throw NumericError("pretrain: non-finite loss or gradient at epoch " + std::to_string(state.pretrain_epoch));
      }
      state.generator.params = opt.step(state.generator.params, grads, state.gen_opt);
    }
    ++state.pretrain_epoch;
    emit(evaluate(state, cfg, task));
  }
}

void begin_adversarial(TrainState& state, const TrainConfig& /*cfg*/, const TaskData& task) {
  if (state.phase == Phase::adversarial) throw InputError("begin_adversarial: already in the adversarial phase");
  copy_weights(state.generator, state.lm);
  state.phase = Phase::adversarial;
  state.epoch = 0;
  state.gen_opt = {};
  state.disc_opt = {};
  state.lm_opt = {};
  state.lm_reference = metrics::mean_token_nll(state.lm, task.test);
}

StepResult train_step(TrainState& state, Streams& streams, const TrainConfig& cfg, const TaskData& task) {
  if (state.phase != Phase::adversarial) throw InputError("train_step: state is not in the adversarial phase");
  const SeqModelShape gshape = state.generator.shape;
  const DiscShape dshape = state.disc.shape;
  const bool cooperative = cfg.ablation != Ablation::plain;
  const bool lm_learns = cooperative && cfg.ablation != Ablation::cot_off;
  const bool summed = cfg.ablation == Ablation::meta_off;
  const double lambda = cfg.ablation == Ablation::lambda_zero ? 0.0 : cfg.lambda;
  const auto form = cfg.gen_loss == "minimax" ? losses::GenLossForm::minimax : losses::GenLossForm::non_saturating;
  const auto kl = cfg.kl_mode == "realized" ? losses::KlMode::realized : losses::KlMode::full;
  const double beta = schedule_of(cfg).at(state.epoch);
  const std::size_t T = task.seq_len;

  StepResult res;
  auto skip = [&](const std::string& why) {
    ++state.skipped;
    ++state.consecutive_skips;
    if (state.consecutive_skips >= 3) {
      throw NumericError("training aborted after 3 consecutive skipped steps at epoch " +
                         std::to_string(state.epoch) + ": " + why);
    }
    std::cerr << "warning: skipped step at epoch " << state.epoch << ": " << why << "\n";
    res.skipped = true;
    res.reason = why;
    return res;
  };

  AdamState gen_opt = state.gen_opt, disc_opt = state.disc_opt, lm_opt = state.lm_opt;
  ParamSet theta_next, phi_next, psi_next;
  try {
    auto real = data::gather(task.train, streams.real.next());
    const std::size_t B = real.size();
    auto theta = state.generator.params.as_parameters();
    auto phi = state.disc.params.as_parameters();

    auto fake = sampling::generate_soft(theta, gshape, B, T, beta, streams.gen);
    auto adv = losses::adv_losses(disc::forward_tokens(phi, dshape, real), disc::forward_rows(phi, dshape, fake.rows),
                                  form);
    res.losses.adv_g = adv.g.value().item();
    res.losses.adv_d = adv.d.value().item();
    if (!std::isfinite(res.losses.adv_g) || !std::isfinite(res.losses.adv_d)) return skip("non-finite adversarial loss");

    auto g_phi = values_of(ad::backward(adv.d, phi));

    std::vector<Array> g_theta;
    if (!cooperative || summed) {
      g_theta = values_of(ad::backward(adv.g, theta));
      if (!finite_all(g_theta)) return skip("non-finite adversarial gradient");
      if (summed) {
        auto meta_real = data::gather(task.train, streams.meta.next());
        auto lm_dists = conditional_dists(state.lm, meta_real);
        Node cot = losses::kl_distill_loss(lm_dists, seq::teacher_forced_logits(theta, gshape, meta_real), meta_real, kl);
        res.losses.cot_theta = cot.value().item();
        res.has_cot_theta = true;
        auto g_cot = values_of(ad::backward(ad::scale(cot, lambda), theta));
        g_theta = add_arrays(g_theta, g_cot, 1.0);
      }
    } else {
      auto inner = inner_update(theta, adv.g, cfg.alpha, cfg.meta_mode);
      auto meta_real = data::gather(task.train, streams.meta.next());
      auto lm_dists = conditional_dists(state.lm, meta_real);
      double cot_value = 0.0;
      CotLoss cot = [&](std::span<const Node> tp) {
        Node l = losses::kl_distill_loss(lm_dists, seq::teacher_forced_logits(tp, gshape, meta_real), meta_real, kl);
        cot_value = l.value().item();
        return l;
      };
      auto g_m = meta_gradient(theta, inner, cot, lambda, cfg.meta_mode);
      res.losses.cot_theta = cot_value;
      res.has_cot_theta = true;
      std::vector<Array> base;
      if (cfg.recompute_adv_grad) {
        auto again = sampling::generate_soft(theta, gshape, B, T, beta, streams.gen);
        auto adv2 = losses::adv_losses(disc::forward_tokens(phi, dshape, real),
                                       disc::forward_rows(phi, dshape, again.rows), form);
        base = values_of(ad::backward(adv2.g, theta));
      } else {
        base = values_of(inner.adv_grad);
      }
      g_theta = add_arrays(base, g_m, cfg.double_lambda ? lambda : 1.0);
    }
    g_theta = clip_by_global_norm(std::move(g_theta), cfg.grad_clip);
    if (!finite_all(g_theta) || !finite_all(g_phi)) return skip("non-finite gradient");

    theta_next = Adam{cfg.gen_lr}.step(state.generator.params, g_theta, gen_opt);
    const Adam d_opt{cfg.beta_d};
    phi_next = d_opt.step(state.disc.params, g_phi, disc_opt);
    for (std::size_t k = 1; k < cfg.d_steps; ++k) {
      auto real_k = data::gather(task.train, streams.real.next());
      auto theta_c = state.generator.params.as_constants();
      auto fake_k = sampling::generate_soft(theta_c, gshape, real_k.size(), T, beta, streams.disc);
      auto phi_k = phi_next.as_parameters();
      auto adv_k = losses::adv_losses(disc::forward_tokens(phi_k, dshape, real_k),
                                      disc::forward_rows(phi_k, dshape, fake_k.rows), form);
      auto g_k = values_of(ad::backward(adv_k.d, phi_k));
      if (!finite_all(g_k)) return skip("non-finite discriminator gradient");
      phi_next = d_opt.step(phi_next, g_k, disc_opt);
    }

    if (lm_learns) {
      const std::size_t half = std::max<std::size_t>(1, B / 2);
      std::vector<data::TokenSequence> lm_real(real.begin(), real.begin() + static_cast<std::ptrdiff_t>(half));
      auto lm_fake = sampling::generate_hard(state.generator, half, T, streams.lm, task.eos);
      auto psi = state.lm.params.as_parameters();
      Node loss = losses::lm_mixture_loss(psi, state.lm.shape, lm_real, lm_fake);
      res.losses.cot_psi = loss.value().item();
      res.has_cot_psi = true;
      auto g_psi = values_of(ad::backward(loss, psi));
      if (!std::isfinite(res.losses.cot_psi) || !finite_all(g_psi)) return skip("non-finite language model loss");
      psi_next = Adam{cfg.gamma}.step(state.lm.params, g_psi, lm_opt);
    }
  } catch (const NumericError& e) {
    return skip(e.what());
  }

  state.generator.params = std::move(theta_next);
  state.disc.params = std::move(phi_next);
  state.gen_opt = std::move(gen_opt);
  state.disc_opt = std::move(disc_opt);
  if (lm_learns) {
    state.lm.params = std::move(psi_next);
    state.lm_opt = std::move(lm_opt);
  }
  ++state.epoch;
  state.consecutive_skips = 0;
  return res;
}

void run_adversarial(TrainState& state, const TrainConfig& cfg, const TaskData& task, const RunHooks& hooks) {
  if (state.phase != Phase::adversarial) begin_adversarial(state, cfg, task);
  const auto t0 = std::chrono::steady_clock::now();
  const auto sched = schedule_of(cfg);
  auto emit = [&](metrics::MetricsRecord r) {
    if (cfg.log_wall_clock) r.wall_clock_sec = elapsed_since(t0);
    if (hooks.on_record) hooks.on_record(r);
  };
  auto check_alarm = [&](const metrics::MetricsRecord& r) {
    if (r.nll_lm && state.lm_reference && *r.nll_lm > cfg.lm_alarm_ratio * *state.lm_reference) {
      std::cerr << "warning: language model held-out NLL " << *r.nll_lm << " exceeds " << cfg.lm_alarm_ratio
                << " x its pretraining value " << *state.lm_reference << " at epoch " << r.epoch << "\n";
    }
  };
  Streams streams = make_streams(cfg, task.train.size(), state.epoch);
  if (state.epoch == 0) {
    auto r = evaluate(state, cfg, task);
    r.temperature = sched.at(0);
    emit(r);
  }
  while (state.epoch < cfg.adv_epochs) {
    const double beta = sched.at(state.epoch);
    auto res = train_step(state, streams, cfg, task);
    if (res.skipped) continue;
    const bool eval_now = state.epoch % cfg.eval_every == 0 || state.epoch == cfg.adv_epochs;
    auto r = eval_now ? evaluate(state, cfg, task) : base_record(state, cfg);
    r.temperature = beta;
    r.adv_g = res.losses.adv_g;
    r.adv_d = res.losses.adv_d;
    if (res.has_cot_theta) r.cot_theta = res.losses.cot_theta;
    if (res.has_cot_psi) r.cot_psi = res.losses.cot_psi;
    if (eval_now) check_alarm(r);
    emit(r);
    if (eval_now && hooks.on_checkpoint) hooks.on_checkpoint(state);
  }
}

}  // namespace coopgan
