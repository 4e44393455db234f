// Copyright 2026 The taskvec Authors. All Rights Reserved.
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

#include "taskvec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "taskvec/error.hpp"

#ifndef TASKVEC_REVISION
#define TASKVEC_REVISION "unknown"
#endif

namespace taskvec {

using nlohmann::json;

void TrainConfig::Validate() const {
  if (epochs < 1) ThrowUsage("train config: epochs must be >= 1");
  if (batch_size < 1) ThrowUsage("train config: batch_size must be >= 1");
  if (!(lr > 0.0)) ThrowUsage("train config: lr must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) ThrowUsage("train config: dropout must lie in [0, 1)");
  if (warmup_steps < 0) ThrowUsage("train config: warmup_steps must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    ThrowUsage("train config: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) ThrowUsage("train config: adam_eps must be > 0");
  if (partial_ratio < 0.0) ThrowUsage("train config: partial_ratio must be >= 0");
  if (!(uniform_fraction >= 0.0 && uniform_fraction <= 1.0))
    ThrowUsage("train config: uniform_fraction must be in [0, 1]");
  if (eval_every < 1) ThrowUsage("train config: eval_every must be >= 1");
  if (max_symbols_per_frame < 1) ThrowUsage("train config: max_symbols_per_frame must be >= 1");
  if (threads < 0) ThrowUsage("train config: threads must be >= 0");
}

ModelConfig TrainConfig::MakeModelConfig(int num_symbols, int input_dim) const {
  ModelConfig m;
  m.input_dim = input_dim;
  m.embed_dim = embed_dim;
  m.conv_strides = conv_strides;
  m.conv_kernel = conv_kernel;
  m.context_layers = context_layers;
  m.pred_hidden = pred_hidden;
  m.pred_context = pred_context;
  m.joint_dim = joint_dim;
  m.num_symbols = num_symbols;
  m.strategy = strategy;
  m.position = position;
  m.num_aux = kNumAuxTasks;
  m.seed = seed;
  m.Validate();
  return m;
}

#define TASKVEC_TRAIN_FIELDS(X)                                                          \
  X(epochs) X(batch_size) X(lr) X(warmup_steps) X(beta1) X(beta2) X(adam_eps) X(clip_norm) \
  X(seed) X(embed_dim) X(conv_strides) X(conv_kernel) X(context_layers) X(pred_hidden) X(pred_context) \
  X(joint_dim) X(dropout) X(use_partial) X(partial_ratio) X(uniform_fraction) X(eval_every) X(max_symbols_per_frame)      \
  X(threads)

void to_json(json &j, const TrainConfig &c) {
  j = json::object();
#define X(name) j[#name] = c.name;
  TASKVEC_TRAIN_FIELDS(X)
#undef X
  j["policy"] = ToString(c.policy);
  j["strategy"] = ToString(c.strategy);
  j["position"] = ToString(c.position);
}

void from_json(const json &j, TrainConfig &c) {
  if (!j.is_object()) ThrowUsage("train config must be a JSON object");
  static const std::set<std::string> known = {
#define X(name) #name,
      TASKVEC_TRAIN_FIELDS(X)
#undef X
      "policy", "strategy", "position"};
  for (const auto &[key, value] : j.items())
    if (!known.count(key)) ThrowUsage("train config: unknown key '" + key + "'");
  try {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
    TASKVEC_TRAIN_FIELDS(X)
#undef X
    if (j.contains("policy")) c.policy = ParsePolicy(j.at("policy").get<std::string>());
    if (j.contains("strategy")) c.strategy = ParseStrategy(j.at("strategy").get<std::string>());
    if (j.contains("position")) c.position = ParsePosition(j.at("position").get<std::string>());
  } catch (const json::exception &e) {
    ThrowUsage(std::string("train config: ") + e.what());
  }
}

void to_json(json &j, const RunManifest &m) {
  json epochs = json::array();
  for (const auto &e : m.epochs) {
    json r = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"seconds", e.seconds}};
    r["dev_wer"] = e.dev_wer ? json(*e.dev_wer) : json(nullptr);
    r["dev_scd_f1"] = e.dev_scd_f1 ? json(*e.dev_scd_f1) : json(nullptr);
    r["dev_endpoint_f1"] = e.dev_endpoint_f1 ? json(*e.dev_endpoint_f1) : json(nullptr);
    epochs.push_back(std::move(r));
  }
  j = json{{"config", m.config},
           {"corpus_hash", m.corpus_hash},
           {"revision", m.revision},
           {"num_parameters", m.num_parameters},
           {"epochs", std::move(epochs)},
           {"best_epoch", m.best_epoch},
           {"best_dev_wer", m.best_dev_wer},
           {"unavailable_task_tokens", m.unavailable_task_tokens}};
}

int SelectBestEpoch(std::span<const EpochRecord> epochs) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(epochs.size()); ++i) {
    if (!epochs[i].dev_wer) continue;
    if (best < 0 || *epochs[i].dev_wer < *epochs[best].dev_wer) best = i;
  }
  return best;
}

double LearningRate(const TrainConfig &c, int64_t step) {
  if (step < 1) step = 1;
  if (c.warmup_steps == 0) return c.lr;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(c.warmup_steps);
  return s <= w ? c.lr * s / w : c.lr * std::sqrt(w / s);
}

AdamOptimizer::AdamOptimizer(const TrainConfig &c, TransducerModel &model)
    : config_(c), model_(model) {
  for (const auto &p : model.Parameters()) {
    m_.push_back(ad::Matrix::Zero(p.value->rows(), p.value->cols()));
    v_.push_back(ad::Matrix::Zero(p.value->rows(), p.value->cols()));
  }
}

void AdamOptimizer::Step(const std::vector<ad::Matrix> &grads) {
  auto params = model_.Parameters();
  if (grads.size() != params.size()) ThrowRuntime("optimizer: gradient count mismatch");
  ++step_;
  const double lr = LearningRate(config_, step_);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    *params[i].value -= (lr * (m_[i].array() / c1) /
                         ((v_[i].array() / c2).sqrt() + config_.adam_eps))
                            .matrix();
  }
}

UtteranceGrad ComputeGradients(const TransducerModel &model, const ad::Matrix &frames,
                               TaskSet tasks, std::span<const int> targets, double dropout,
                               uint64_t dropout_seed) {
  ad::Tape tape;
  ModelGraph graph(model, tape, /*trainable=*/true);
  graph.SetDropout(dropout, dropout_seed);
  ad::Var enc = graph.Encode(frames, tasks);
  ad::Var loss = graph.Loss(enc, targets);
  tape.Backward(loss);
  return {tape.value(loss)(0, 0), graph.Gradients()};
}

int ResolveThreads(int requested, int work_items) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, std::min(n, work_items));
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers; results are written
// by index so the outcome does not depend on scheduling.
template <typename Fn>
void ParallelFor(int n, int threads, Fn &&fn) {
  threads = ResolveThreads(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : workers) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<std::vector<int>> DecodeUtterances(const TransducerModel &model,
                                               std::span<const AnnotatedUtterance> utts,
                                               TaskSet tasks, int beam, int max_symbols_per_frame,
                                               int threads) {
  std::vector<std::vector<int>> out(utts.size());
  ParallelFor(static_cast<int>(utts.size()), threads, [&](int i) {
    const ad::Matrix enc = model.Encode(ToMatrix(utts[i].frames), tasks);
    if (beam <= 1) {
      out[i] = GreedyDecode(model, enc, max_symbols_per_frame).tokens;
    } else {
      auto hyps = BeamDecode(model, enc, beam, max_symbols_per_frame);
      if (!hyps.empty()) out[i] = std::move(hyps.front().tokens);
    }
  });
  return out;
}

TrainResult Train(const TrainConfig &config, const CorpusFiles &corpus,
                  const std::filesystem::path &out_dir, const TrainLogger &log) {
  config.Validate();
  const TokenVocab vocab = TokenVocab::Build(corpus.corpus.codec);
  const auto &full = corpus.corpus.train_full;
  const auto &partial = corpus.corpus.train_partial;
  if (full.empty() && (partial.empty() || !config.use_partial))
    ThrowUsage("train: corpus has no training utterances");
  const int input_dim = !full.empty() ? full[0].frames.cols : partial[0].frames.cols;

  TransducerModel model(config.MakeModelConfig(vocab.num_symbols(), input_dim));
  AdamOptimizer opt(config, model);

  RunManifest manifest;
  manifest.config = config;
  manifest.corpus_hash = corpus.hash;
  manifest.revision = TASKVEC_REVISION;
  manifest.num_parameters = model.NumParameters();

  // Training pool: full split first, then partial.
  std::vector<AnnotatedUtterance> pool(full.begin(), full.end());
  if (config.use_partial) pool.insert(pool.end(), partial.begin(), partial.end());
  const size_t num_full = full.size();
  const size_t num_partial = pool.size() - num_full;
  const size_t partial_per_epoch =
      num_partial == 0 ? 0
                       : (num_full == 0 ? num_partial
                                        : static_cast<size_t>(std::llround(
                                              config.partial_ratio * static_cast<double>(num_full))));

  Rng order_rng(DeriveSeed(config.seed, 0x5EED0001));
  std::vector<size_t> partial_order(num_partial);
  std::iota(partial_order.begin(), partial_order.end(), num_full);
  std::shuffle(partial_order.begin(), partial_order.end(), order_rng);
  size_t partial_cursor = 0;

  std::optional<TransducerModel> best;
  const int threads = config.threads;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<size_t> order(num_full);
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t k = 0; k < partial_per_epoch; ++k) {
      if (partial_cursor == partial_order.size()) {
        std::shuffle(partial_order.begin(), partial_order.end(), order_rng);
        partial_cursor = 0;
      }
      order.push_back(partial_order[partial_cursor++]);
    }
    std::shuffle(order.begin(), order.end(), order_rng);

    double loss_sum = 0.0;
    size_t loss_count = 0;
    for (size_t b0 = 0, batch_index = 0; b0 < order.size(); b0 += config.batch_size, ++batch_index) {
      const size_t b1 = std::min(order.size(), b0 + static_cast<size_t>(config.batch_size));
      std::span<const size_t> idx(order.data() + b0, b1 - b0);
      Rng batch_rng(DeriveSeed(config.seed, (static_cast<uint64_t>(epoch) << 32) + batch_index));
      const Batch batch = MakeBatch(pool, idx, config.policy, batch_rng, vocab, config.uniform_fraction);
      for (int b = 0; b < batch.size(); ++b)
        manifest.unavailable_task_tokens +=
            IttCount(batch.targets[b], pool[idx[b]].available, vocab);

      std::vector<UtteranceGrad> results(batch.size());
      ParallelFor(batch.size(), threads, [&](int b) {
        results[b] = ComputeGradients(model, batch.Frames(b), batch.tasks[b], batch.targets[b],
                                      config.dropout,
                                      DeriveSeed(config.seed ^ 0xD20F, (static_cast<uint64_t>(epoch) << 32) +
                                                                        batch_index * 1024 + b));
      });

      std::vector<ad::Matrix> grads = std::move(results[0].grads);
      double batch_loss = results[0].loss;
      for (int b = 1; b < batch.size(); ++b) {
        batch_loss += results[b].loss;
        for (size_t i = 0; i < grads.size(); ++i) grads[i] += results[b].grads[i];
      }
      if (!std::isfinite(batch_loss))
        ThrowNumeric("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch_index));
      const double inv = 1.0 / batch.size();
      double norm2 = 0.0;
      for (auto &g : grads) {
        g *= inv;
        norm2 += g.squaredNorm();
      }
      if (!std::isfinite(norm2))
        ThrowNumeric("non-finite gradient at epoch " + std::to_string(epoch));
      const double norm = std::sqrt(norm2);
      if (config.clip_norm > 0.0 && norm > config.clip_norm)
        for (auto &g : grads) g *= config.clip_norm / norm;
      opt.Step(grads);
      loss_sum += batch_loss;
      loss_count += batch.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(std::max<size_t>(1, loss_count));
    if (!corpus.corpus.dev.empty() &&
        (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      const auto hyps = DecodeUtterances(model, corpus.corpus.dev, TaskSet::All(), 1,
                                         config.max_symbols_per_frame, threads);
      const MetricReport report = Evaluate(corpus.corpus.dev, hyps, TaskSet::All(), vocab);
      rec.dev_wer = report.MacroWer();
      rec.dev_scd_f1 = report.scd->f1();
      rec.dev_endpoint_f1 = report.endpoint->f1();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.epochs.push_back(rec);
    const int best_index = SelectBestEpoch(manifest.epochs);
    if (rec.dev_wer && best_index == static_cast<int>(manifest.epochs.size()) - 1) best = model;
    if (log) {
      char buf[160];
      if (rec.dev_wer) {
        std::snprintf(buf, sizeof(buf),
                      "epoch %3d  loss %.4f  dev_wer %.4f  scd_f1 %.3f  ep_f1 %.3f  (%.1fs)", epoch,
                      rec.train_loss, *rec.dev_wer, *rec.dev_scd_f1, *rec.dev_endpoint_f1,
                      rec.seconds);
      } else {
        std::snprintf(buf, sizeof(buf), "epoch %3d  loss %.4f  (%.1fs)", epoch, rec.train_loss,
                      rec.seconds);
      }
      log(buf);
    }
  }

  const int best_index = SelectBestEpoch(manifest.epochs);
  if (best_index >= 0) {
    manifest.best_epoch = manifest.epochs[best_index].epoch;
    manifest.best_dev_wer = *manifest.epochs[best_index].dev_wer;
  } else {
    manifest.best_epoch = config.epochs;
    best = model;
  }
  best->RoundToFloat();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    SaveCheckpoint(out_dir / "best.ckpt", *best, corpus.corpus.codec,
                   json{{"best_epoch", manifest.best_epoch},
                        {"corpus_hash", manifest.corpus_hash},
                        {"train_config", config}});
    WriteTextFile(out_dir / "run.json", json(manifest).dump(2) + "\n");
  }
  return {std::move(manifest), std::move(*best)};
}

}  // namespace taskvec
