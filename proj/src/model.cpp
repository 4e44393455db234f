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

#include "taskvec/model.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "taskvec/error.hpp"

namespace taskvec {

namespace {

ad::Matrix UniformInit(int rows, int cols, int fan_in, std::mt19937_64 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

ad::RowVector LogSoftmax(const ad::RowVector &logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return (logits.array() - lse).matrix();
}

void CheckTargets(std::span<const int> targets, int blank) {
  for (int y : targets) {
    if (y == blank) ThrowRuntime("transducer target contains the blank symbol");
    if (y < 0 || y > blank) ThrowRuntime("transducer target id out of range");
  }
}

}  // namespace

int ModelConfig::downsampling() const {
  int s = 1;
  for (int stride : conv_strides) s *= stride;
  return s;
}

int ModelConfig::EncodedLength(int input_frames) const {
  int t = input_frames;
  for (int stride : conv_strides) t = (t + stride - 1) / stride;
  return t;
}

void ModelConfig::Validate() const {
  if (input_dim < 1) ThrowUsage("model: input_dim must be >= 1");
  if (embed_dim < 1) ThrowUsage("model: embed_dim must be >= 1");
  if (num_symbols < 1) ThrowUsage("model: num_symbols must be >= 1");
  if (conv_strides.empty()) ThrowUsage("model: feature encoder needs at least one layer");
  for (int s : conv_strides)
    if (s < 1) ThrowUsage("model: conv strides must be >= 1");
  if (conv_kernel < 1) ThrowUsage("model: conv_kernel must be >= 1");
  if (context_layers < 0) ThrowUsage("model: context_layers must be >= 0");
  if (pred_hidden < 1 || joint_dim < 1) ThrowUsage("model: hidden sizes must be >= 1");
  if (pred_context < 1) ThrowUsage("model: pred_context must be >= 1");
  if (num_aux < 0 || num_aux > 20) ThrowUsage("model: num_aux out of range");
}

TransducerModel::TransducerModel(ModelConfig config) : config_(std::move(config)) {
  config_.Validate();
  std::mt19937_64 rng(config_.seed);
  const int d = config_.embed_dim;
  const int p = config_.pred_hidden;
  const int j = config_.joint_dim;
  const int vocab = config_.num_symbols + 1;

  int in = config_.input_dim;
  for (int stride : config_.conv_strides) {
    const int fan_in = config_.conv_kernel * in;
    convs_.push_back({UniformInit(d, fan_in, fan_in, rng), ad::Matrix::Zero(1, d), stride});
    in = d;
  }
  for (int l = 0; l < config_.context_layers; ++l) {
    context_.push_back({UniformInit(3 * d, d, d, rng), UniformInit(3 * d, d, d, rng),
                        ad::Matrix::Zero(1, 3 * d)});
  }
  pred_embed_ = UniformInit(vocab, p, 1, rng);
  for (int k = 0; k < config_.pred_context; ++k)
    pred_ctx_w_.push_back(UniformInit(p, p, config_.pred_context * p, rng));
  pred_ctx_b_ = ad::Matrix::Zero(1, p);
  pred_proj_w_ = UniformInit(d, p, p, rng);
  pred_proj_b_ = ad::Matrix::Zero(1, d);
  joint_enc_w_ = UniformInit(j, d, d, rng);
  joint_pred_w_ = UniformInit(j, d, d, rng);
  joint_bias_ = ad::Matrix::Zero(1, j);
  joint_out_w_ = UniformInit(vocab, j, j, rng);
  joint_out_b_ = ad::Matrix::Zero(1, vocab);

  const auto pos = config_.position;
  if (pos != ActivationPosition::kAfterFullEncoder) {
    feature_bank_ = ActivationBank::Create(config_.strategy, config_.num_aux, d,
                                           config_.seed * 1000003u + 11u);
  }
  if (pos != ActivationPosition::kAfterFeatureEncoder) {
    encoder_bank_ = ActivationBank::Create(config_.strategy, config_.num_aux, d,
                                           config_.seed * 1000003u + 29u);
  }
}

std::vector<TransducerModel::ParamRef> TransducerModel::Parameters() {
  std::vector<ParamRef> out;
  for (size_t i = 0; i < convs_.size(); ++i) {
    const std::string base = "fe.conv" + std::to_string(i);
    out.push_back({base + ".weight", &convs_[i].weight});
    out.push_back({base + ".bias", &convs_[i].bias});
  }
  for (size_t i = 0; i < context_.size(); ++i) {
    const std::string base = "ce.rnn" + std::to_string(i);
    out.push_back({base + ".w_ih", &context_[i].w_ih});
    out.push_back({base + ".w_hh", &context_[i].w_hh});
    out.push_back({base + ".bias", &context_[i].bias});
  }
  out.push_back({"pred.embed", &pred_embed_});
  for (size_t k = 0; k < pred_ctx_w_.size(); ++k)
    out.push_back({"pred.ctx" + std::to_string(k) + ".weight", &pred_ctx_w_[k]});
  out.push_back({"pred.ctx.bias", &pred_ctx_b_});
  out.push_back({"pred.proj.weight", &pred_proj_w_});
  out.push_back({"pred.proj.bias", &pred_proj_b_});
  out.push_back({"joint.enc.weight", &joint_enc_w_});
  out.push_back({"joint.pred.weight", &joint_pred_w_});
  out.push_back({"joint.bias", &joint_bias_});
  out.push_back({"joint.out.weight", &joint_out_w_});
  out.push_back({"joint.out.bias", &joint_out_b_});
  auto add_bank = [&out](ActivationBank &bank, ActivationPosition pos) {
    const std::string base = "act." + std::string(ToString(pos)) + "." +
                             std::string(ToString(bank.strategy())) + ".";
    for (int i = 0; i < bank.num_vectors(); ++i)
      out.push_back({base + std::to_string(i), &bank.mutable_vector(i)});
  };
  if (feature_bank_) add_bank(*feature_bank_, ActivationPosition::kAfterFeatureEncoder);
  if (encoder_bank_) add_bank(*encoder_bank_, ActivationPosition::kAfterFullEncoder);
  return out;
}

std::vector<TransducerModel::ConstParamRef> TransducerModel::Parameters() const {
  std::vector<ConstParamRef> out;
  for (auto &p : const_cast<TransducerModel *>(this)->Parameters())
    out.push_back({std::move(p.name), p.value});
  return out;
}

int64_t TransducerModel::NumParameters() const {
  int64_t n = 0;
  for (const auto &p : Parameters()) n += p.value->size();
  return n;
}

void TransducerModel::RoundToFloat() {
  for (auto &p : Parameters())
    for (Eigen::Index i = 0; i < p.value->size(); ++i)
      p.value->data()[i] = static_cast<double>(static_cast<float>(p.value->data()[i]));
}

ad::Matrix TransducerModel::Encode(const ad::Matrix &frames, TaskSet tasks) const {
  ad::Tape tape;
  ModelGraph graph(*this, tape, /*trainable=*/false);
  return tape.value(graph.Encode(frames, tasks));
}

ad::Matrix TransducerModel::FeatureEncode(const ad::Matrix &frames) const {
  ad::Tape tape;
  ModelGraph graph(*this, tape, false);
  return tape.value(graph.FeatureEncode(frames));
}

ad::Matrix TransducerModel::ContextEncode(const ad::Matrix &x) const {
  ad::Tape tape;
  ModelGraph graph(*this, tape, false);
  return tape.value(graph.ContextEncode(tape.Constant(x)));
}

ad::Matrix TransducerModel::Predict(std::span<const int> prefix) const {
  ad::Tape tape;
  ModelGraph graph(*this, tape, false);
  return tape.value(graph.Predict(prefix));
}

ad::Matrix TransducerModel::ProjectEncoder(const ad::Matrix &enc) const {
  return enc * joint_enc_w_.transpose();
}

PredictorState TransducerModel::PredictorStart() const {
  PredictorState start;
  start.history.assign(config_.pred_context, blank_id());
  FinishPredictorState(start);
  return start;
}

void TransducerModel::FinishPredictorState(PredictorState &state) const {
  ad::RowVector pre = pred_ctx_b_.row(0);
  for (size_t k = 0; k < pred_ctx_w_.size(); ++k)
    pre += pred_embed_.row(state.history[k]) * pred_ctx_w_[k].transpose();
  const ad::RowVector hidden = pre.array().tanh().matrix();
  state.output = hidden * pred_proj_w_.transpose() + pred_proj_b_;
  state.joint_proj = state.output * joint_pred_w_.transpose() + joint_bias_;
}

PredictorState TransducerModel::PredictorStep(const PredictorState &state, int token) const {
  if (token < 0 || token > blank_id()) ThrowRuntime("predictor token out of range");
  PredictorState next;
  next.history.assign(state.history.begin() + 1, state.history.end());
  next.history.push_back(token);
  FinishPredictorState(next);
  return next;
}

ad::RowVector TransducerModel::Joint(const ad::RowVector &h, const ad::RowVector &g) const {
  ad::RowVector z = (h * joint_enc_w_.transpose() + g * joint_pred_w_.transpose() +
                     joint_bias_).array().tanh().matrix();
  return z * joint_out_w_.transpose() + joint_out_b_;
}

ad::RowVector TransducerModel::JointLogProbs(const ad::RowVector &enc_proj,
                                             const ad::RowVector &pred_proj) const {
  ad::RowVector z = (enc_proj + pred_proj).array().tanh().matrix();
  return LogSoftmax(z * joint_out_w_.transpose() + joint_out_b_);
}

ad::RowVector TransducerModel::JointPreActivation(const ad::RowVector &h,
                                                  const ad::RowVector &g) const {
  return h * joint_enc_w_.transpose() + g * joint_pred_w_.transpose();
}

TransducerLattice TransducerModel::BuildLattice(const ad::Matrix &enc,
                                                std::span<const int> targets) const {
  CheckTargets(targets, blank_id());
  if (enc.rows() < 1) ThrowRuntime("encoder output has no frames");
  const int T = static_cast<int>(enc.rows());
  const int U = static_cast<int>(targets.size());
  const ad::Matrix hp = ProjectEncoder(enc);
  std::vector<ad::RowVector> gp;
  PredictorState state = PredictorStart();
  gp.push_back(state.joint_proj);
  for (int y : targets) {
    state = PredictorStep(state, y);
    gp.push_back(state.joint_proj);
  }
  TransducerLattice lat;
  lat.log_blank.resize(T, U + 1);
  lat.log_emit.resize(T, U);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const ad::RowVector lp = JointLogProbs(hp.row(t), gp[u]);
      lat.log_blank(t, u) = lp(blank_id());
      if (u < U) lat.log_emit(t, u) = lp(targets[u]);
    }
  }
  return lat;
}

ModelGraph::ModelGraph(const TransducerModel &model, ad::Tape &tape, bool trainable)
    : model_(model), tape_(tape) {
  const auto params = model.Parameters();
  vars_.reserve(params.size());
  for (const auto &p : params)
    vars_.push_back(trainable ? tape.Leaf(*p.value) : tape.Constant(*p.value));
  const size_t fixed = model.JointOffset() + 5;
  feature_bank_offset_ = fixed;
  encoder_bank_offset_ =
      fixed + (model.feature_bank_ ? model.feature_bank_->num_vectors() : 0);
}

ad::Var ModelGraph::FeatureEncode(const ad::Matrix &frames) {
  const auto &cfg = model_.config_;
  if (frames.rows() == 0) ThrowRuntime("feature encoder: input has no frames");
  if (frames.cols() != cfg.input_dim) {
    ThrowRuntime("feature encoder: expected input dim " + std::to_string(cfg.input_dim) +
                 ", got " + std::to_string(frames.cols()));
  }
  ad::Var x = tape_.Constant(frames);
  const size_t n = model_.convs_.size();
  for (size_t i = 0; i < n; ++i) {
    ad::Var patches = tape_.Im2Col(x, cfg.conv_kernel, model_.convs_[i].stride);
    x = tape_.AddRow(tape_.MatMulT(patches, vars_[2 * i]), vars_[2 * i + 1]);
    if (i + 1 < n) x = tape_.Tanh(x);
  }
  return x;
}

ad::Var ModelGraph::Recur(ad::Var x, size_t w_ih, size_t w_hh, size_t bias, ad::Var h0,
                          bool residual) {
  // GRU cell; gate columns are ordered reset, update, candidate.
  const int d = static_cast<int>(tape_.value(x).cols());
  ad::Var pre = tape_.AddRow(tape_.MatMulT(x, vars_[w_ih]), vars_[bias]);
  const int steps = static_cast<int>(tape_.value(x).rows());
  std::vector<ad::Var> rows;
  rows.reserve(steps);
  ad::Var h = h0.valid() ? h0 : tape_.Constant(ad::Matrix::Zero(1, d));
  for (int t = 0; t < steps; ++t) {
    ad::Var a = tape_.Row(pre, t);
    ad::Var hh = tape_.MatMulT(h, vars_[w_hh]);
    ad::Var r = tape_.Sigmoid(tape_.Add(tape_.Cols(a, 0, d), tape_.Cols(hh, 0, d)));
    ad::Var z = tape_.Sigmoid(tape_.Add(tape_.Cols(a, d, d), tape_.Cols(hh, d, d)));
    ad::Var n = tape_.Tanh(tape_.Add(tape_.Cols(a, 2 * d, d), tape_.Mul(r, tape_.Cols(hh, 2 * d, d))));
    h = tape_.Add(n, tape_.Mul(z, tape_.Sub(h, n)));
    rows.push_back(h);
  }
  ad::Var out = tape_.StackRows(rows);
  return residual ? tape_.Add(x, out) : out;
}

ad::Var ModelGraph::ContextEncode(ad::Var x) {
  if (tape_.value(x).cols() != model_.config_.embed_dim)
    ThrowRuntime("context encoder: embedding dimension mismatch");
  const size_t base = 2 * model_.convs_.size();
  for (size_t l = 0; l < model_.context_.size(); ++l) {
    const size_t o = base + 3 * l;
    x = Recur(x, o, o + 1, o + 2, ad::Var{}, /*residual=*/true);
  }
  return x;
}

ad::Var ModelGraph::ActivationVector(bool feature_position, TaskSet tasks) {
  const ActivationBank &bank =
      feature_position ? *model_.feature_bank_ : *model_.encoder_bank_;
  const size_t offset = feature_position ? feature_bank_offset_ : encoder_bank_offset_;
  std::span<const ad::Var> bound(vars_.data() + offset, bank.num_vectors());
  return bank.Compose(tape_, bound, tasks);
}

void ModelGraph::SetDropout(double rate, uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) ThrowUsage("dropout rate must lie in [0, 1)");
  dropout_ = rate;
  dropout_rng_.seed(seed);
}

ad::Var ModelGraph::Dropout(ad::Var x) {
  if (dropout_ == 0.0) return x;
  const ad::Matrix &v = tape_.value(x);
  std::bernoulli_distribution keep(1.0 - dropout_);
  ad::Matrix mask(v.rows(), v.cols());
  const double scale = 1.0 / (1.0 - dropout_);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(dropout_rng_) ? scale : 0.0;
  return tape_.Mul(x, tape_.Constant(std::move(mask)));
}

ad::Var ModelGraph::Encode(const ad::Matrix &frames, TaskSet tasks) {
  ad::Var x = FeatureEncode(frames);
  if (model_.feature_bank_) x = ApplyActivation(tape_, x, ActivationVector(true, tasks));
  x = ContextEncode(Dropout(x));
  if (model_.encoder_bank_) x = ApplyActivation(tape_, x, ActivationVector(false, tasks));
  return Dropout(x);
}

ad::Var ModelGraph::Predict(std::span<const int> prefix) {
  CheckTargets(prefix, model_.blank_id());
  const size_t base = model_.PredictorOffset();
  const int c = model_.config_.pred_context;
  const int rows = static_cast<int>(prefix.size()) + 1;
  // Row u sees symbols u-c .. u-1 of the prefix, start-padded.
  ad::Var pre;
  std::vector<int> ids(rows);
  for (int k = 0; k < c; ++k) {
    const int lag = c - k;
    for (int u = 0; u < rows; ++u) ids[u] = u - lag >= 0 ? prefix[u - lag] : model_.blank_id();
    ad::Var term = tape_.MatMulT(tape_.GatherRows(vars_[base], ids), vars_[base + 1 + k]);
    pre = pre.valid() ? tape_.Add(pre, term) : term;
  }
  ad::Var h = tape_.Tanh(tape_.AddRow(pre, vars_[base + 1 + c]));
  return tape_.AddRow(tape_.MatMulT(h, vars_[base + 2 + c]), vars_[base + 3 + c]);
}

ad::Var ModelGraph::Loss(ad::Var enc, std::span<const int> targets) {
  CheckTargets(targets, model_.blank_id());
  const size_t base = model_.JointOffset();
  ad::Var pred = Predict(targets);
  ad::Var hp = tape_.MatMulT(enc, vars_[base]);
  ad::Var gp = tape_.AddRow(tape_.MatMulT(pred, vars_[base + 1]), vars_[base + 2]);
  ad::Var w_out = vars_[base + 3];
  ad::Var b_out = vars_[base + 4];

  const ad::Matrix &hpv = tape_.value(hp);
  const ad::Matrix &gpv = tape_.value(gp);
  const ad::Matrix &wv = tape_.value(w_out);
  const int T = static_cast<int>(hpv.rows());
  const int U1 = static_cast<int>(gpv.rows());
  const int J = static_cast<int>(hpv.cols());
  const int blank = model_.blank_id();
  if (T < 1) ThrowRuntime("transducer loss: encoder output has no frames");

  // Joint hidden activations and output probabilities for every lattice node,
  // row index t * (U + 1) + u.
  struct State {
    ad::Matrix z;
    ad::Matrix prob;
    LatticeGradient lat_grad;
    std::vector<int> targets;
  };
  auto st = std::make_shared<State>();
  st->targets.assign(targets.begin(), targets.end());
  st->z.resize(static_cast<Eigen::Index>(T) * U1, J);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < U1; ++u)
      st->z.row(t * U1 + u) = (hpv.row(t) + gpv.row(u)).array().tanh().matrix();
  ad::Matrix logits = st->z * wv.transpose();
  logits.rowwise() += tape_.value(b_out).row(0);
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  st->prob = logits.array().exp().matrix();
  const Eigen::VectorXd row_sum = st->prob.rowwise().sum();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    st->prob.row(r) /= row_sum(r);
    logits.row(r).array() -= std::log(row_sum(r));
  }

  TransducerLattice lat;
  lat.log_blank.resize(T, U1);
  lat.log_emit.resize(T, U1 - 1);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < U1; ++u) {
      lat.log_blank(t, u) = logits(t * U1 + u, blank);
      if (u + 1 < U1) lat.log_emit(t, u) = logits(t * U1 + u, st->targets[u]);
    }
  }
  ad::Matrix value(1, 1);
  value(0, 0) = TransducerNll(lat, &st->lat_grad);

  return tape_.Record(
      std::move(value), {hp, gp, w_out, b_out},
      [st, hp, gp, w_out, b_out, T, U1, blank](ad::Tape &tape, const ad::Matrix &g) {
        const double scale = g(0, 0);
        const auto &lg = st->lat_grad;
        // d(nll)/d(logit_k) = D_k - p_k * sum_j D_j over the two arcs leaving
        // the node.
        ad::Matrix dlogits(st->prob.rows(), st->prob.cols());
        for (int t = 0; t < T; ++t) {
          for (int u = 0; u < U1; ++u) {
            const int r = t * U1 + u;
            const double db = lg.d_blank(t, u);
            const double de = u + 1 < U1 ? lg.d_emit(t, u) : 0.0;
            dlogits.row(r) = st->prob.row(r) * (-(db + de) * scale);
            dlogits(r, blank) += db * scale;
            if (u + 1 < U1) dlogits(r, st->targets[u]) += de * scale;
          }
        }
        const ad::Matrix &wv = tape.value(w_out);
        if (tape.requires_grad(w_out)) tape.Accumulate(w_out, dlogits.transpose() * st->z);
        if (tape.requires_grad(b_out)) tape.Accumulate(b_out, dlogits.colwise().sum());
        ad::Matrix da = (dlogits * wv).array() * (1.0 - st->z.array().square());
        ad::Matrix dhp = ad::Matrix::Zero(T, da.cols());
        ad::Matrix dgp = ad::Matrix::Zero(U1, da.cols());
        for (int t = 0; t < T; ++t) {
          for (int u = 0; u < U1; ++u) {
            dhp.row(t) += da.row(t * U1 + u);
            dgp.row(u) += da.row(t * U1 + u);
          }
        }
        tape.Accumulate(hp, dhp);
        tape.Accumulate(gp, dgp);
      });
}

std::vector<ad::Matrix> ModelGraph::Gradients() const {
  std::vector<ad::Matrix> out;
  out.reserve(vars_.size());
  for (ad::Var v : vars_) out.push_back(tape_.grad(v));
  return out;
}

double RnntLoss(const TransducerModel &model, const ad::Matrix &enc,
                std::span<const int> targets) {
  return TransducerNll(model.BuildLattice(enc, targets));
}

double RnntLossBruteForce(const TransducerModel &model, const ad::Matrix &enc,
                          std::span<const int> targets, uint64_t max_paths) {
  return TransducerNllBruteForce(model.BuildLattice(enc, targets), max_paths);
}

ad::Matrix ToMatrix(const FeatureMatrix &frames) {
  ad::Matrix m(frames.rows, frames.cols);
  for (int r = 0; r < frames.rows; ++r)
    for (int c = 0; c < frames.cols; ++c) m(r, c) = frames.at(r, c);
  return m;
}

}  // namespace taskvec
