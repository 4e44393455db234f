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

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "taskvec/activation.hpp"
#include "taskvec/autodiff.hpp"
#include "taskvec/codec.hpp"
#include "taskvec/transducer.hpp"

namespace taskvec {

struct ModelConfig {
  int input_dim = 16;
  int embed_dim = 64;
  // Feature encoder: one kernel-3 convolution per entry, with that stride.
  std::vector<int> conv_strides = {2, 1};
  int conv_kernel = 3;
  // Context encoder: unidirectional GRU layers with residual connections.
  int context_layers = 2;
  // Prediction network: embeddings of the last pred_context symbols (start
  // symbol padded), one tanh layer of width pred_hidden, projection to d.
  int pred_hidden = 64;
  int pred_context = 2;
  int joint_dim = 64;
  int num_symbols = 1;  // V, blank excluded; blank id == V
  ActivationStrategy strategy = ActivationStrategy::kPerCombination;
  ActivationPosition position = ActivationPosition::kAfterFeatureEncoder;
  int num_aux = kNumAuxTasks;
  uint64_t seed = 1;

  int downsampling() const;
  int EncodedLength(int input_frames) const;
  void Validate() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // blanks never appear
  double score = 0.0;       // log-probability, <= 0
};

// Prediction network state after consuming a prefix.
struct PredictorState {
  std::vector<int> history;  // last pred_context symbols, oldest first
  ad::RowVector output;      // d-dimensional prediction embedding (a row of G)
  ad::RowVector joint_proj;  // output projected into the joint space
};

class TransducerModel {
 public:
  explicit TransducerModel(ModelConfig config);

  const ModelConfig &config() const { return config_; }
  int blank_id() const { return config_.num_symbols; }
  int vocab_size() const { return config_.num_symbols + 1; }

  struct ParamRef {
    std::string name;
    ad::Matrix *value;
  };
  struct ConstParamRef {
    std::string name;
    const ad::Matrix *value;
  };
  // Every parameter exactly once, in a fixed order.
  std::vector<ParamRef> Parameters();
  std::vector<ConstParamRef> Parameters() const;
  int64_t NumParameters() const;

  bool has_feature_bank() const { return feature_bank_.has_value(); }
  bool has_encoder_bank() const { return encoder_bank_.has_value(); }
  const ActivationBank &feature_bank() const { return *feature_bank_; }
  const ActivationBank &encoder_bank() const { return *encoder_bank_; }
  ActivationBank &mutable_feature_bank() { return *feature_bank_; }
  ActivationBank &mutable_encoder_bank() { return *encoder_bank_; }

  // Rounds parameters to float32, the checkpoint storage precision.
  void RoundToFloat();

  // Inference helpers (no gradient tracking).
  ad::Matrix Encode(const ad::Matrix &frames, TaskSet tasks) const;
  ad::Matrix FeatureEncode(const ad::Matrix &frames) const;
  ad::Matrix ContextEncode(const ad::Matrix &x) const;
  ad::Matrix Predict(std::span<const int> prefix) const;
  // Encoder output rows projected into the joint space.
  ad::Matrix ProjectEncoder(const ad::Matrix &enc) const;
  PredictorState PredictorStart() const;
  PredictorState PredictorStep(const PredictorState &state, int token) const;
  // Logits over V + 1 symbols for one encoder row h and one prediction row g.
  ad::RowVector Joint(const ad::RowVector &h, const ad::RowVector &g) const;
  // Log-softmax over V + 1 from projected rows.
  ad::RowVector JointLogProbs(const ad::RowVector &enc_proj,
                              const ad::RowVector &pred_proj) const;
  // Pre-activation of the joint hidden layer, minus its bias.
  ad::RowVector JointPreActivation(const ad::RowVector &h, const ad::RowVector &g) const;

  TransducerLattice BuildLattice(const ad::Matrix &enc, std::span<const int> targets) const;

 private:
  friend class ModelGraph;

  struct Conv {
    ad::Matrix weight;  // out x (kernel * in)
    ad::Matrix bias;    // 1 x out
    int stride;
  };
  struct Recurrent {  // GRU layer; gate blocks ordered reset, update, candidate
    ad::Matrix w_ih;
    ad::Matrix w_hh;
    ad::Matrix bias;
  };

  void FinishPredictorState(PredictorState &state) const;
  // Positions in Parameters() of the first predictor and joint tensors.
  size_t PredictorOffset() const { return 2 * convs_.size() + 3 * context_.size(); }
  size_t JointOffset() const { return PredictorOffset() + pred_ctx_w_.size() + 4; }

  ModelConfig config_;
  std::vector<Conv> convs_;
  std::vector<Recurrent> context_;
  ad::Matrix pred_embed_;  // (V + 1) x P; row V is the start symbol
  std::vector<ad::Matrix> pred_ctx_w_;  // per context slot, P x P, oldest first
  ad::Matrix pred_ctx_b_;
  ad::Matrix pred_proj_w_, pred_proj_b_;
  ad::Matrix joint_enc_w_, joint_pred_w_, joint_bias_;
  ad::Matrix joint_out_w_, joint_out_b_;
  std::optional<ActivationBank> feature_bank_;
  std::optional<ActivationBank> encoder_bank_;
};

// A model's parameters bound as leaves on a tape, with the differentiable
// forward pieces.
class ModelGraph {
 public:
  ModelGraph(const TransducerModel &model, ad::Tape &tape, bool trainable = true);

  ad::Tape &tape() { return tape_; }

  // Inverted dropout with keep probability 1 - rate on the context encoder
  // input and the encoder output; training only. rate 0 disables it.
  void SetDropout(double rate, uint64_t seed);

  ad::Var FeatureEncode(const ad::Matrix &frames);
  ad::Var ContextEncode(ad::Var x);
  // Feature encoder, activation, context encoder, activation, as configured.
  ad::Var Encode(const ad::Matrix &frames, TaskSet tasks);
  ad::Var ActivationVector(bool feature_position, TaskSet tasks);
  ad::Var Predict(std::span<const int> prefix);
  // Full-lattice transducer negative log-likelihood as a 1x1 node.
  ad::Var Loss(ad::Var enc, std::span<const int> targets);

  // Gradients of the last Backward() target, aligned with Parameters().
  std::vector<ad::Matrix> Gradients() const;

 private:
  ad::Var Recur(ad::Var x, size_t w_ih, size_t w_hh, size_t bias, ad::Var h0, bool residual);
  ad::Var Dropout(ad::Var x);

  const TransducerModel &model_;
  ad::Tape &tape_;
  std::vector<ad::Var> vars_;
  size_t feature_bank_offset_ = 0;
  size_t encoder_bank_offset_ = 0;
  double dropout_ = 0.0;
  std::mt19937_64 dropout_rng_;
};

double RnntLoss(const TransducerModel &model, const ad::Matrix &enc,
                std::span<const int> targets);
double RnntLossBruteForce(const TransducerModel &model, const ad::Matrix &enc,
                          std::span<const int> targets, uint64_t max_paths = 1000000);

// Per frame, emits the argmax symbol until blank wins or the cap is reached.
Hypothesis GreedyDecode(const TransducerModel &model, const ad::Matrix &enc,
                        int max_symbols_per_frame = 8);

// Frame-synchronous transducer beam search. Within a frame, hypotheses are
// expanded one symbol at a time; emission candidates and hypotheses that took
// the blank compete for the same `beam_size` slots, and blank-terminated
// hypotheses with identical token sequences are merged by log-add. Returns at
// most beam_size hypotheses, best first.
std::vector<Hypothesis> BeamDecode(const TransducerModel &model, const ad::Matrix &enc,
                                   int beam_size, int max_symbols_per_frame = 8);

ad::Matrix ToMatrix(const FeatureMatrix &frames);

}  // namespace taskvec
