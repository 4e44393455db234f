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

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace taskvec::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense matrices. Operations evaluate eagerly and
// record a closure that propagates the output gradient to the inputs.
// A tape is single-use and single-threaded; use one per utterance.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape &, const Matrix &out_grad)>;

  Var Constant(Matrix value);
  Var Leaf(Matrix value);

  const Matrix &value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the last Backward() target with respect to v; zeros if v
  // does not influence it.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(target)/d(target) = 1 for a 1x1 target and runs the closures in
  // reverse order.
  void Backward(Var target);

  // Adds `delta` into the gradient of v. For use inside BackwardFn.
  void Accumulate(Var v, const Matrix &delta);
  void AccumulateRow(Var v, int row, const RowVector &delta);

  // Records a custom node. `backward` receives the output gradient.
  Var Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Scale(Var a, double s);
  // a (r x c) + broadcast row (1 x c).
  Var AddRow(Var a, Var row);
  Var MatMul(Var a, Var b);
  // a * b^T, the usual layout for x W^T with W stored (out x in).
  Var MatMulT(Var a, Var b);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var Mul(Var a, Var b);
  Var Row(Var a, int r);
  // Columns [begin, begin + count) of a.
  Var Cols(Var a, int begin, int count);
  Var StackRows(std::span<const Var> rows);
  Var GatherRows(Var table, std::span<const int> ids);
  // Sum of all entries, as a 1x1 node.
  Var SumAll(Var a);
  // Patches for a 1-D convolution along rows: output row t holds input rows
  // stride*t + k - kernel/2 for k in [0, kernel), zero padded outside. The
  // output has ceil(rows / stride) rows and kernel * cols columns.
  Var Im2Col(Var x, int kernel, int stride);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::vector<int> inputs;
  };
  Var Push(Matrix value, bool requires_grad, BackwardFn backward, std::vector<int> inputs);

  std::vector<Node> nodes_;
};

}  // namespace taskvec::ad
