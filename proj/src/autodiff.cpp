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

#include "taskvec/autodiff.hpp"

#include "taskvec/error.hpp"

namespace taskvec::ad {

Var Tape::Push(Matrix value, bool requires_grad, BackwardFn backward,
               std::vector<int> inputs) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) {
    node.backward = std::move(backward);
    node.inputs = std::move(inputs);
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Constant(Matrix value) { return Push(std::move(value), false, nullptr, {}); }

Var Tape::Leaf(Matrix value) { return Push(std::move(value), true, nullptr, {}); }

Matrix Tape::grad(Var v) const {
  const Node &n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Accumulate(Var v, const Matrix &delta) {
  Node &n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = delta;
  } else {
    n.grad += delta;
  }
}

void Tape::AccumulateRow(Var v, int row, const RowVector &delta) {
  Node &n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad.row(row) += delta;
}

void Tape::Backward(Var target) {
  TASKVEC_CHECK(value(target).size() == 1, "Backward() needs a scalar target");
  for (auto &n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[target.id].requires_grad) return;
  nodes_[target.id].grad = Matrix::Ones(1, 1);
  for (int i = target.id; i >= 0; --i) {
    Node &n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    // The closure may append to other nodes' grads but never reallocates
    // nodes_, so the reference stays valid.
    n.backward(*this, n.grad);
  }
}

Var Tape::Record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::Record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool rg = false;
  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (Var v : inputs) {
    rg = rg || nodes_[v.id].requires_grad;
    ids.push_back(v.id);
  }
  return Push(std::move(value), rg, std::move(backward), std::move(ids));
}

Var Tape::Add(Var a, Var b) {
  TASKVEC_CHECK(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
                "Add: shape mismatch");
  return Record(value(a) + value(b), {a, b}, [a, b](Tape &t, const Matrix &g) {
    t.Accumulate(a, g);
    t.Accumulate(b, g);
  });
}

Var Tape::Sub(Var a, Var b) {
  TASKVEC_CHECK(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
                "Sub: shape mismatch");
  return Record(value(a) - value(b), {a, b}, [a, b](Tape &t, const Matrix &g) {
    t.Accumulate(a, g);
    t.Accumulate(b, -g);
  });
}

Var Tape::Scale(Var a, double s) {
  return Record(value(a) * s, {a}, [a, s](Tape &t, const Matrix &g) { t.Accumulate(a, g * s); });
}

Var Tape::AddRow(Var a, Var row) {
  const Matrix &av = value(a);
  const Matrix &rv = value(row);
  TASKVEC_CHECK(rv.rows() == 1 && rv.cols() == av.cols(), "AddRow: shape mismatch");
  Matrix out = av.rowwise() + rv.row(0);
  return Record(std::move(out), {a, row}, [a, row](Tape &t, const Matrix &g) {
    t.Accumulate(a, g);
    t.Accumulate(row, g.colwise().sum());
  });
}

Var Tape::MatMul(Var a, Var b) {
  TASKVEC_CHECK(value(a).cols() == value(b).rows(), "MatMul: shape mismatch");
  Matrix out = value(a) * value(b);
  return Record(std::move(out), {a, b}, [a, b](Tape &t, const Matrix &g) {
    if (t.requires_grad(a)) t.Accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.Accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::MatMulT(Var a, Var b) {
  TASKVEC_CHECK(value(a).cols() == value(b).cols(), "MatMulT: shape mismatch");
  Matrix out = value(a) * value(b).transpose();
  return Record(std::move(out), {a, b}, [a, b](Tape &t, const Matrix &g) {
    if (t.requires_grad(a)) t.Accumulate(a, g * t.value(b));
    if (t.requires_grad(b)) t.Accumulate(b, g.transpose() * t.value(a));
  });
}

Var Tape::Tanh(Var a) {
  Matrix out = value(a).array().tanh().matrix();
  Var res = Record(std::move(out), {a}, nullptr);
  if (requires_grad(res)) {
    nodes_[res.id].backward = [a, res](Tape &t, const Matrix &g) {
      const Matrix &y = t.value(res);
      t.Accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
    };
  }
  return res;
}

Var Tape::Sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
  Var res = Record(std::move(out), {a}, nullptr);
  if (requires_grad(res)) {
    nodes_[res.id].backward = [a, res](Tape &t, const Matrix &g) {
      const Matrix &y = t.value(res);
      t.Accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
    };
  }
  return res;
}

Var Tape::Mul(Var a, Var b) {
  TASKVEC_CHECK(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
                "Mul: shape mismatch");
  Matrix out = value(a).cwiseProduct(value(b));
  return Record(std::move(out), {a, b}, [a, b](Tape &t, const Matrix &g) {
    if (t.requires_grad(a)) t.Accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.requires_grad(b)) t.Accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var Tape::Row(Var a, int r) {
  TASKVEC_CHECK(r >= 0 && r < value(a).rows(), "Row: index out of range");
  Matrix out = value(a).row(r);
  return Record(std::move(out), {a}, [a, r](Tape &t, const Matrix &g) {
    t.AccumulateRow(a, r, g.row(0));
  });
}

Var Tape::Cols(Var a, int begin, int count) {
  TASKVEC_CHECK(begin >= 0 && count >= 0 && begin + count <= value(a).cols(),
                "Cols: range out of bounds");
  Matrix out = value(a).middleCols(begin, count);
  return Record(std::move(out), {a}, [a, begin, count](Tape &t, const Matrix &g) {
    Node &n = t.nodes_[a.id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.grad.middleCols(begin, count) += g;
  });
}

Var Tape::StackRows(std::span<const Var> rows) {
  TASKVEC_CHECK(!rows.empty(), "StackRows: empty input");
  const auto cols = value(rows[0]).cols();
  Matrix out(static_cast<Eigen::Index>(rows.size()), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    TASKVEC_CHECK(value(rows[i]).rows() == 1 && value(rows[i]).cols() == cols,
                  "StackRows: inputs must be rows of equal width");
    out.row(static_cast<Eigen::Index>(i)) = value(rows[i]).row(0);
  }
  std::vector<Var> ins(rows.begin(), rows.end());
  return Record(std::move(out), rows, [ins](Tape &t, const Matrix &g) {
    for (size_t i = 0; i < ins.size(); ++i)
      t.Accumulate(ins[i], g.row(static_cast<Eigen::Index>(i)));
  });
}

Var Tape::GatherRows(Var table, std::span<const int> ids) {
  const Matrix &tv = value(table);
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    TASKVEC_CHECK(ids[i] >= 0 && ids[i] < tv.rows(), "GatherRows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return Record(std::move(out), {table}, [table, idx](Tape &t, const Matrix &g) {
    for (size_t i = 0; i < idx.size(); ++i)
      t.AccumulateRow(table, idx[i], g.row(static_cast<Eigen::Index>(i)));
  });
}

Var Tape::SumAll(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  const auto r = value(a).rows(), c = value(a).cols();
  return Record(std::move(out), {a}, [a, r, c](Tape &t, const Matrix &g) {
    t.Accumulate(a, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var Tape::Im2Col(Var x, int kernel, int stride) {
  TASKVEC_CHECK(kernel >= 1 && stride >= 1, "Im2Col: bad kernel/stride");
  const Matrix &xv = value(x);
  const int rows = static_cast<int>(xv.rows());
  const int cols = static_cast<int>(xv.cols());
  const int out_rows = (rows + stride - 1) / stride;
  const int half = kernel / 2;
  Matrix out = Matrix::Zero(out_rows, static_cast<Eigen::Index>(kernel) * cols);
  for (int t = 0; t < out_rows; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const int src = stride * t + k - half;
      if (src < 0 || src >= rows) continue;
      out.block(t, static_cast<Eigen::Index>(k) * cols, 1, cols) = xv.row(src);
    }
  }
  return Record(std::move(out), {x},
                [x, kernel, stride, rows, cols, out_rows, half](Tape &t, const Matrix &g) {
                  Matrix dx = Matrix::Zero(rows, cols);
                  for (int r = 0; r < out_rows; ++r) {
                    for (int k = 0; k < kernel; ++k) {
                      const int src = stride * r + k - half;
                      if (src < 0 || src >= rows) continue;
                      dx.row(src) += g.block(r, static_cast<Eigen::Index>(k) * cols, 1, cols);
                    }
                  }
                  t.Accumulate(x, dx);
                });
}

}  // namespace taskvec::ad
