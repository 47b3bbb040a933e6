// Copyright 2026 The ZegSeg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZEGSEG_AUTODIFF_H_
#define ZEGSEG_AUTODIFF_H_

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// Every value in a Graph is a Matrix. Ops append a node holding the forward
// value and a closure that pushes the node's gradient into its inputs.
// Backward() walks the tape in reverse once. Graphs built with
// grad_enabled=false record values only, which is what inference uses.

#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

namespace zegseg::ad {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int r, int c) {
    return v[static_cast<size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    return v[static_cast<size_t>(r) * cols + c];
  }
  const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
  size_t size() const { return v.size(); }
};

class Graph;

struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
};

class Graph {
 public:
  // Receives the gradient of the node being processed.
  using BackwardFn = std::function<void(const Matrix& grad_out)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Matrix value);
  // A differentiable input (parameter or test leaf).
  Var Leaf(Matrix value);

  // Appends an op node. `fn` is stored only when some input needs a gradient.
  Var Apply(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var Apply(Matrix value, const std::vector<Var>& inputs, BackwardFn fn);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient buffer of `v`, allocated as zeros on first use. Null when `v`
  // does not need a gradient, so ops can skip work for constant inputs.
  Matrix* grad(Var v);
  // Gradient if one was accumulated, else null.
  const Matrix* grad_if_any(Var v) const;

  // Seeds d(out)/d(out) = 1 for a 1x1 output and runs the tape backwards.
  void Backward(Var scalar_output);

  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var Push(Matrix value, bool needs_grad, BackwardFn fn);

  bool grad_enabled_;
  // deque keeps value references stable while ops append nodes.
  std::deque<Node> nodes_;
};

// C = A B
Var MatMul(Var a, Var b);
// C = A B^T
Var MatMulNT(Var a, Var b);
Var Transpose(Var a);
Var Add(Var a, Var b);
// Adds a 1 x cols row vector to every row.
Var AddRow(Var a, Var row);
Var Scale(Var a, double s);
Var Mul(Var a, Var b);
Var Gelu(Var a);
Var Sigmoid(Var a);
Var SoftmaxRows(Var a);
Var LogSoftmaxRows(Var a);
// Row-wise layer normalisation with learned per-column gain and bias.
Var LayerNorm(Var a, Var gain, Var bias, double eps = 1e-5);
// Each row divided by its L2 norm (with a tiny floor).
Var NormalizeRows(Var a);
Var ColSlice(Var a, int begin, int end);
Var ConcatCols(const std::vector<Var>& parts);
Var RowSlice(Var a, int begin, int end);
Var Sum(Var a);
Var Mean(Var a);
// Sum of 1x1 values.
Var AddScalars(const std::vector<Var>& scalars);

// 3x3 convolution with zero padding 1.
//   x: (height*width) x in_channels, row-major over locations
//   weight: out_channels x (in_channels*9), column = ((ky*3)+kx)*in + ci
//   bias: 1 x out_channels
// Output has ceil(height/stride) * ceil(width/stride) rows.
Var Conv3x3(Var x, int height, int width, Var weight, Var bias, int stride);

// Nearest-neighbour upsampling of each row seen as a (h x w) grid to
// (h*factor x w*factor).
Var UpsampleRows(Var a, int height, int width, int factor);

// Plain helpers used outside graphs.
Matrix MatMulPlain(const Matrix& a, const Matrix& b);
double GeluScalar(double x);
double SigmoidScalar(double x);

}  // namespace zegseg::ad

#endif  // ZEGSEG_AUTODIFF_H_
