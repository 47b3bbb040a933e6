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

#include "zegseg/autodiff.h"

#include <cmath>
#include <string>

#include "zegseg/error.h"

namespace zegseg::ad {

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  ZS_CHECK(a.rows == b.rows && a.cols == b.cols, ErrorCode::kDimension,
           std::string(op) + ": shape mismatch");
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

}  // namespace

const Matrix& Var::value() const { return graph->value(*this); }

Var Graph::Push(Matrix value, bool needs_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::Constant(Matrix value) {
  return Push(std::move(value), false, nullptr);
}

Var Graph::Leaf(Matrix value) {
  return Push(std::move(value), grad_enabled_, nullptr);
}

Var Graph::Apply(Matrix value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  bool needs = false;
  for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
  return Push(std::move(value), needs && grad_enabled_, std::move(fn));
}

Var Graph::Apply(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
  return Push(std::move(value), needs && grad_enabled_, std::move(fn));
}

Matrix* Graph::grad(Var v) {
  Node& node = nodes_[v.id];
  if (!node.needs_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Matrix(node.value.rows, node.value.cols, 0.0);
    node.has_grad = true;
  }
  return &node.grad;
}

const Matrix* Graph::grad_if_any(Var v) const {
  const Node& node = nodes_[v.id];
  return node.has_grad ? &node.grad : nullptr;
}

void Graph::Backward(Var out) {
  ZS_CHECK(grad_enabled_, ErrorCode::kInvariant,
           "backward on a graph built without gradients");
  const Matrix& value = nodes_[out.id].value;
  ZS_CHECK(value.rows == 1 && value.cols == 1, ErrorCode::kDimension,
           "backward needs a scalar output");
  Matrix* seed = grad(out);
  if (!seed) return;
  (*seed)(0, 0) += 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.backward) continue;
    node.backward(node.grad);
  }
}

Matrix MatMulPlain(const Matrix& a, const Matrix& b) {
  ZS_CHECK(a.cols == b.rows, ErrorCode::kDimension, "matmul: inner mismatch");
  Matrix c(a.rows, b.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) {
    double* crow = c.row(i);
    const double* arow = a.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

namespace {

// c += a^T b  (a: n x p, b: n x q, c: p x q)
void AccumulateATB(const Matrix& a, const Matrix& b, Matrix* c) {
  for (int n = 0; n < a.rows; ++n) {
    const double* arow = a.row(n);
    const double* brow = b.row(n);
    for (int p = 0; p < a.cols; ++p) {
      const double ap = arow[p];
      if (ap == 0.0) continue;
      double* crow = c->row(p);
      for (int q = 0; q < b.cols; ++q) crow[q] += ap * brow[q];
    }
  }
}

// c += a b^T  (a: n x k, b: m x k, c: n x m)
void AccumulateABT(const Matrix& a, const Matrix& b, Matrix* c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c->row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

// c += a b  (a: n x k, b: k x m, c: n x m)
void AccumulateAB(const Matrix& a, const Matrix& b, Matrix* c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c->row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

}  // namespace

Var MatMul(Var a, Var b) {
  Graph* g = a.graph;
  Matrix out = MatMulPlain(a.value(), b.value());
  return g->Apply(std::move(out), {a, b}, [g, a, b](const Matrix& go) {
    if (Matrix* ga = g->grad(a)) AccumulateABT(go, b.value(), ga);
    if (Matrix* gb = g->grad(b)) AccumulateATB(a.value(), go, gb);
  });
}

Var MatMulNT(Var a, Var b) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  ZS_CHECK(av.cols == bv.cols, ErrorCode::kDimension,
           "matmul_nt: inner mismatch");
  Matrix out(av.rows, bv.rows, 0.0);
  AccumulateABT(av, bv, &out);
  return g->Apply(std::move(out), {a, b}, [g, a, b](const Matrix& go) {
    // out = a b^T: da = go b, db = go^T a
    if (Matrix* ga = g->grad(a)) AccumulateAB(go, b.value(), ga);
    if (Matrix* gb = g->grad(b)) AccumulateATB(go, a.value(), gb);
  });
}

Var Transpose(Var a) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  Matrix out(av.cols, av.rows);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) out(j, i) = av(i, j);
  return g->Apply(std::move(out), {a}, [g, a](const Matrix& go) {
    Matrix* ga = g->grad(a);
    for (int i = 0; i < ga->rows; ++i)
      for (int j = 0; j < ga->cols; ++j) (*ga)(i, j) += go(j, i);
  });
}

Var Add(Var a, Var b) {
  Graph* g = a.graph;
  CheckSameShape(a.value(), b.value(), "add");
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += bv.v[i];
  return g->Apply(std::move(out), {a, b}, [g, a, b](const Matrix& go) {
    for (Var in : {a, b}) {
      if (Matrix* gi = g->grad(in))
        for (size_t i = 0; i < go.v.size(); ++i) gi->v[i] += go.v[i];
    }
  });
}

Var AddRow(Var a, Var row) {
  Graph* g = a.graph;
  const Matrix& rv = row.value();
  ZS_CHECK(rv.rows == 1 && rv.cols == a.value().cols, ErrorCode::kDimension,
           "add_row: bias shape mismatch");
  Matrix out = a.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    for (int j = 0; j < out.cols; ++j) r[j] += rv.v[j];
  }
  return g->Apply(std::move(out), {a, row}, [g, a, row](const Matrix& go) {
    if (Matrix* ga = g->grad(a))
      for (size_t i = 0; i < go.v.size(); ++i) ga->v[i] += go.v[i];
    if (Matrix* gr = g->grad(row)) {
      for (int i = 0; i < go.rows; ++i) {
        const double* r = go.row(i);
        for (int j = 0; j < go.cols; ++j) gr->v[j] += r[j];
      }
    }
  });
}

Var Scale(Var a, double s) {
  Graph* g = a.graph;
  Matrix out = a.value();
  for (double& x : out.v) x *= s;
  return g->Apply(std::move(out), {a}, [g, a, s](const Matrix& go) {
    Matrix* ga = g->grad(a);
    for (size_t i = 0; i < go.v.size(); ++i) ga->v[i] += s * go.v[i];
  });
}

Var Mul(Var a, Var b) {
  Graph* g = a.graph;
  CheckSameShape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  const Matrix& bv = b.value();
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= bv.v[i];
  return g->Apply(std::move(out), {a, b}, [g, a, b](const Matrix& go) {
    if (Matrix* ga = g->grad(a))
      for (size_t i = 0; i < go.v.size(); ++i)
        ga->v[i] += go.v[i] * b.value().v[i];
    if (Matrix* gb = g->grad(b))
      for (size_t i = 0; i < go.v.size(); ++i)
        gb->v[i] += go.v[i] * a.value().v[i];
  });
}

double GeluScalar(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var Gelu(Var a) {
  Graph* g = a.graph;
  Matrix out = a.value();
  for (double& x : out.v) x = GeluScalar(x);
  return g->Apply(std::move(out), {a}, [g, a](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const Matrix& av = a.value();
    for (size_t i = 0; i < go.v.size(); ++i) {
      const double x = av.v[i];
      const double u = kGeluC * (x + 0.044715 * x * x * x);
      const double t = std::tanh(u);
      const double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
      const double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      ga->v[i] += go.v[i] * d;
    }
  });
}

Var Sigmoid(Var a) {
  Graph* g = a.graph;
  Matrix out = a.value();
  for (double& x : out.v) x = SigmoidScalar(x);
  Var holder = g->Constant(out);
  return g->Apply(std::move(out), {a}, [g, a, holder](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const Matrix& y = holder.value();
    for (size_t i = 0; i < go.v.size(); ++i)
      ga->v[i] += go.v[i] * y.v[i] * (1.0 - y.v[i]);
  });
}

Var SoftmaxRows(Var a) {
  Graph* g = a.graph;
  Matrix out = a.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    double m = r[0];
    for (int j = 1; j < out.cols; ++j) m = std::max(m, r[j]);
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) {
      r[j] = std::exp(r[j] - m);
      s += r[j];
    }
    for (int j = 0; j < out.cols; ++j) r[j] /= s;
  }
  Var holder = g->Constant(out);
  return g->Apply(std::move(out), {a}, [g, a, holder](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const Matrix& y = holder.value();
    for (int i = 0; i < y.rows; ++i) {
      const double* yr = y.row(i);
      const double* gr = go.row(i);
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += yr[j] * gr[j];
      double* out_r = ga->row(i);
      for (int j = 0; j < y.cols; ++j) out_r[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Var LogSoftmaxRows(Var a) {
  Graph* g = a.graph;
  Matrix out = a.value();
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    double m = r[0];
    for (int j = 1; j < out.cols; ++j) m = std::max(m, r[j]);
    double s = 0.0;
    for (int j = 0; j < out.cols; ++j) s += std::exp(r[j] - m);
    const double lse = m + std::log(s);
    for (int j = 0; j < out.cols; ++j) r[j] -= lse;
  }
  Var holder = g->Constant(out);
  return g->Apply(std::move(out), {a}, [g, a, holder](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const Matrix& y = holder.value();
    for (int i = 0; i < y.rows; ++i) {
      const double* yr = y.row(i);
      const double* gr = go.row(i);
      double s = 0.0;
      for (int j = 0; j < y.cols; ++j) s += gr[j];
      double* out_r = ga->row(i);
      for (int j = 0; j < y.cols; ++j) out_r[j] += gr[j] - std::exp(yr[j]) * s;
    }
  });
}

Var LayerNorm(Var a, Var gain, Var bias, double eps) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  const int n = av.rows;
  const int c = av.cols;
  ZS_CHECK(gain.value().cols == c && bias.value().cols == c,
           ErrorCode::kDimension, "layer_norm: parameter width mismatch");
  Matrix xhat(n, c);
  Matrix inv_std(n, 1);
  Matrix out(n, c);
  const Matrix& gv = gain.value();
  const Matrix& bv = bias.value();
  for (int i = 0; i < n; ++i) {
    const double* r = av.row(i);
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += r[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (r[j] - mean) * (r[j] - mean);
    var /= c;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(i, 0) = is;
    for (int j = 0; j < c; ++j) {
      xhat(i, j) = (r[j] - mean) * is;
      out(i, j) = xhat(i, j) * gv.v[j] + bv.v[j];
    }
  }
  Var xh = g->Constant(std::move(xhat));
  Var istd = g->Constant(std::move(inv_std));
  return g->Apply(std::move(out), {a, gain, bias},
                  [g, a, gain, bias, xh, istd, n, c](const Matrix& go) {
    const Matrix& xhv = xh.value();
    if (Matrix* gg = g->grad(gain))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) gg->v[j] += go(i, j) * xhv(i, j);
    if (Matrix* gb = g->grad(bias))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) gb->v[j] += go(i, j);
    if (Matrix* ga = g->grad(a)) {
      const Matrix& gv2 = gain.value();
      for (int i = 0; i < n; ++i) {
        double sum_d = 0.0;
        double sum_dx = 0.0;
        for (int j = 0; j < c; ++j) {
          const double d = go(i, j) * gv2.v[j];
          sum_d += d;
          sum_dx += d * xhv(i, j);
        }
        const double is = istd.value()(i, 0);
        for (int j = 0; j < c; ++j) {
          const double d = go(i, j) * gv2.v[j];
          (*ga)(i, j) += is * (d - sum_d / c - xhv(i, j) * sum_dx / c);
        }
      }
    }
  });
}

Var NormalizeRows(Var a) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  Matrix out = av;
  Matrix norms(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += av(i, j) * av(i, j);
    const double nrm = std::max(std::sqrt(s), 1e-12);
    norms(i, 0) = nrm;
    for (int j = 0; j < av.cols; ++j) out(i, j) /= nrm;
  }
  Var nv = g->Constant(std::move(norms));
  Var holder = g->Constant(out);
  return g->Apply(std::move(out), {a}, [g, a, nv, holder](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const Matrix& y = holder.value();
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += y(i, j) * go(i, j);
      const double inv = 1.0 / nv.value()(i, 0);
      for (int j = 0; j < y.cols; ++j)
        (*ga)(i, j) += inv * (go(i, j) - y(i, j) * dot);
    }
  });
}

Var ColSlice(Var a, int begin, int end) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  ZS_CHECK(0 <= begin && begin < end && end <= av.cols, ErrorCode::kDimension,
           "col_slice: bad range");
  Matrix out(av.rows, end - begin);
  for (int i = 0; i < av.rows; ++i)
    for (int j = begin; j < end; ++j) out(i, j - begin) = av(i, j);
  return g->Apply(std::move(out), {a}, [g, a, begin, end](const Matrix& go) {
    Matrix* ga = g->grad(a);
    for (int i = 0; i < go.rows; ++i)
      for (int j = begin; j < end; ++j) (*ga)(i, j) += go(i, j - begin);
  });
}

Var ConcatCols(const std::vector<Var>& parts) {
  ZS_CHECK(!parts.empty(), ErrorCode::kDimension, "concat: no inputs");
  Graph* g = parts[0].graph;
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    ZS_CHECK(p.rows() == rows, ErrorCode::kDimension, "concat: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < pv.cols; ++j) out(i, offset + j) = pv(i, j);
    offset += pv.cols;
  }
  return g->Apply(std::move(out), parts, [g, parts](const Matrix& go) {
    int off = 0;
    for (const Var& p : parts) {
      const int pc = p.cols();
      if (Matrix* gp = g->grad(p))
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < pc; ++j) (*gp)(i, j) += go(i, off + j);
      off += pc;
    }
  });
}

Var RowSlice(Var a, int begin, int end) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  ZS_CHECK(0 <= begin && begin < end && end <= av.rows, ErrorCode::kDimension,
           "row_slice: bad range");
  Matrix out(end - begin, av.cols);
  std::copy(av.v.begin() + static_cast<size_t>(begin) * av.cols,
            av.v.begin() + static_cast<size_t>(end) * av.cols, out.v.begin());
  return g->Apply(std::move(out), {a}, [g, a, begin](const Matrix& go) {
    Matrix* ga = g->grad(a);
    const size_t off = static_cast<size_t>(begin) * go.cols;
    for (size_t i = 0; i < go.v.size(); ++i) ga->v[off + i] += go.v[i];
  });
}

Var Sum(Var a) {
  Graph* g = a.graph;
  double s = 0.0;
  for (double x : a.value().v) s += x;
  return g->Apply(Matrix(1, 1, s), {a}, [g, a](const Matrix& go) {
    Matrix* ga = g->grad(a);
    for (double& x : ga->v) x += go.v[0];
  });
}

Var Mean(Var a) {
  return Scale(Sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var AddScalars(const std::vector<Var>& scalars) {
  ZS_CHECK(!scalars.empty(), ErrorCode::kDimension, "add_scalars: empty");
  Graph* g = scalars[0].graph;
  double s = 0.0;
  for (const Var& v : scalars) s += v.value().v[0];
  return g->Apply(Matrix(1, 1, s), scalars, [g, scalars](const Matrix& go) {
    for (const Var& v : scalars)
      if (Matrix* gv = g->grad(v)) gv->v[0] += go.v[0];
  });
}

Var Conv3x3(Var x, int height, int width, Var weight, Var bias, int stride) {
  Graph* g = x.graph;
  const Matrix& xv = x.value();
  const Matrix& wv = weight.value();
  const int cin = xv.cols;
  const int cout = wv.rows;
  ZS_CHECK(xv.rows == height * width, ErrorCode::kDimension,
           "conv: input rows do not match height*width");
  ZS_CHECK(wv.cols == cin * 9, ErrorCode::kDimension,
           "conv: weight shape mismatch");
  ZS_CHECK(bias.value().cols == cout, ErrorCode::kDimension,
           "conv: bias shape mismatch");
  ZS_CHECK(stride >= 1, ErrorCode::kDimension, "conv: stride must be >= 1");
  const int oh = (height + stride - 1) / stride;
  const int ow = (width + stride - 1) / stride;

  // im2col: (oh*ow) x (9*cin), column layout matches the weight layout.
  Matrix cols(oh * ow, 9 * cin, 0.0);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* dst = cols.row(oy * ow + ox);
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = oy * stride + ky - 1;
        if (iy < 0 || iy >= height) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = ox * stride + kx - 1;
          if (ix < 0 || ix >= width) continue;
          const double* src = xv.row(iy * width + ix);
          double* d = dst + (ky * 3 + kx) * cin;
          for (int c = 0; c < cin; ++c) d[c] = src[c];
        }
      }
    }
  }
  Matrix out(oh * ow, cout, 0.0);
  AccumulateABT(cols, wv, &out);
  const Matrix& bv = bias.value();
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < cout; ++j) out(i, j) += bv.v[j];

  Var colv = g->Constant(std::move(cols));
  return g->Apply(std::move(out), {x, weight, bias},
                  [g, x, weight, bias, colv, height, width, stride, oh, ow,
                   cin](const Matrix& go) {
    if (Matrix* gw = g->grad(weight)) AccumulateATB(go, colv.value(), gw);
    if (Matrix* gb = g->grad(bias))
      for (int i = 0; i < go.rows; ++i)
        for (int j = 0; j < go.cols; ++j) gb->v[j] += go(i, j);
    if (Matrix* gx = g->grad(x)) {
      Matrix dcols(oh * ow, 9 * cin, 0.0);
      AccumulateAB(go, weight.value(), &dcols);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double* src = dcols.row(oy * ow + ox);
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride + ky - 1;
            if (iy < 0 || iy >= height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride + kx - 1;
              if (ix < 0 || ix >= width) continue;
              double* d = gx->row(iy * width + ix);
              const double* s = src + (ky * 3 + kx) * cin;
              for (int c = 0; c < cin; ++c) d[c] += s[c];
            }
          }
        }
      }
    }
  });
}

Var UpsampleRows(Var a, int height, int width, int factor) {
  Graph* g = a.graph;
  const Matrix& av = a.value();
  ZS_CHECK(av.cols == height * width, ErrorCode::kDimension,
           "upsample: row length does not match grid");
  if (factor == 1) return a;
  const int oh = height * factor;
  const int ow = width * factor;
  Matrix out(av.rows, oh * ow);
  for (int r = 0; r < av.rows; ++r) {
    const double* src = av.row(r);
    double* dst = out.row(r);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        dst[y * ow + x] = src[(y / factor) * width + x / factor];
  }
  return g->Apply(std::move(out), {a},
                  [g, a, width, oh, ow, factor](const Matrix& go) {
    Matrix* ga = g->grad(a);
    for (int r = 0; r < go.rows; ++r) {
      const double* src = go.row(r);
      double* dst = ga->row(r);
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
          dst[(y / factor) * width + x / factor] += src[y * ow + x];
    }
  });
}

}  // namespace zegseg::ad
