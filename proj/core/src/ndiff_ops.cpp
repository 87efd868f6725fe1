// Copyright 2026 The sbi-engine Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sbi/ndiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sbi::ndiff {
namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a rank-2 tensor, got " +
                     t.shape_string());
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw std::invalid_argument("operands recorded on different tapes");
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a,
                                 const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   a.shape_string() + " and " + b.shape_string());
}

// out = a * b, accumulating into `out` (m x n).
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  double* op = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = op + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ap[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bp + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out = g * b^T  (g: m x n, b: k x n, out: m x k)
Tensor gemm_nt(const Tensor& g, const Tensor& b) {
  const std::size_t m = g.rows(), n = g.cols(), k = b.rows();
  Tensor out = Tensor::matrix(m, k);
  const double* gp = g.data().data();
  const double* bp = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double acc = 0.0;
      const double* grow = gp + i * n;
      const double* brow = bp + p * n;
      for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
      out(i, p) = acc;
    }
  }
  return out;
}

// out = a^T * g  (a: m x k, g: m x n, out: k x n)
Tensor gemm_tn(const Tensor& a, const Tensor& g) {
  const std::size_t m = a.rows(), k = a.cols(), n = g.cols();
  Tensor out = Tensor::matrix(k, n);
  const double* ap = a.data().data();
  const double* gp = g.data().data();
  double* op = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = gp + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ap[i * k + p];
      if (av == 0.0) continue;
      double* orow = op + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
  return out;
}

Tensor column_sums(const Tensor& g) {
  Tensor out = Tensor::matrix(1, g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    auto r = g.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

double softplus_scalar(double x) {
  // log(1 + e^x) without overflow; exact to double precision past |x| > 30.
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Fwd, typename Deriv>
Var unary(Var x, const char* op, Fwd fwd, Deriv deriv) {
  const Tensor& xv = x.value();
  require_rank2(xv, op);
  Tensor out(xv.shape());
  auto src = xv.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fwd(src[i]);
  const std::uint32_t xid = x.id();
  return x.tape()->record(
      std::move(out), {x}, [xid, deriv](Tape& tape, const Tensor& g) {
        const Tensor& in = tape.value(xid);
        Tensor gx(in.shape());
        auto gi = gx.data();
        auto iv = in.data();
        auto go = g.data();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] = go[i] * deriv(iv[i]);
        tape.accumulate(xid, gx);
      });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  gemm_acc(av, bv, out);
  const std::uint32_t aid = a.id(), bid = b.id();
  return a.tape()->record(
      std::move(out), {a, b}, [aid, bid](Tape& tape, const Tensor& g) {
        if (tape.needs_grad(aid)) tape.accumulate(aid, gemm_nt(g, tape.value(bid)));
        if (tape.needs_grad(bid)) tape.accumulate(bid, gemm_tn(tape.value(aid), g));
      });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "add");
  require_rank2(bv, "add");
  const bool broadcast = is_row_broadcast(av, bv);
  if (!broadcast && !av.same_shape(bv)) shape_mismatch("add", av, bv);
  Tensor out = av;
  const std::size_t n = av.cols();
  auto dst = out.data();
  auto src = bv.data();
  if (broadcast) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i % n];
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const std::uint32_t aid = a.id(), bid = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [aid, bid, broadcast](Tape& tape, const Tensor& g) {
                            tape.accumulate(aid, g);
                            if (!tape.needs_grad(bid)) return;
                            tape.accumulate(bid, broadcast ? column_sums(g) : g);
                          });
}

Var subtract(Var a, Var b) { return add(a, negate(b)); }

Var multiply(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "multiply");
  if (!av.same_shape(bv)) shape_mismatch("multiply", av, bv);
  Tensor out = av;
  auto dst = out.data();
  auto src = bv.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  const std::uint32_t aid = a.id(), bid = b.id();
  return a.tape()->record(
      std::move(out), {a, b}, [aid, bid](Tape& tape, const Tensor& g) {
        auto go = g.data();
        if (tape.needs_grad(aid)) {
          Tensor ga = tape.value(bid);
          auto d = ga.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= go[i];
          tape.accumulate(aid, ga);
        }
        if (tape.needs_grad(bid)) {
          Tensor gb = tape.value(aid);
          auto d = gb.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= go[i];
          tape.accumulate(bid, gb);
        }
      });
}

Var affine(Var x, Var w, Var b) {
  const Tensor& bv = b.value();
  if (bv.rank() != 2 || bv.rows() != 1 || bv.cols() != w.value().cols()) {
    shape_mismatch("affine bias", w.value(), bv);
  }
  return add(matmul(x, w), b);
}

Var scale(Var x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return factor * v; },
      [factor](double) { return factor; });
}

Var negate(Var x) { return scale(x, -1.0); }

Var square(Var x) {
  return unary(
      x, "square", [](double v) { return v * v; },
      [](double v) { return 2.0 * v; });
}

Var tanh(Var x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
}

Var relu(Var x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var x) {
  return unary(x, "softplus", softplus_scalar, sigmoid_scalar);
}

Var exp(Var x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double v) { return std::exp(v); });
}

Var log(Var x) {
  return unary(
      x, "log", [](double v) { return std::log(v); },
      [](double v) { return 1.0 / v; });
}

Var logsumexp(Var x, int axis) {
  const Tensor& xv = x.value();
  require_rank2(xv, "logsumexp");
  if (axis != 0 && axis != 1) {
    throw std::invalid_argument("logsumexp axis must be 0 or 1");
  }
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out = axis == 1 ? Tensor::matrix(m, 1) : Tensor::matrix(1, n);
  const std::size_t groups = axis == 1 ? m : n;
  const std::size_t len = axis == 1 ? n : m;
  auto at = [&](std::size_t grp, std::size_t k) {
    return axis == 1 ? xv(grp, k) : xv(k, grp);
  };
  for (std::size_t grp = 0; grp < groups; ++grp) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, at(grp, k));
    if (!std::isfinite(mx)) {
      out[grp] = mx;
      continue;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < len; ++k) acc += std::exp(at(grp, k) - mx);
    out[grp] = mx + std::log(acc);
  }
  const std::uint32_t xid = x.id();
  Tensor result = out;
  return x.tape()->record(
      std::move(out), {x},
      [xid, axis, result = std::move(result)](Tape& tape, const Tensor& g) {
        const Tensor& in = tape.value(xid);
        Tensor gx(in.shape());
        const std::size_t rows = in.rows(), cols = in.cols();
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t grp = axis == 1 ? i : j;
            const double lse = result[grp];
            const double w =
                std::isfinite(lse) ? std::exp(in(i, j) - lse) : 0.0;
            gx(i, j) = g[grp] * w;
          }
        }
        tape.accumulate(xid, gx);
      });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "sum");
  double acc = 0.0;
  for (double v : xv.data()) acc += v;
  const std::uint32_t xid = x.id();
  return x.tape()->record(Tensor::scalar(acc), {x},
                          [xid](Tape& tape, const Tensor& g) {
                            tape.accumulate(
                                xid, Tensor(tape.value(xid).shape(), g.item()));
                          });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat axis");
  Tape* tape = parts.front().tape();
  const Tensor& first = parts.front().value();
  std::size_t total = 0;
  for (Var p : parts) {
    require_same_tape(parts.front(), p);
    const Tensor& pv = p.value();
    require_rank2(pv, "concat");
    if (axis == 1 && pv.rows() != first.rows()) shape_mismatch("concat", first, pv);
    if (axis == 0 && pv.cols() != first.cols()) shape_mismatch("concat", first, pv);
    total += axis == 1 ? pv.cols() : pv.rows();
  }
  Tensor out = axis == 1 ? Tensor::matrix(first.rows(), total)
                         : Tensor::matrix(total, first.cols());
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    ids.push_back(p.id());
    offsets.push_back(off);
    for (std::size_t i = 0; i < pv.rows(); ++i) {
      for (std::size_t j = 0; j < pv.cols(); ++j) {
        if (axis == 1) {
          out(i, off + j) = pv(i, j);
        } else {
          out(off + i, j) = pv(i, j);
        }
      }
    }
    off += axis == 1 ? pv.cols() : pv.rows();
  }
  return tape->record(
      std::move(out), parts,
      [ids, offsets, axis](Tape& t, const Tensor& g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.needs_grad(ids[k])) continue;
          const Tensor& pv = t.value(ids[k]);
          Tensor gp(pv.shape());
          for (std::size_t i = 0; i < pv.rows(); ++i) {
            for (std::size_t j = 0; j < pv.cols(); ++j) {
              gp(i, j) = axis == 1 ? g(i, offsets[k] + j) : g(offsets[k] + i, j);
            }
          }
          t.accumulate(ids[k], gp);
        }
      });
}

Var slice(Var x, std::size_t begin, std::size_t end, int axis) {
  const Tensor& xv = x.value();
  require_rank2(xv, "slice");
  if (axis != 0 && axis != 1) throw std::invalid_argument("slice axis");
  const std::size_t extent = axis == 1 ? xv.cols() : xv.rows();
  if (begin > end || end > extent) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") out of range for shape " +
                     xv.shape_string());
  }
  const std::size_t width = end - begin;
  Tensor out = axis == 1 ? Tensor::matrix(xv.rows(), width)
                         : Tensor::matrix(width, xv.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(i, j) = axis == 1 ? xv(i, begin + j) : xv(begin + i, j);
    }
  }
  const std::uint32_t xid = x.id();
  return x.tape()->record(
      std::move(out), {x}, [xid, begin, axis](Tape& tape, const Tensor& g) {
        Tensor gx(tape.value(xid).shape());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) {
            if (axis == 1) {
              gx(i, begin + j) = g(i, j);
            } else {
              gx(begin + i, j) = g(i, j);
            }
          }
        }
        tape.accumulate(xid, gx);
      });
}

Var repeat_rows(Var x, std::size_t n) {
  if (x.value().rows() != 1) {
    throw ShapeError("repeat_rows expects a single row, got " +
                     x.value().shape_string());
  }
  if (n == 1) return x;
  return matmul(x.tape()->constant(Tensor::matrix(n, 1, 1.0)), x);
}

Var row_sum(Var x) {
  return matmul(x, x.tape()->constant(Tensor::matrix(x.value().cols(), 1, 1.0)));
}

}  // namespace sbi::ndiff
