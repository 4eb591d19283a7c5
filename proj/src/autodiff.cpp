// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "grassy/error.hpp"
#include "grassy/kernels.hpp"

namespace grassy::ad {
namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape())
    throw Error(ErrorKind::ShapeMismatch, "operands live on different tapes");
  return a.tape();
}

// Elementwise unary op whose derivative depends on the input x and output y.
template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Matrix out = a.value();
  for (double& v : out.data()) v = fwd(v);
  const int ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, deriv](Tape& t, int self) {
    const Matrix& g = t.grad_buffer(self);
    const Matrix& x = t.value(ia);
    const Matrix& y = t.value(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw Error(ErrorKind::ShapeMismatch, "item() on " + shape_string(v));
  return v[0];
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return push(Node{std::move(value), {}, false, {}, nullptr}); }

Var Tape::variable(Matrix value) { return push(Node{std::move(value), {}, true, {}, nullptr}); }

Var Tape::leaf(Parameter& p) { return push(Node{p.value, {}, true, {}, &p}); }

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward fn) {
  return record(std::move(value), std::vector<Var>(parents), std::move(fn));
}

Var Tape::record(Matrix value, const std::vector<Var>& parents, Backward fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (&p.tape() != this) throw Error(ErrorKind::ShapeMismatch, "operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  return push(Node{std::move(value), {}, needs, needs ? std::move(fn) : Backward{}, nullptr});
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.same_shape(n.value) && n.grad.size() == n.value.size()) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw Error(ErrorKind::NonScalarLoss, "loss belongs to another tape");
  if (loss.value().size() != 1)
    throw Error(ErrorKind::NonScalarLoss, "backward() needs a 1x1 loss, got " + shape_string(loss.value()));
  for (Node& n : nodes_) n.grad = Matrix();
  grad_buffer(loss.id())[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      if (!n.param->grad.same_shape(n.param->value)) n.param->grad = Matrix(n.param->value.rows(), n.param->value.cols());
      n.param->grad += nodes_[id].grad;
    }
  }
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const std::size_t M = av.rows(), K = av.cols(), N = bv.cols();
  Matrix out(M, N);
  kernels::active().gemm_acc(av.data().data(), bv.data().data(), out.data().data(), M, K, N);
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib, M, K, N](Tape& tp, int self) {
    const auto& k = kernels::active();
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) {
      Matrix& ga = tp.grad_buffer(ia);
      k.gemm_nt_acc(g.data().data(), tp.value(ib).data().data(), ga.data().data(), M, N, K);
    }
    if (tp.requires_grad(ib)) {
      Matrix& gb = tp.grad_buffer(ib);
      k.gemm_tn_acc(tp.value(ia).data().data(), g.data().data(), gb.data().data(), K, M, N);
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Matrix out = a.value();
  out += b.value();
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
    if (tp.requires_grad(ib)) tp.grad_buffer(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
  Matrix out = a.value();
  out -= b.value();
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
    if (tp.requires_grad(ib)) tp.grad_buffer(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) {
      Matrix& ga = tp.grad_buffer(ia);
      const Matrix& bv = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Matrix& gb = tp.grad_buffer(ib);
      const Matrix& av = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = same_tape(a, bias);
  const Matrix& av = a.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) shape_error("add_bias", av, bv);
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  const int ia = a.id(), ib = bias.id();
  return t.record(std::move(out), {a, bias}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g;
    if (tp.requires_grad(ib)) {
      Matrix& gb = tp.grad_buffer(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var pow(Var a, double p) {
  return unary(a, [p](double x) { return std::pow(x, p); },
               [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

Var abs_pow(Var a, int q) {
  if (q < 1) throw Error(ErrorKind::ShapeMismatch, "abs_pow needs q >= 1");
  if (q == 1)
    return unary(a, [](double x) { return std::fabs(x); },
                 [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  if (q == 2) return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
  return unary(a, [q](double x) { return std::pow(std::fabs(x), q); },
               [q](double x, double) {
                 const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                 return s * q * std::pow(std::fabs(x), q - 1);
               });
}

Var softmax_rows(Var a) {
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row_span(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  const int ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& s = tp.value(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < s.cols(); ++c) dot += g(r, c) * s(r, c);
      for (std::size_t c = 0; c < s.cols(); ++c) ga(r, c) += s(r, c) * (g(r, c) - dot);
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const int ia = a.id();
  return a.tape().record(Matrix(1, 1, s), {a}, [ia](Tape& tp, int self) {
    const double g = tp.grad_buffer(self)[0];
    for (double& v : tp.grad_buffer(ia).data()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw Error(ErrorKind::ShapeMismatch, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_rows(Var a) {
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (double v : av.row_span(r)) out[r] += v;
  const int ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (double& v : ga.row_span(r)) v += g[r];
  });
}

Var frobenius_norm(Var a) {
  double ss = 0.0;
  for (double v : a.value().data()) ss += v * v;
  const int ia = a.id();
  return a.tape().record(Matrix(1, 1, std::sqrt(ss)), {a}, [ia](Tape& tp, int self) {
    const double norm = tp.value(self)[0];
    if (norm == 0.0) return;
    const double g = tp.grad_buffer(self)[0] / norm;
    const Matrix& x = tp.value(ia);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g * x[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p.value()(r, c);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.cols();
  }
  return parts[0].tape().record(std::move(out), parts, [ids, offsets](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Matrix& gp = tp.grad_buffer(ids[k]);
      for (std::size_t r = 0; r < gp.rows(); ++r)
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offsets[k] + c);
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::ShapeMismatch, "concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    offsets.push_back(data.size());
    ids.push_back(p.id());
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
  }
  return parts[0].tape().record(Matrix(rows, cols, std::move(data)), parts, [ids, offsets](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Matrix& gp = tp.grad_buffer(ids[k]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
    }
  });
}

Var slice(Var a, std::size_t row0, std::size_t row1, std::size_t col0, std::size_t col1) {
  const Matrix& av = a.value();
  if (row0 > row1 || row1 > av.rows() || col0 > col1 || col1 > av.cols())
    throw Error(ErrorKind::ShapeMismatch, "slice [" + std::to_string(row0) + "," + std::to_string(row1) + ")x[" +
                                              std::to_string(col0) + "," + std::to_string(col1) + ") of " + shape_string(av));
  Matrix out(row1 - row0, col1 - col0);
  for (std::size_t r = row0; r < row1; ++r)
    for (std::size_t c = col0; c < col1; ++c) out(r - row0, c - col0) = av(r, c);
  const int ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, row0, col0](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(row0 + r, col0 + c) += g(r, c);
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  return a.tape().record(a.value().transposed(), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(c, r) += g(r, c);
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.value().size())
    throw Error(ErrorKind::ShapeMismatch, "reshape " + shape_string(a.value()) + " to (" + std::to_string(rows) + "x" + std::to_string(cols) + ")");
  const int ia = a.id();
  return a.tape().record(Matrix(rows, cols, a.value().values()), {a}, [ia](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sym_from_upper(Var v, std::size_t n) {
  const Matrix& vv = v.value();
  const std::size_t m = n * (n - 1) / 2;
  if (vv.size() != m)
    throw Error(ErrorKind::ShapeMismatch, "sym_from_upper: " + shape_string(vv) + " for n=" + std::to_string(n));
  Matrix out(n, n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k) out(i, j) = out(j, i) = vv[k];
  const int iv = v.id();
  return v.tape().record(std::move(out), {v}, [iv, n](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& gv = tp.grad_buffer(iv);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j, ++k) gv[k] += g(i, j) + g(j, i);
  });
}

void adam_step(std::span<Parameter* const> params, OptimizerState& state) {
  if (state.m.empty() && state.v.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorKind::ShapeMismatch, "optimizer tracks " + std::to_string(state.m.size()) +
                                              " tensors, got " + std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (!p.grad.same_shape(p.value)) shape_error(("adam_step grad of " + p.name).c_str(), p.value, p.grad);
    if (!state.m[k].same_shape(p.value)) shape_error(("adam_step moments of " + p.name).c_str(), p.value, state.m[k]);
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) {
    if (!p->grad.same_shape(p->value)) p->grad = Matrix(p->value.rows(), p->value.cols());
    p->zero_grad();
  }
}

GradCheckResult gradient_check(std::span<Parameter* const> params,
                               const std::function<Var(Tape&)>& loss, double h) {
  zero_grad(params);
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  GradCheckResult res;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      double fp, fm;
      {
        Tape tape;
        fp = loss(tape).item();
      }
      p.value[i] = orig - h;
      {
        Tape tape;
        fm = loss(tape).item();
      }
      p.value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p.grad[i];
      const double err = std::fabs(analytic - numeric) / std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      ++res.coordinates;
      if (err > res.max_error || res.coordinates == 1) {
        res.max_error = err;
        res.worst_param = k;
        res.worst_index = i;
        res.analytic = analytic;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace grassy::ad
