// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode automatic differentiation over rank-2 double tensors.
//
// A Tape records every op in execution order; backward() walks it in reverse
// and accumulates gradients, so a value used twice receives the sum of both
// contributions. Parameters live outside the tape and receive their gradient
// through Tape::leaf. Constants never receive gradients.
//
// The only broadcast is add_bias (1 x n over the rows of an m x n matrix).

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "grassy/matrix.hpp"

namespace grassy::ad {

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name, Matrix value);
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1 x 1 tensor.
  double item() const;
  Tape& tape() const { return *tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives the tape and the id of the node whose gradient is ready.
  using Backward = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Free input that collects a gradient readable with grad().
  Var variable(Matrix value);
  /// Reads p.value; backward() adds the gradient into p.grad.
  Var leaf(Parameter& p);

  /// Used by op implementations. `fn` is dropped when no parent needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, Backward fn);
  Var record(Matrix value, const std::vector<Var>& parents, Backward fn);

  /// Throws NonScalarLoss unless loss is 1 x 1.
  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated on first use.
  Matrix& grad_buffer(int id);
  /// Gradient after backward(); zeros if nothing reached the node.
  Matrix grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  Var push(Node node);
  std::vector<Node> nodes_;
};

// Ops. Shape errors throw ShapeMismatch with both shapes in the message.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var add_bias(Var a, Var bias);  // bias is 1 x a.cols()
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var pow(Var a, double p);  // elementwise a^p, a > 0 unless p is a positive integer
Var abs_pow(Var a, int q);  // |a|^q; subgradient 0 at 0
Var softmax_rows(Var a);
Var sum(Var a);
Var mean(Var a);
Var sum_rows(Var a);  // m x n -> m x 1
Var frobenius_norm(Var a);  // gradient 0 at the zero matrix
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice(Var a, std::size_t row0, std::size_t row1, std::size_t col0, std::size_t col1);
Var transpose(Var a);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var clamp(Var a, double lo, double hi);  // gradient passes only inside [lo, hi]
/// 1 x n(n-1)/2 upper-triangle entries (row-major, i < j) -> symmetric n x n, zero diagonal.
Var sym_from_upper(Var v, std::size_t n);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }

// Adam.

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// One bias-corrected Adam update from each parameter's .grad. Moment buffers
/// are created on the first call; later shape drift throws ShapeMismatch.
void adam_step(std::span<Parameter* const> params, OptimizerState& state);

void zero_grad(std::span<Parameter* const> params);

// Finite-difference checking.

struct GradCheckResult {
  double max_error = 0.0;  // |a - n| / max(1, |a|, |n|)
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares backward() against central differences with step h on every
/// coordinate of every parameter. `loss` must rebuild the graph from scratch
/// on the tape it receives.
GradCheckResult gradient_check(std::span<Parameter* const> params,
                               const std::function<Var(Tape&)>& loss, double h = 1e-5);

}  // namespace grassy::ad
