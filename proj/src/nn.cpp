// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/nn.hpp"

#include <cmath>

#include "grassy/error.hpp"

namespace grassy::nn {

ad::Var activate(ad::Var x, Activation a) {
  switch (a) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
    case Activation::None: break;
  }
  return x;
}

Linear::Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(in, out);
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  weight = ad::Parameter(name + ".weight", std::move(w));
  bias = ad::Parameter(name + ".bias", Matrix(1, out));
}

ad::Var Linear::forward(ad::Tape& tape, ad::Var x) {
  return ad::add_bias(ad::matmul(x, tape.leaf(weight)), tape.leaf(bias));
}

Mlp::Mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output, const std::string& name,
         Rng& rng)
    : hidden_(hidden), output_(output) {
  if (dims.size() < 2) throw Error(ErrorKind::InvalidConfig, name + ": an MLP needs input and output sizes");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw Error(ErrorKind::InvalidConfig, name + ": zero-width layer");
    layers_.emplace_back(dims[i], dims[i + 1], name + "." + std::to_string(i), rng);
  }
}

ad::Var Mlp::forward(ad::Tape& tape, ad::Var x) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(tape, x);
    x = activate(x, i + 1 == layers_.size() ? output_ : hidden_);
  }
  return x;
}

ad::Var Mlp::forward_frozen(ad::Tape& tape, ad::Var x) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = ad::add_bias(ad::matmul(x, tape.constant(layers_[i].weight.value)), tape.constant(layers_[i].bias.value));
    x = activate(x, i + 1 == layers_.size() ? output_ : hidden_);
  }
  return x;
}

Matrix Mlp::forward(const Matrix& x) const {
  ad::Tape tape;
  return forward_frozen(tape, tape.constant(x)).value();
}

std::vector<ad::Parameter*> Mlp::parameters() {
  std::vector<ad::Parameter*> out;
  for (Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const ad::Parameter*> Mlp::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void copy_values(const std::vector<ad::Parameter*>& from, const std::vector<ad::Parameter*>& to) {
  if (from.size() != to.size()) throw Error(ErrorKind::ShapeMismatch, "parameter lists differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i]->value.same_shape(to[i]->value))
      throw Error(ErrorKind::ShapeMismatch, from[i]->name + " " + shape_string(from[i]->value) + " vs " +
                                                to[i]->name + " " + shape_string(to[i]->value));
    to[i]->value = from[i]->value;
  }
}

std::vector<Matrix> snapshot(const std::vector<ad::Parameter*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const ad::Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<ad::Parameter*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values.at(i);
}

}  // namespace grassy::nn
