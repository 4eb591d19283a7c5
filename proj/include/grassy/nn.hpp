// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "grassy/autodiff.hpp"
#include "grassy/random.hpp"

namespace grassy::nn {

enum class Activation { None, Relu, Tanh, Sigmoid };

ad::Var activate(ad::Var x, Activation a);

/// y = x W + b, rows of x are samples.
class Linear {
 public:
  Linear() = default;
  /// Glorot-uniform weights, zero bias.
  Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng);

  ad::Var forward(ad::Tape& tape, ad::Var x);
  std::size_t in_features() const { return weight.value.rows(); }
  std::size_t out_features() const { return weight.value.cols(); }

  ad::Parameter weight;
  ad::Parameter bias;
};

class Mlp {
 public:
  Mlp() = default;
  /// dims = {in, hidden..., out}. `hidden` applies between layers, `output` after the last.
  Mlp(const std::vector<std::size_t>& dims, Activation hidden, Activation output, const std::string& name,
      Rng& rng);

  ad::Var forward(ad::Tape& tape, ad::Var x);
  /// Same graph with the weights recorded as constants, so nothing reaches
  /// this network's gradients.
  ad::Var forward_frozen(ad::Tape& tape, ad::Var x) const;
  /// Gradient-free evaluation; bitwise equal to the taped path. Safe to call
  /// concurrently on a model nobody is training.
  Matrix forward(const Matrix& x) const;

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }
  bool empty() const { return layers_.empty(); }

 private:
  std::vector<Linear> layers_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::None;
};

/// Copies parameter values (not gradients) between equally shaped sets.
void copy_values(const std::vector<ad::Parameter*>& from, const std::vector<ad::Parameter*>& to);
std::vector<Matrix> snapshot(const std::vector<ad::Parameter*>& params);
void restore(const std::vector<ad::Parameter*>& params, const std::vector<Matrix>& values);

}  // namespace grassy::nn
