// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Diffusion wavelets and geometric scattering moments.
//
// Wavelets are differences of selected diffusions. A bank is described by a
// (J+1) x (T+1) row-stochastic selector F over the powers P^0..P^T: row r
// picks the diffusion s_{r+1} = sum_t F[r,t] P^t and
//
//   Psi_0 = I - s_1,   Psi_j = s_j - s_{j+1}   (1 <= j <= J).
//
// The dyadic bank is the one-hot selector s_j = P^(2^(j-1)), so
// Psi_j = P^(2^(j-1)) - P^(2^j). A learned bank uses arbitrary rows.
//
// Moments of a signal x (one per atom label), for q = 1..Q:
//   order 0: sum_v |x(v)|^q
//   order 1: sum_v |Psi_j x (v)|^q                     1 <= j <= J
//   order 2: sum_v |Psi_j' |Psi_j x| (v)|^q            1 <= j, j' <= J
//
// Feature layout: signal-major; within a signal, order 0 (q), then order 1
// (j, q), then order 2 (j, j', q), with q innermost.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "grassy/autodiff.hpp"
#include "grassy/graph.hpp"
#include "grassy/matrix.hpp"

namespace grassy::scattering {

enum class Mode { Dyadic, Learned };

struct ScatteringConfig {
  int J = 4;
  int Q = 2;
  int T = 16;  // largest diffusion step a learned selector can pick
  Mode mode = Mode::Dyadic;
  bool all_second_order_pairs = true;  // false keeps only j' > j
  bool include_zeroth_order = true;

  /// Throws InvalidConfig.
  void validate() const;
  /// Number of diffusion steps the bank needs: 2^J for dyadic, T for learned.
  int max_step() const;
};

std::size_t feature_dimension(const ScatteringConfig& cfg, std::size_t num_signals);

/// One entry of the feature index map.
struct FeatureIndex {
  int signal = 0;
  int order = 0;
  int j = 0;   // 0 for order 0
  int jp = 0;  // 0 unless order 2
  int q = 1;
};

std::vector<FeatureIndex> feature_index(const ScatteringConfig& cfg, std::size_t num_signals);
/// "C|o2|j1|jp3|q2" style column names.
std::vector<std::string> feature_names(const ScatteringConfig& cfg, const AtomAlphabet& alphabet);

/// Dyadic one-hot selector, (J+1) x (T+1). Requires T >= 2^J.
Matrix dyadic_selector(int J, int T);

class WaveletBank {
 public:
  int scales() const noexcept { return static_cast<int>(selector_.rows()) - 1; }
  int max_step() const noexcept { return static_cast<int>(selector_.cols()) - 1; }
  std::size_t node_count() const noexcept { return p_.n(); }
  const Matrix& selector() const noexcept { return selector_; }
  const DiffusionOperator& diffusion() const noexcept { return p_; }

  /// Explicit n x n operator Psi_j, 0 <= j <= J.
  Matrix psi(int j) const;

  /// Psi_0 x .. Psi_J x, computed from the diffusion sequence P^t x.
  std::vector<std::vector<double>> apply(std::span<const double> x) const;

  friend WaveletBank build_dyadic_bank(const DiffusionOperator& p, int J);
  friend WaveletBank build_learned_bank(const DiffusionOperator& p, const Matrix& selector);

 private:
  WaveletBank(DiffusionOperator p, Matrix selector);
  DiffusionOperator p_;
  Matrix selector_;
};

WaveletBank build_dyadic_bank(const DiffusionOperator& p, int J);
/// Throws NotRowStochastic unless every row is nonnegative and sums to 1.
WaveletBank build_learned_bank(const DiffusionOperator& p, const Matrix& selector);

using ScatteringFeature = std::vector<double>;

/// Moments of all label signals of g. Throws BankGraphMismatch when the bank
/// was built for a different node count or scale count.
ScatteringFeature scattering_moments(const MolecularGraph& g, const AtomAlphabet& alphabet,
                                     const WaveletBank& bank, const ScatteringConfig& cfg);

/// Convenience: builds P and the bank for g (dyadic, or learned from selector).
ScatteringFeature scattering_moments(const MolecularGraph& g, const AtomAlphabet& alphabet,
                                     const ScatteringConfig& cfg, const Matrix* selector = nullptr);

/// Row i holds the features of graph i. Work is spread over `threads` workers
/// (0 = GRASSY_THREADS or hardware concurrency); row order always follows the
/// input. Per-graph failures are rethrown with the graph id attached.
Matrix featurize_dataset(std::span<const MolecularGraph> graphs, const AtomAlphabet& alphabet,
                         const ScatteringConfig& cfg, const Matrix* selector = nullptr,
                         unsigned threads = 0);

// Differentiable path for learned scales.

/// Per-graph constants reused across training steps: the stacked powers
/// P^0..P^T and, for every label signal present in the graph, the diffusion
/// sequence Y with row t = (P^t x)^T.
struct ScatteringPlan {
  std::size_t n = 0;
  Matrix power_stack;               // (T+1)n x n, block t = P^t
  std::vector<Matrix> diffusions;   // per signal, (T+1) x n; empty when the signal is absent
  std::vector<double> zeroth;       // per signal, Q entries
};

ScatteringPlan make_plan(const MolecularGraph& g, const AtomAlphabet& alphabet, const ScatteringConfig& cfg);

/// Initial logits whose row softmax concentrates on the dyadic steps; `gap`
/// is the logit margin of the selected step.
Matrix dyadic_logits(int J, int T, double gap = 10.0);

/// 1 x feature_dimension moments recorded on the tape as a function of the
/// selector (J+1) x (T+1). Same layout and values as scattering_moments.
ad::Var scattering_moments(ad::Tape& tape, ad::Var selector, const ScatteringPlan& plan,
                           const ScatteringConfig& cfg);

/// Worker count from GRASSY_THREADS (capped by hardware concurrency, min 1).
unsigned default_thread_count();

}  // namespace grassy::scattering
