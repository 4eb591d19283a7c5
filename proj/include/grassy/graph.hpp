// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Molecular graphs, the lazy random walk operator, label signals and the
// padding/permutation helpers used by the generator and invariance tests.

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grassy/matrix.hpp"

namespace grassy {

/// Ordered atom symbols; a node label is an index into this list.
class AtomAlphabet {
 public:
  /// C, N, O, S, F, Cl, Br, I, P, B
  AtomAlphabet();
  explicit AtomAlphabet(std::vector<std::string> symbols);

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::string& symbol(std::size_t i) const { return symbols_.at(i); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  std::optional<int> index_of(std::string_view symbol) const;

  friend bool operator==(const AtomAlphabet&, const AtomAlphabet&) = default;

 private:
  std::vector<std::string> symbols_;
};

/// Bond metadata. Only connectivity enters the diffusion operator; the order
/// is kept for reporting.
struct Bond {
  int u = 0;
  int v = 0;
  int order = 1;
};

/// Hydrogen-suppressed heavy-atom graph. Immutable after construction by
/// convention: every builder returns a fresh value.
struct MolecularGraph {
  std::string id;
  Matrix adjacency;  // symmetric 0/1, zero diagonal
  std::vector<int> labels;
  std::vector<Bond> bonds;
  std::map<std::string, double> properties;

  std::size_t n() const noexcept { return labels.size(); }
  std::size_t edge_count() const noexcept { return bonds.size(); }
  std::vector<int> degrees() const;
  std::vector<std::vector<int>> neighbors() const;
};

MolecularGraph build_graph(std::span<const std::pair<int, int>> edges, std::vector<int> labels,
                           const AtomAlphabet& alphabet);
MolecularGraph build_graph(std::span<const Bond> bonds, std::vector<int> labels,
                           const AtomAlphabet& alphabet);

/// P = 1/2 (I + W D^-1). Column-stochastic; immutable.
class DiffusionOperator {
 public:
  explicit DiffusionOperator(Matrix p);

  std::size_t n() const noexcept { return p_.rows(); }
  const Matrix& matrix() const noexcept { return p_; }

  /// P^t by repeated squaring.
  Matrix power(unsigned t) const;
  /// P^0 .. P^max_t, each obtained from the previous one by one product.
  std::vector<Matrix> powers(unsigned max_t) const;

 private:
  Matrix p_;
};

/// Isolated nodes get column e_i in W D^-1 so P stays column-stochastic.
DiffusionOperator lazy_walk(const Matrix& weights);
DiffusionOperator lazy_walk(const MolecularGraph& g);

/// P^t x by t matrix-vector products.
std::vector<double> diffuse(const DiffusionOperator& p, std::span<const double> x, unsigned t);

/// One indicator signal per alphabet symbol.
std::vector<std::vector<double>> label_signals(const MolecularGraph& g,
                                               const AtomAlphabet& alphabet);

Matrix pad_adjacency(const MolecularGraph& g, std::size_t n_max);
Matrix pad_matrix(const Matrix& m, std::size_t n_max);
/// Top-left n x n block.
Matrix crop(const Matrix& m, std::size_t n);

/// Node i of g becomes node perm[i] of the result.
MolecularGraph permute(const MolecularGraph& g, std::span<const int> perm);

}  // namespace grassy
