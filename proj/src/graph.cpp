// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/graph.hpp"

#include <algorithm>
#include <set>

#include "grassy/error.hpp"

namespace grassy {

AtomAlphabet::AtomAlphabet() : AtomAlphabet({"C", "N", "O", "S", "F", "Cl", "Br", "I", "P", "B"}) {}

AtomAlphabet::AtomAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.empty()) throw Error(ErrorKind::InvalidConfig, "atom alphabet is empty");
  std::set<std::string> seen;
  for (const auto& s : symbols_)
    if (!seen.insert(s).second)
      throw Error(ErrorKind::InvalidConfig, "duplicate atom symbol '" + s + "'");
}

std::optional<int> AtomAlphabet::index_of(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    if (symbols_[i] == symbol) return static_cast<int>(i);
  return std::nullopt;
}

std::vector<int> MolecularGraph::degrees() const {
  std::vector<int> d(n(), 0);
  for (const Bond& b : bonds) {
    ++d[b.u];
    ++d[b.v];
  }
  return d;
}

std::vector<std::vector<int>> MolecularGraph::neighbors() const {
  std::vector<std::vector<int>> nb(n());
  for (const Bond& b : bonds) {
    nb[b.u].push_back(b.v);
    nb[b.v].push_back(b.u);
  }
  for (auto& list : nb) std::sort(list.begin(), list.end());
  return nb;
}

MolecularGraph build_graph(std::span<const std::pair<int, int>> edges, std::vector<int> labels,
                           const AtomAlphabet& alphabet) {
  std::vector<Bond> bonds;
  bonds.reserve(edges.size());
  for (auto [u, v] : edges) bonds.push_back({u, v, 1});
  return build_graph(bonds, std::move(labels), alphabet);
}

MolecularGraph build_graph(std::span<const Bond> bonds, std::vector<int> labels,
                           const AtomAlphabet& alphabet) {
  const int n = static_cast<int>(labels.size());
  if (n < 1) throw Error(ErrorKind::OutOfRangeNode, "a graph needs at least one node");
  for (int i = 0; i < n; ++i)
    if (labels[i] < 0 || labels[i] >= static_cast<int>(alphabet.size()))
      throw Error(ErrorKind::UnknownLabel, "node " + std::to_string(i) + " has label index " +
                                               std::to_string(labels[i]) + " outside alphabet of size " +
                                               std::to_string(alphabet.size()));
  MolecularGraph g;
  g.labels = std::move(labels);
  g.adjacency = Matrix(n, n);
  for (const Bond& b : bonds) {
    if (b.u < 0 || b.u >= n || b.v < 0 || b.v >= n)
      throw Error(ErrorKind::OutOfRangeNode, "edge (" + std::to_string(b.u) + "," +
                                                 std::to_string(b.v) + ") with n=" + std::to_string(n));
    if (b.u == b.v) throw Error(ErrorKind::SelfLoop, "self loop on node " + std::to_string(b.u));
    if (g.adjacency(b.u, b.v) != 0.0) continue;
    g.adjacency(b.u, b.v) = 1.0;
    g.adjacency(b.v, b.u) = 1.0;
    g.bonds.push_back({std::min(b.u, b.v), std::max(b.u, b.v), b.order});
  }
  return g;
}

DiffusionOperator::DiffusionOperator(Matrix p) : p_(std::move(p)) {
  if (p_.rows() != p_.cols())
    throw Error(ErrorKind::DimensionMismatch, "diffusion operator must be square, got " + shape_string(p_));
}

Matrix DiffusionOperator::power(unsigned t) const {
  Matrix result = Matrix::identity(n());
  Matrix base = p_;
  while (t > 0) {
    if (t & 1u) result = matmul(result, base);
    t >>= 1u;
    if (t > 0) base = matmul(base, base);
  }
  return result;
}

std::vector<Matrix> DiffusionOperator::powers(unsigned max_t) const {
  std::vector<Matrix> out;
  out.reserve(max_t + 1);
  out.push_back(Matrix::identity(n()));
  for (unsigned t = 1; t <= max_t; ++t) out.push_back(matmul(p_, out.back()));
  return out;
}

DiffusionOperator lazy_walk(const Matrix& w) {
  const std::size_t n = w.rows();
  if (w.cols() != n) throw Error(ErrorKind::DimensionMismatch, "weights must be square, got " + shape_string(w));
  Matrix p(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double degree = 0.0;
    for (std::size_t i = 0; i < n; ++i) degree += w(i, j);
    if (degree == 0.0) {
      p(j, j) = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) p(i, j) = 0.5 * w(i, j) / degree;
    p(j, j) += 0.5;
  }
  return DiffusionOperator(std::move(p));
}

DiffusionOperator lazy_walk(const MolecularGraph& g) { return lazy_walk(g.adjacency); }

std::vector<double> diffuse(const DiffusionOperator& p, std::span<const double> x, unsigned t) {
  if (x.size() != p.n())
    throw Error(ErrorKind::DimensionMismatch, "signal length " + std::to_string(x.size()) +
                                                  " for operator on " + std::to_string(p.n()) + " nodes");
  std::vector<double> cur(x.begin(), x.end());
  for (unsigned s = 0; s < t; ++s) cur = matvec(p.matrix(), cur);
  return cur;
}

std::vector<std::vector<double>> label_signals(const MolecularGraph& g,
                                               const AtomAlphabet& alphabet) {
  std::vector<std::vector<double>> signals(alphabet.size(), std::vector<double>(g.n(), 0.0));
  for (std::size_t v = 0; v < g.n(); ++v) {
    const int label = g.labels[v];
    if (label < 0 || label >= static_cast<int>(alphabet.size()))
      throw Error(ErrorKind::UnknownLabel, "node " + std::to_string(v) + " label " + std::to_string(label));
    signals[label][v] = 1.0;
  }
  return signals;
}

Matrix pad_matrix(const Matrix& m, std::size_t n_max) {
  if (m.rows() > n_max || m.cols() > n_max)
    throw Error(ErrorKind::GraphTooLarge, shape_string(m) + " does not fit in " + std::to_string(n_max));
  Matrix out(n_max, n_max);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  return out;
}

Matrix pad_adjacency(const MolecularGraph& g, std::size_t n_max) {
  if (g.n() > n_max)
    throw Error(ErrorKind::GraphTooLarge, "graph with " + std::to_string(g.n()) +
                                              " nodes exceeds n_max=" + std::to_string(n_max));
  return pad_matrix(g.adjacency, n_max);
}

Matrix crop(const Matrix& m, std::size_t n) {
  if (n > m.rows() || n > m.cols())
    throw Error(ErrorKind::DimensionMismatch, "cannot crop " + shape_string(m) + " to " + std::to_string(n));
  Matrix out(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = m(r, c);
  return out;
}

MolecularGraph permute(const MolecularGraph& g, std::span<const int> perm) {
  const std::size_t n = g.n();
  if (perm.size() != n)
    throw Error(ErrorKind::InvalidPermutation, "permutation of length " + std::to_string(perm.size()) +
                                                   " for " + std::to_string(n) + " nodes");
  std::vector<char> hit(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(n) || hit[p])
      throw Error(ErrorKind::InvalidPermutation, "not a bijection on 0.." + std::to_string(n - 1));
    hit[p] = 1;
  }
  MolecularGraph out;
  out.id = g.id;
  out.properties = g.properties;
  out.labels.resize(n);
  out.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out.labels[perm[i]] = g.labels[i];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.adjacency(perm[i], perm[j]) = g.adjacency(i, j);
  for (const Bond& b : g.bonds) {
    const int u = perm[b.u], v = perm[b.v];
    out.bonds.push_back({std::min(u, v), std::max(u, v), b.order});
  }
  return out;
}

}  // namespace grassy
