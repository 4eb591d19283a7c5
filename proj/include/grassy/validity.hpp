// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Validity of generated adjacency matrices.
//
// A soft adjacency is thresholded (edge iff W_uv > tau) and reduced to its
// largest connected component. The component is molecule-like when it has
// more than min_atoms nodes, no ring longer than max_ring_size and no node of
// degree above max_degree. Rings are the cycles of a minimum cycle basis
// unless the all-circuits mode is selected.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grassy/matrix.hpp"

namespace grassy::validity {

enum class Rule { TooSmall, RingTooLarge, DegreeTooHigh };
const char* to_string(Rule r);

enum class RingMode { MinimumCycleBasis, AllCircuits };

struct ValidityConfig {
  double threshold = 0.5;
  std::size_t min_atoms = 5;
  std::size_t max_ring_size = 10;
  std::size_t max_degree = 5;
  RingMode ring_mode = RingMode::MinimumCycleBasis;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Validity threshold of a ZINC tranche: BBAB 5, FBAB 15, JBCD 25.
/// Throws InvalidConfig for other names.
std::size_t tranche_min_atoms(std::string_view tranche);

/// Unweighted simple graph on nodes 0..n-1.
struct BinaryGraph {
  std::size_t n = 0;
  std::vector<std::pair<int, int>> edges;  // u < v, sorted
  std::vector<int> source_nodes;           // node i came from row source_nodes[i]

  std::vector<std::vector<int>> neighbors() const;
  std::vector<int> degrees() const;
};

BinaryGraph from_adjacency(const Matrix& adjacency, double threshold = 0.5);

/// Threshold at tau, then keep the largest connected component. Ties go to
/// the component holding the lowest node index. Nodes keep their order.
BinaryGraph discretize(const Matrix& soft, double tau);

/// Cycle lengths of a minimum cycle basis, ascending. For a connected graph
/// there are |E| - |V| + 1 of them.
std::vector<std::size_t> ring_sizes(const BinaryGraph& g);

/// Whether some simple cycle is longer than `length`.
bool has_circuit_longer_than(const BinaryGraph& g, std::size_t length);

struct ValidityVerdict {
  bool valid = true;
  std::vector<Rule> failed_rules;
  std::size_t component_size = 0;
  std::size_t largest_ring = 0;  // largest minimum-cycle-basis ring in either mode
  std::size_t max_degree_found = 0;
};

ValidityVerdict check_validity(const BinaryGraph& g, const ValidityConfig& cfg);
/// discretize + check_validity.
ValidityVerdict check_soft(const Matrix& soft, const ValidityConfig& cfg);

/// Throws EmptySampleSet.
double validity_fraction(std::span<const Matrix> samples, const ValidityConfig& cfg);

struct ValiditySummary {
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t too_small = 0;
  std::size_t ring_too_large = 0;
  std::size_t degree_too_high = 0;

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(valid) / static_cast<double>(total); }
};

ValiditySummary summarize(std::span<const ValidityVerdict> verdicts);
/// Aligned text table keyed by rule.
std::string format_summary(const ValiditySummary& s);

}  // namespace grassy::validity
