// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/validity.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>

#include "grassy/error.hpp"

namespace grassy::validity {

const char* to_string(Rule r) {
  switch (r) {
    case Rule::TooSmall: return "TooSmall";
    case Rule::RingTooLarge: return "RingTooLarge";
    case Rule::DegreeTooHigh: return "DegreeTooHigh";
  }
  return "?";
}

void ValidityConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::InvalidConfig, "validity.threshold must lie in (0, 1)");
  if (min_atoms < 1) throw Error(ErrorKind::InvalidConfig, "validity.min_atoms must be >= 1");
  if (max_ring_size < 3) throw Error(ErrorKind::InvalidConfig, "validity.max_ring_size must be >= 3");
  if (max_degree < 1) throw Error(ErrorKind::InvalidConfig, "validity.max_degree must be >= 1");
}

std::size_t tranche_min_atoms(std::string_view tranche) {
  if (tranche == "BBAB") return 5;
  if (tranche == "FBAB") return 15;
  if (tranche == "JBCD") return 25;
  throw Error(ErrorKind::InvalidConfig, "unknown tranche '" + std::string(tranche) + "' (expected BBAB, FBAB or JBCD)");
}

std::vector<std::vector<int>> BinaryGraph::neighbors() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::vector<int> BinaryGraph::degrees() const {
  std::vector<int> d(n, 0);
  for (auto [u, v] : edges) {
    ++d[u];
    ++d[v];
  }
  return d;
}

BinaryGraph from_adjacency(const Matrix& a, double threshold) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "adjacency must be square, got " + shape_string(a));
  BinaryGraph g;
  g.n = a.rows();
  for (std::size_t u = 0; u < g.n; ++u) {
    g.source_nodes.push_back(static_cast<int>(u));
    for (std::size_t v = u + 1; v < g.n; ++v)
      if (a(u, v) > threshold) g.edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return g;
}

BinaryGraph discretize(const Matrix& soft, double tau) {
  const BinaryGraph full = from_adjacency(soft, tau);
  if (full.n == 0) return full;
  const auto adj = full.neighbors();
  std::vector<int> comp(full.n, -1);
  int best = -1;
  std::size_t best_size = 0;
  int count = 0;
  for (std::size_t s = 0; s < full.n; ++s) {
    if (comp[s] >= 0) continue;
    std::size_t size = 0;
    std::deque<int> queue{static_cast<int>(s)};
    comp[s] = count;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      ++size;
      for (int v : adj[u])
        if (comp[v] < 0) {
          comp[v] = count;
          queue.push_back(v);
        }
    }
    if (size > best_size) {
      best_size = size;
      best = count;
    }
    ++count;
  }
  BinaryGraph out;
  std::vector<int> remap(full.n, -1);
  for (std::size_t u = 0; u < full.n; ++u)
    if (comp[u] == best) {
      remap[u] = static_cast<int>(out.n++);
      out.source_nodes.push_back(static_cast<int>(u));
    }
  for (auto [u, v] : full.edges)
    if (comp[u] == best) out.edges.emplace_back(remap[u], remap[v]);
  return out;
}

namespace {

using Bits = std::vector<std::uint64_t>;

void flip(Bits& b, std::size_t i) { b[i >> 6] ^= std::uint64_t{1} << (i & 63); }
bool test(const Bits& b, std::size_t i) { return (b[i >> 6] >> (i & 63)) & 1u; }
bool any(const Bits& b) {
  return std::any_of(b.begin(), b.end(), [](std::uint64_t w) { return w != 0; });
}
std::size_t lowest(const Bits& b) {
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k] != 0) return k * 64 + static_cast<std::size_t>(std::countr_zero(b[k]));
  return b.size() * 64;
}

std::size_t component_count(const BinaryGraph& g, const std::vector<std::vector<int>>& adj) {
  std::vector<bool> seen(g.n, false);
  std::size_t c = 0;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (seen[s]) continue;
    ++c;
    std::vector<int> stack{static_cast<int>(s)};
    seen[s] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
  }
  return c;
}

}  // namespace

std::vector<std::size_t> ring_sizes(const BinaryGraph& g) {
  const auto adj = g.neighbors();
  const std::size_t m = g.edges.size();
  const std::size_t dim = m + component_count(g, adj) - g.n;
  if (dim == 0) return {};

  std::map<std::pair<int, int>, std::size_t> edge_id;
  for (std::size_t e = 0; e < m; ++e) edge_id[g.edges[e]] = e;
  auto id_of = [&](int a, int b) { return edge_id.at({std::min(a, b), std::max(a, b)}); };
  const std::size_t words = (m + 63) / 64;

  // Horton candidates: for every root v and edge (x, y), the cycle made of the
  // BFS-tree paths v..x, v..y and the edge, kept when the two paths meet only at v.
  struct Candidate {
    std::size_t length;
    Bits bits;
  };
  std::vector<Candidate> candidates;
  std::vector<int> parent(g.n), dist(g.n), branch(g.n);
  for (std::size_t v = 0; v < g.n; ++v) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[v] = 0;
    parent[v] = -1;
    branch[v] = -1;
    std::deque<int> queue{static_cast<int>(v)};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int w : adj[u])
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          parent[w] = u;
          branch[w] = u == static_cast<int>(v) ? w : branch[u];
          queue.push_back(w);
        }
    }
    for (auto [x, y] : g.edges) {
      if (dist[x] < 0 || dist[y] < 0) continue;
      if (parent[x] == y || parent[y] == x) continue;  // tree edge
      const bool x_root = x == static_cast<int>(v);
      const bool y_root = y == static_cast<int>(v);
      if (!x_root && !y_root && branch[x] == branch[y]) continue;  // paths share more than v
      Bits bits(words, 0);
      flip(bits, id_of(x, y));
      for (int u = x; parent[u] >= 0; u = parent[u]) flip(bits, id_of(u, parent[u]));
      for (int u = y; parent[u] >= 0; u = parent[u]) flip(bits, id_of(u, parent[u]));
      candidates.push_back({static_cast<std::size_t>(dist[x] + dist[y] + 1), std::move(bits)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.length != b.length ? a.length < b.length : a.bits < b.bits; });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Candidate& a, const Candidate& b) { return a.bits == b.bits; }),
                   candidates.end());

  // Greedy independence test over GF(2), rows kept with distinct pivots.
  std::vector<Bits> basis;
  std::vector<std::size_t> pivots;
  std::vector<std::size_t> lengths;
  for (const Candidate& c : candidates) {
    Bits r = c.bits;
    for (std::size_t k = 0; k < basis.size(); ++k)
      if (test(r, pivots[k]))
        for (std::size_t w = 0; w < words; ++w) r[w] ^= basis[k][w];
    if (!any(r)) continue;
    pivots.push_back(lowest(r));
    basis.push_back(std::move(r));
    lengths.push_back(c.length);
    if (lengths.size() == dim) break;
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

bool has_circuit_longer_than(const BinaryGraph& g, std::size_t length) {
  if (g.n <= length) return false;
  const auto adj = g.neighbors();
  std::vector<bool> on_path(g.n, false);
  // Cycles are enumerated once per lowest vertex s, through vertices above s.
  for (std::size_t s = 0; s < g.n; ++s) {
    const int root = static_cast<int>(s);
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    on_path[s] = true;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next == adj[u].size()) {
        on_path[u] = false;
        stack.pop_back();
        continue;
      }
      const int w = adj[u][next++];
      if (w == root && stack.size() > length && stack.size() >= 3) {
        std::fill(on_path.begin(), on_path.end(), false);
        return true;
      }
      if (w > root && !on_path[w]) {
        on_path[w] = true;
        stack.emplace_back(w, 0);
      }
    }
  }
  return false;
}

ValidityVerdict check_validity(const BinaryGraph& g, const ValidityConfig& cfg) {
  ValidityVerdict v;
  v.component_size = g.n;
  for (int d : g.degrees()) v.max_degree_found = std::max(v.max_degree_found, static_cast<std::size_t>(d));
  const auto rings = ring_sizes(g);
  v.largest_ring = rings.empty() ? 0 : rings.back();

  if (g.n <= cfg.min_atoms) v.failed_rules.push_back(Rule::TooSmall);
  const bool ring_fail = cfg.ring_mode == RingMode::AllCircuits ? has_circuit_longer_than(g, cfg.max_ring_size)
                                                                : v.largest_ring > cfg.max_ring_size;
  if (ring_fail) v.failed_rules.push_back(Rule::RingTooLarge);
  if (v.max_degree_found > cfg.max_degree) v.failed_rules.push_back(Rule::DegreeTooHigh);
  v.valid = v.failed_rules.empty();
  return v;
}

ValidityVerdict check_soft(const Matrix& soft, const ValidityConfig& cfg) {
  return check_validity(discretize(soft, cfg.threshold), cfg);
}

double validity_fraction(std::span<const Matrix> samples, const ValidityConfig& cfg) {
  if (samples.empty()) throw Error(ErrorKind::EmptySampleSet, "validity fraction of an empty sample set");
  std::size_t valid = 0;
  for (const Matrix& s : samples) valid += check_soft(s, cfg).valid ? 1 : 0;
  return static_cast<double>(valid) / static_cast<double>(samples.size());
}

ValiditySummary summarize(std::span<const ValidityVerdict> verdicts) {
  ValiditySummary s;
  for (const ValidityVerdict& v : verdicts) {
    ++s.total;
    if (v.valid) ++s.valid;
    for (Rule r : v.failed_rules) {
      if (r == Rule::TooSmall) ++s.too_small;
      if (r == Rule::RingTooLarge) ++s.ring_too_large;
      if (r == Rule::DegreeTooHigh) ++s.degree_too_high;
    }
  }
  return s;
}

std::string format_summary(const ValiditySummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-16s %8s\n%-16s %8zu\n%-16s %8zu\n%-16s %8zu\n%-16s %8zu\n%-16s %8zu\n%-16s %8.4f\n",
                "rule", "count", "samples", s.total, "valid", s.valid, "TooSmall", s.too_small, "RingTooLarge",
                s.ring_too_large, "DegreeTooHigh", s.degree_too_high, "fraction", s.fraction());
  return buf;
}

}  // namespace grassy::validity
