// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/scattering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "grassy/error.hpp"
#include "grassy/kernels.hpp"

namespace grassy::scattering {

void ScatteringConfig::validate() const {
  if (J < 1) throw Error(ErrorKind::InvalidConfig, "scattering.J must be >= 1, got " + std::to_string(J));
  if (J > 10) throw Error(ErrorKind::InvalidConfig, "scattering.J must be <= 10, got " + std::to_string(J));
  if (Q < 1) throw Error(ErrorKind::InvalidConfig, "scattering.Q must be >= 1, got " + std::to_string(Q));
  if (mode == Mode::Learned && T < (1 << J))
    throw Error(ErrorKind::InvalidConfig, "scattering.T must be >= 2^J = " + std::to_string(1 << J) +
                                              " in learned mode, got " + std::to_string(T));
}

int ScatteringConfig::max_step() const { return mode == Mode::Learned ? T : (1 << J); }

std::size_t feature_dimension(const ScatteringConfig& cfg, std::size_t num_signals) {
  const std::size_t J = static_cast<std::size_t>(cfg.J);
  const std::size_t pairs = cfg.all_second_order_pairs ? J * J : J * (J - 1) / 2;
  const std::size_t per_q = (cfg.include_zeroth_order ? 1 : 0) + J + pairs;
  return num_signals * static_cast<std::size_t>(cfg.Q) * per_q;
}

std::vector<FeatureIndex> feature_index(const ScatteringConfig& cfg, std::size_t num_signals) {
  std::vector<FeatureIndex> out;
  out.reserve(feature_dimension(cfg, num_signals));
  for (int s = 0; s < static_cast<int>(num_signals); ++s) {
    if (cfg.include_zeroth_order)
      for (int q = 1; q <= cfg.Q; ++q) out.push_back({s, 0, 0, 0, q});
    for (int j = 1; j <= cfg.J; ++j)
      for (int q = 1; q <= cfg.Q; ++q) out.push_back({s, 1, j, 0, q});
    for (int j = 1; j <= cfg.J; ++j)
      for (int jp = 1; jp <= cfg.J; ++jp) {
        if (!cfg.all_second_order_pairs && jp <= j) continue;
        for (int q = 1; q <= cfg.Q; ++q) out.push_back({s, 2, j, jp, q});
      }
  }
  return out;
}

std::vector<std::string> feature_names(const ScatteringConfig& cfg, const AtomAlphabet& alphabet) {
  std::vector<std::string> names;
  for (const FeatureIndex& f : feature_index(cfg, alphabet.size())) {
    std::string s = alphabet.symbol(f.signal) + "|o" + std::to_string(f.order);
    if (f.order >= 1) s += "|j" + std::to_string(f.j);
    if (f.order == 2) s += "|jp" + std::to_string(f.jp);
    s += "|q" + std::to_string(f.q);
    names.push_back(std::move(s));
  }
  return names;
}

Matrix dyadic_selector(int J, int T) {
  if (J < 1 || T < (1 << J))
    throw Error(ErrorKind::InvalidConfig, "dyadic selector needs J >= 1 and T >= 2^J");
  Matrix f(J + 1, T + 1);
  for (int r = 0; r <= J; ++r) f(r, 1 << r) = 1.0;
  return f;
}

WaveletBank::WaveletBank(DiffusionOperator p, Matrix selector)
    : p_(std::move(p)), selector_(std::move(selector)) {}

WaveletBank build_dyadic_bank(const DiffusionOperator& p, int J) {
  return WaveletBank(p, dyadic_selector(J, 1 << J));
}

WaveletBank build_learned_bank(const DiffusionOperator& p, const Matrix& selector) {
  if (selector.rows() < 2 || selector.cols() < 2)
    throw Error(ErrorKind::NotRowStochastic, "selector must be at least 2x2, got " + shape_string(selector));
  for (std::size_t r = 0; r < selector.rows(); ++r) {
    double sum = 0.0;
    for (double v : selector.row_span(r)) {
      if (!(v >= 0.0)) throw Error(ErrorKind::NotRowStochastic, "selector row " + std::to_string(r) + " has a negative or NaN weight");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw Error(ErrorKind::NotRowStochastic, "selector row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
  return WaveletBank(p, selector);
}

Matrix WaveletBank::psi(int j) const {
  const int J = scales();
  if (j < 0 || j > J) throw Error(ErrorKind::InvalidConfig, "wavelet index " + std::to_string(j) + " outside 0.." + std::to_string(J));
  const std::vector<Matrix> powers = p_.powers(static_cast<unsigned>(max_step()));
  auto selection = [&](int r) {
    Matrix s(node_count(), node_count());
    for (int t = 0; t <= max_step(); ++t)
      if (selector_(r, t) != 0.0) s += powers[t] * selector_(r, t);
    return s;
  };
  if (j == 0) return Matrix::identity(node_count()) - selection(0);
  return selection(j - 1) - selection(j);
}

std::vector<std::vector<double>> WaveletBank::apply(std::span<const double> x) const {
  const std::size_t n = node_count();
  if (x.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "signal of length " + std::to_string(x.size()) + " for bank on " + std::to_string(n) + " nodes");
  const int T = max_step();
  const int J = scales();
  const auto& tbl = kernels::active();

  // y_t = P^t x
  std::vector<std::vector<double>> y(T + 1, std::vector<double>(n));
  std::copy(x.begin(), x.end(), y[0].begin());
  for (int t = 1; t <= T; ++t) tbl.gemv(p_.matrix().data().data(), y[t - 1].data(), y[t].data(), n, n);

  std::vector<std::vector<double>> sel(J + 1, std::vector<double>(n, 0.0));
  for (int r = 0; r <= J; ++r)
    for (int t = 0; t <= T; ++t) {
      const double w = selector_(r, t);
      if (w == 1.0) {
        for (std::size_t v = 0; v < n; ++v) sel[r][v] += y[t][v];
      } else if (w != 0.0) {
        tbl.axpy(w, y[t].data(), sel[r].data(), n);
      }
    }

  std::vector<std::vector<double>> out(J + 1, std::vector<double>(n));
  for (std::size_t v = 0; v < n; ++v) out[0][v] = x[v] - sel[0][v];
  for (int j = 1; j <= J; ++j)
    for (std::size_t v = 0; v < n; ++v) out[j][v] = sel[j - 1][v] - sel[j][v];
  return out;
}

ScatteringFeature scattering_moments(const MolecularGraph& g, const AtomAlphabet& alphabet,
                                     const WaveletBank& bank, const ScatteringConfig& cfg) {
  if (bank.node_count() != g.n())
    throw Error(ErrorKind::BankGraphMismatch, "bank built for " + std::to_string(bank.node_count()) +
                                                  " nodes, graph has " + std::to_string(g.n()));
  if (bank.scales() != cfg.J)
    throw Error(ErrorKind::BankGraphMismatch, "bank has J=" + std::to_string(bank.scales()) +
                                                  ", config asks for J=" + std::to_string(cfg.J));
  const auto& tbl = kernels::active();
  const int J = cfg.J;
  const int Q = cfg.Q;
  const std::size_t n = g.n();

  ScatteringFeature out;
  out.reserve(feature_dimension(cfg, alphabet.size()));
  const auto signals = label_signals(g, alphabet);
  for (const auto& x : signals) {
    const bool present = std::any_of(x.begin(), x.end(), [](double v) { return v != 0.0; });
    if (cfg.include_zeroth_order)
      for (int q = 1; q <= Q; ++q) out.push_back(tbl.abs_pow_sum(x.data(), n, q));

    if (!present) {
      const std::size_t pairs = cfg.all_second_order_pairs ? J * J : J * (J - 1) / 2;
      out.insert(out.end(), static_cast<std::size_t>(Q) * (J + pairs), 0.0);
      continue;
    }

    const auto first = bank.apply(x);
    for (int j = 1; j <= J; ++j)
      for (int q = 1; q <= Q; ++q) out.push_back(tbl.abs_pow_sum(first[j].data(), n, q));

    std::vector<double> modulus(n);
    for (int j = 1; j <= J; ++j) {
      for (std::size_t v = 0; v < n; ++v) modulus[v] = std::fabs(first[j][v]);
      const auto second = bank.apply(modulus);
      for (int jp = 1; jp <= J; ++jp) {
        if (!cfg.all_second_order_pairs && jp <= j) continue;
        for (int q = 1; q <= Q; ++q) out.push_back(tbl.abs_pow_sum(second[jp].data(), n, q));
      }
    }
  }
  return out;
}

ScatteringFeature scattering_moments(const MolecularGraph& g, const AtomAlphabet& alphabet,
                                     const ScatteringConfig& cfg, const Matrix* selector) {
  const DiffusionOperator p = lazy_walk(g);
  if (selector != nullptr) return scattering_moments(g, alphabet, build_learned_bank(p, *selector), cfg);
  return scattering_moments(g, alphabet, build_dyadic_bank(p, cfg.J), cfg);
}

unsigned default_thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRASSY_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min<unsigned>(static_cast<unsigned>(v), hw);
  }
  return hw;
}

Matrix featurize_dataset(std::span<const MolecularGraph> graphs, const AtomAlphabet& alphabet,
                         const ScatteringConfig& cfg, const Matrix* selector, unsigned threads) {
  cfg.validate();
  const std::size_t dim = feature_dimension(cfg, alphabet.size());
  Matrix out(graphs.size(), dim);
  if (graphs.empty()) return out;

  if (threads == 0) threads = default_thread_count();
  threads = std::min<unsigned>(threads, static_cast<unsigned>(graphs.size()));

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::size_t err_index = graphs.size();
  std::exception_ptr err;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < graphs.size(); i = next.fetch_add(1)) {
      try {
        const ScatteringFeature f = scattering_moments(graphs[i], alphabet, cfg, selector);
        std::copy(f.begin(), f.end(), out.row_span(i).begin());
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  if (err) {
    const std::string id = graphs[err_index].id.empty() ? "#" + std::to_string(err_index) : graphs[err_index].id;
    try {
      std::rethrow_exception(err);
    } catch (const Error& e) {
      throw Error(e.kind(), "graph " + id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace grassy::scattering
