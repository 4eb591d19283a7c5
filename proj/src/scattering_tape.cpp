// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "grassy/error.hpp"
#include "grassy/kernels.hpp"
#include "grassy/scattering.hpp"

namespace grassy::scattering {

ScatteringPlan make_plan(const MolecularGraph& g, const AtomAlphabet& alphabet, const ScatteringConfig& cfg) {
  cfg.validate();
  const std::size_t n = g.n();
  const int T = cfg.max_step();
  const auto powers = lazy_walk(g).powers(static_cast<unsigned>(T));
  const auto& tbl = kernels::active();

  ScatteringPlan plan;
  plan.n = n;
  plan.power_stack = Matrix((T + 1) * n, n);
  for (int t = 0; t <= T; ++t)
    std::copy(powers[t].data().begin(), powers[t].data().end(), plan.power_stack.data().begin() + t * n * n);

  for (const auto& x : label_signals(g, alphabet)) {
    for (int q = 1; q <= cfg.Q; ++q) plan.zeroth.push_back(tbl.abs_pow_sum(x.data(), n, q));
    const bool present = std::any_of(x.begin(), x.end(), [](double v) { return v != 0.0; });
    if (!present) {
      plan.diffusions.emplace_back();
      continue;
    }
    Matrix y(T + 1, n);
    std::copy(x.begin(), x.end(), y.row_span(0).begin());
    for (int t = 1; t <= T; ++t) tbl.gemv(powers[1].data().data(), &y(t - 1, 0), &y(t, 0), n, n);
    plan.diffusions.push_back(std::move(y));
  }
  return plan;
}

Matrix dyadic_logits(int J, int T, double gap) {
  Matrix logits = dyadic_selector(J, T);
  logits *= gap;
  return logits;
}

namespace {

// J x Q block of moments, row-major (row index outer, q inner) as 1 x JQ.
ad::Var moment_block(ad::Var u, int Q) {
  std::vector<ad::Var> cols;
  for (int q = 1; q <= Q; ++q) cols.push_back(ad::sum_rows(ad::abs_pow(u, q)));
  ad::Var m = Q == 1 ? cols.front() : ad::concat_cols(cols);
  return ad::reshape(m, 1, m.rows() * m.cols());
}

}  // namespace

ad::Var scattering_moments(ad::Tape& tape, ad::Var selector, const ScatteringPlan& plan,
                           const ScatteringConfig& cfg) {
  const int J = cfg.J;
  const int Q = cfg.Q;
  const std::size_t T1 = static_cast<std::size_t>(cfg.max_step()) + 1;
  if (selector.rows() != static_cast<std::size_t>(J + 1) || selector.cols() != T1)
    throw Error(ErrorKind::ShapeMismatch, "selector " + shape_string(selector.value()) + " for J=" +
                                              std::to_string(J) + ", T=" + std::to_string(T1 - 1));
  if (plan.power_stack.rows() != T1 * plan.n)
    throw Error(ErrorKind::BankGraphMismatch, "plan was built for a different diffusion horizon");

  // Row j-1 of dF selects Psi_j = s_j - s_{j+1}.
  Matrix diff(J, J + 1);
  for (int j = 0; j < J; ++j) {
    diff(j, j) = 1.0;
    diff(j, j + 1) = -1.0;
  }
  const ad::Var dF = ad::matmul(tape.constant(std::move(diff)), selector);
  const ad::Var stack = tape.constant(plan.power_stack);
  const std::size_t pairs = cfg.all_second_order_pairs ? J * J : J * (J - 1) / 2;
  const std::size_t per_signal_tail = static_cast<std::size_t>(Q) * (J + pairs);

  std::vector<ad::Var> parts;
  for (std::size_t s = 0; s < plan.diffusions.size(); ++s) {
    if (cfg.include_zeroth_order)
      parts.push_back(tape.constant(Matrix::row(std::span<const double>(plan.zeroth).subspan(s * Q, Q))));
    if (plan.diffusions[s].empty()) {
      parts.push_back(tape.constant(Matrix(1, per_signal_tail)));
      continue;
    }
    const ad::Var u = ad::matmul(dF, tape.constant(plan.diffusions[s]));  // J x n
    parts.push_back(moment_block(u, Q));
    const ad::Var modulus = ad::abs_pow(u, 1);
    for (int j = 0; j < J; ++j) {
      const ad::Var m = ad::slice(modulus, j, j + 1, 0, plan.n);
      const ad::Var y2 = ad::reshape(ad::matmul(stack, ad::transpose(m)), T1, plan.n);
      ad::Var u2 = ad::matmul(dF, y2);
      if (!cfg.all_second_order_pairs) {
        if (j + 1 == J) continue;
        u2 = ad::slice(u2, j + 1, J, 0, plan.n);
      }
      parts.push_back(moment_block(u2, Q));
    }
  }
  return ad::concat_cols(parts);
}

}  // namespace grassy::scattering
