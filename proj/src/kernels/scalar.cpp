// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "grassy/kernels.hpp"

namespace grassy::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(a + i * n, x, n);
}

void gemm_acc_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      axpy_scalar(aip, b + p * n, crow, n);
    }
  }
}

void gemm_nt_acc_scalar(const double* a, const double* b, double* c, std::size_t m,
                        std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
}

void gemm_tn_acc_scalar(const double* a, const double* b, double* c, std::size_t m,
                        std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      if (arow[i] == 0.0) continue;
      axpy_scalar(arow[i], brow, c + i * n, n);
    }
  }
}

double abs_pow_sum_scalar(const double* x, std::size_t n, int q) {
  double s = 0.0;
  switch (q) {
    case 1:
      for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
      break;
    case 2:
      for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) s += std::pow(std::fabs(x[i]), q);
  }
  return s;
}

const KernelTable kScalar{
    Isa::Scalar,        dot_scalar,         axpy_scalar,        gemv_scalar,
    gemm_acc_scalar,    gemm_nt_acc_scalar, gemm_tn_acc_scalar, abs_pow_sum_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace grassy::kernels
