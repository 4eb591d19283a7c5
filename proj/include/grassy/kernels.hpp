// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Dense double-precision inner loops shared by the scattering transform and
// the autodiff engine. Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2/FMA variant selected once at runtime. Variants differ only
// in summation order, so results agree to rounding, not bitwise.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace grassy::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Raw-pointer kernel table. All matrices are row-major and densely packed.
struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is m x n
  void (*gemv)(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
  // C += A B, A is m x k, B is k x n
  void (*gemm_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
  // C += A B^T, A is m x k, B is n x k
  void (*gemm_nt_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n);
  // C += A^T B, A is k x m, B is k x n
  void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                      std::size_t n);
  // sum_i |x[i]|^q for integer q >= 1
  double (*abs_pow_sum)(const double* x, std::size_t n, int q);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 unit is not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Table used by the library. Picks AVX2 when available unless the
/// GRASSY_SIMD environment variable is set to "scalar".
const KernelTable& active();

/// Overrides the runtime choice (tests and benchmarking). Returns false if
/// the requested ISA is unavailable, in which case nothing changes.
bool force_isa(Isa isa);

// Span conveniences over active().

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double abs_pow_sum(std::span<const double> x, int q);

}  // namespace grassy::kernels
