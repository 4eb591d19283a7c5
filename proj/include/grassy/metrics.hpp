// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Evaluation: property prediction error, latent smoothness, latent export.
//
// Smoothness of a property vector p over latent points is the Rayleigh
// quotient s = p^T L p / p^T p, where L = D - W is the Laplacian of the
// symmetrized k-nearest-neighbour graph with Gaussian weights
// W_ab = exp(-|z_a - z_b|^2 / eps_ab). eps_ab averages the squared distance
// from a and from b to their k-th neighbours. p is used as given.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassy/latent_model.hpp"
#include "grassy/matrix.hpp"

namespace grassy::metrics {

struct SmoothnessConfig {
  std::size_t k = 5;
};

struct ErrorStat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

/// "mean ± std" with four decimals.
std::string format_stat(const ErrorStat& s);

/// Absolute errors of predictions against targets, per column.
/// Throws EmptyTestSet.
std::vector<ErrorStat> absolute_error(const Matrix& predicted, const Matrix& targets);

/// Per-property |p - R(E(S))| in original units. Throws EmptyTestSet.
std::vector<ErrorStat> property_error(const latent::LatentModel& m, const Matrix& raw_features, const Matrix& targets);

/// Dense Laplacian of the latent kNN graph. Throws TooFewPoints unless there
/// are at least k+1 points, InvalidConfig when k is 0.
Matrix latent_knn_laplacian(const Matrix& z, const SmoothnessConfig& cfg);

/// p^T L p / p^T p. Throws ZeroPropertyVector and DimensionMismatch.
double rayleigh_quotient(const Matrix& laplacian, std::span<const double> p);
double smoothness(const Matrix& z, std::span<const double> p, const SmoothnessConfig& cfg);

/// CSV with columns id, z0..z{L-1}, then each property; values printed with
/// 17 significant digits so they reload bit-exactly. Throws IoError.
void export_latent(const latent::LatentModel& m, std::span<const std::string> ids, const Matrix& raw_features,
                   const Matrix& properties, std::span<const std::string> property_names,
                   const std::filesystem::path& path);

struct ModelMetrics {
  std::string name;
  std::vector<std::string> properties;
  std::vector<ErrorStat> error;
  std::vector<double> smoothness;
  std::size_t test_count = 0;
  std::size_t latent_count = 0;
};

struct ValidityRow {
  std::string name;
  std::size_t samples = 0;
  std::size_t valid = 0;
  double fraction = 0.0;
  std::size_t min_atoms = 0;
};

struct MetricsReport {
  std::vector<ModelMetrics> models;
  std::vector<ValidityRow> validity;
  std::vector<ErrorStat> mean_baseline;  // predict-the-training-mean, per property
  std::vector<std::string> baseline_properties;
};

nlohmann::json to_json(const MetricsReport& r);
/// Model x property tables for prediction error and smoothness, and the
/// validity table.
std::string format_error_table(const MetricsReport& r);
std::string format_smoothness_table(const MetricsReport& r);
std::string format_validity_table(const MetricsReport& r);

}  // namespace grassy::metrics
