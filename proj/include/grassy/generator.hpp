// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Latent-interpolation generator and GCN discriminator.
//
// M maps a latent code to n_max(n_max-1)/2 upper-triangle logits; a sigmoid
// and symmetrization give the soft adjacency W^ with zero diagonal. Along the
// trajectory z(a) = (1-a) z_i + a z_j, sampled at a = k/K, M minimizes
//
//   L_m = ||W_i - W^(0)||_F + ||W_j - W^(1)||_F
//   L_a = sum_{k=0..K} -log D(W^(k/K))
//   L_s = sum_{k=0..K-1} ||(S^((k+1)/K) - S^(k/K)) K||^2,  S^(a) = F(z(a))
//
// D is a two-layer GCN on A = D~^{-1/2} (W + I) D~^{-1/2} with the soft
// degree as node feature, mean pooling and a sigmoid head. D outputs are
// clamped to [1e-7, 1 - 1e-7] before any log.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassy/autodiff.hpp"
#include "grassy/graph.hpp"
#include "grassy/latent_model.hpp"
#include "grassy/nn.hpp"
#include "grassy/random.hpp"

namespace grassy::gan {

inline constexpr double kScoreFloor = 1e-7;

struct GeneratorConfig {
  std::size_t n_max = 0;  // 0 = largest training graph
  int K = 8;
  double w_m = 1.0;
  double w_a = 0.1;
  double w_s = 0.1;
  std::size_t disc_hidden = 32;
  std::vector<std::size_t> gen_hidden{128, 256};
  double threshold = 0.5;
  double sigma = 0.1;
  double lr = 1e-3;
  double disc_lr = 1e-3;
  int steps = 1000;
  std::size_t pair_batch = 8;

  /// Throws InvalidConfig.
  void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
/// Throws ConfigInvalid naming the offending field.
GeneratorConfig generator_config_from_json(const nlohmann::json& j, const std::string& path = "generator");

/// Throws AlphaOutOfRange or DimensionMismatch.
std::vector<double> interpolate(std::span<const double> zi, std::span<const double> zj, double alpha);
/// (K+1) x L rows z(k/K) on the tape.
ad::Var trajectory(ad::Var zi, ad::Var zj, int K);

class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(std::size_t hidden, Rng& rng);

  /// 1 x 1 score in (0,1) for an n x n soft adjacency.
  ad::Var forward(ad::Tape& tape, ad::Var adjacency);
  ad::Var forward_frozen(ad::Tape& tape, ad::Var adjacency) const;
  double score(const Matrix& adjacency) const;

  std::vector<ad::Parameter*> parameters();
  nn::Linear& head() noexcept { return head_; }

 private:
  ad::Var run(ad::Tape& tape, ad::Var adjacency, bool frozen) const;
  nn::Linear l1_, l2_, head_;
};

/// Normalized propagation matrix D~^{-1/2} (W + I) D~^{-1/2} on the tape.
ad::Var gcn_propagation(ad::Tape& tape, ad::Var adjacency);

class GeneratorModel {
 public:
  GeneratorModel() = default;
  /// Draws M then D from rng.
  GeneratorModel(GeneratorConfig cfg, std::size_t latent_dim, std::size_t n_max, Rng& rng);

  const GeneratorConfig& config() const noexcept { return cfg_; }
  std::size_t n_max() const noexcept { return n_max_; }
  std::size_t latent_dim() const noexcept { return latent_dim_; }

  /// One soft adjacency per row of z (B x latent_dim).
  std::vector<ad::Var> generate(ad::Tape& tape, ad::Var z);
  std::vector<ad::Var> generate_frozen(ad::Tape& tape, ad::Var z) const;
  /// Throws DimensionMismatch.
  Matrix generate(std::span<const double> z) const;

  Discriminator& discriminator() noexcept { return disc_; }
  const Discriminator& discriminator() const noexcept { return disc_; }
  std::vector<ad::Parameter*> generator_parameters() { return gen_.parameters(); }
  std::vector<ad::Parameter*> discriminator_parameters() { return disc_.parameters(); }
  std::vector<ad::Parameter*> parameters();

  void save(const std::filesystem::path& dir) const;
  static GeneratorModel load(const std::filesystem::path& dir);

 private:
  std::vector<ad::Var> to_adjacency(ad::Tape& tape, ad::Var logits) const;
  GeneratorConfig cfg_;
  std::size_t latent_dim_ = 0;
  std::size_t n_max_ = 0;
  nn::Mlp gen_;
  Discriminator disc_;
};

// Loss terms on the tape.

ad::Var loss_adjacency(ad::Tape& tape, ad::Var soft_i, ad::Var soft_j, const Matrix& padded_i, const Matrix& padded_j);
/// scores: column of D outputs, one per trajectory point.
ad::Var loss_adversarial(ad::Var scores);
/// decoded: (K+1) x d moments along the trajectory.
ad::Var loss_smoothness(ad::Var decoded);
/// Mean binary cross-entropy over the combined batch, real labeled 1.
ad::Var discriminator_loss(ad::Var real_scores, ad::Var fake_scores);

// Convenience forms on whole models.

/// Throws GraphTooLarge when a graph exceeds n_max.
double loss_adjacency(const GeneratorModel& m, const MolecularGraph& gi, const MolecularGraph& gj,
                      std::span<const double> zi, std::span<const double> zj);
double loss_adversarial(const GeneratorModel& m, std::span<const double> zi, std::span<const double> zj);
double loss_smoothness(const latent::LatentModel& ae, std::span<const double> zi, std::span<const double> zj, int K);
/// Throws EmptyBatch.
double discriminator_loss(const GeneratorModel& m, std::span<const Matrix> real, std::span<const Matrix> fake);

struct GanStepRecord {
  int step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double l_m = 0.0;
  double l_a = 0.0;
  double l_s = 0.0;
};

struct GanTrainResult {
  GeneratorModel model;
  std::vector<GanStepRecord> history;
};

/// Alternates one discriminator and one generator update per step on
/// uniformly drawn pairs. `features` are the raw moments of `graphs`.
/// Throws DatasetTooSmall below two graphs and GraphTooLarge when n_max is
/// set below the largest graph.
GanTrainResult train_gan(const GeneratorConfig& cfg, const latent::LatentModel& ae,
                         std::span<const MolecularGraph> graphs, const Matrix& features, std::uint64_t seed);

enum class SampleMode { Perturb, Interpolate };

struct Sample {
  std::size_t sample_id = 0;
  std::string source;         // graph id (first endpoint when interpolating)
  std::string source_j;       // second endpoint when interpolating
  double alpha = 0.0;         // interpolation only
  double sigma = 0.0;         // perturbation only
  Matrix soft_adjacency;
};

/// z = E(S(g)) + e with e ~ N(0, sigma^2 I) for a random g, or z(a) between
/// two random graphs at a uniform a.
std::vector<Sample> sample_molecules(const GeneratorModel& m, const latent::LatentModel& ae,
                                     std::span<const std::string> ids, const Matrix& features, std::size_t count,
                                     double sigma, SampleMode mode, Rng& rng);

}  // namespace grassy::gan
