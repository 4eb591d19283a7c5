// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Regularized autoencoder over scattering moments.
//
// The encoder E maps standardized moments to a latent code z (to mu and
// log sigma^2 in the variational variant), the decoder F maps z back, and
// the regressor R predicts standardized properties from z:
//
//   loss = L_r + lambda_p L_p + beta KL
//   L_r  = mean squared error of F(E(s)) against s
//   L_p  = mean squared error of R(E(s)) against standardized targets
//   KL   = mean over the batch of -1/2 sum(1 + log s^2 - mu^2 - s^2)
//
// With lambda_p = 0 the regressor is not trained with the autoencoder; a
// probe on the frozen latent space can be fitted afterwards instead.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassy/autodiff.hpp"
#include "grassy/graph.hpp"
#include "grassy/nn.hpp"
#include "grassy/random.hpp"
#include "grassy/scattering.hpp"

namespace grassy::latent {

struct LatentModelConfig {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 32;
  std::vector<std::size_t> hidden{256, 128};
  std::size_t regressor_hidden = 64;
  bool variational = false;
  double regression_weight = 1.0;  // lambda_p; 0 disables the property term
  double kl_weight = 1e-3;         // beta
  std::vector<std::string> property_names;
  double lr = 1e-3;
  int max_epochs = 200;
  int patience = 20;
  std::size_t batch_size = 32;

  /// Throws InvalidConfig.
  void validate() const;
};

nlohmann::json to_json(const LatentModelConfig& cfg);
/// Throws ConfigInvalid naming the offending field under `path`.
LatentModelConfig latent_config_from_json(const nlohmann::json& j, const std::string& path = "latent");
nlohmann::json to_json(const scattering::ScatteringConfig& cfg);
scattering::ScatteringConfig scattering_config_from_json(const nlohmann::json& j,
                                                         const std::string& path = "scattering");

/// Per-column affine standardization. Columns with (near) zero spread keep
/// scale 1 so they map to zero instead of blowing up.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;
  std::size_t size() const noexcept { return mean.size(); }
};

/// Rows = graphs, columns = cfg.property_names. Throws MissingProperty naming
/// the property and the graph id.
Matrix property_matrix(std::span<const MolecularGraph> graphs, std::span<const std::string> names);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// 80/10/10 by a seeded shuffle (val and test get at least one item each).
Split split_dataset(std::size_t count, Rng& rng);

/// Training inputs. In learned-scattering mode `plans` supplies one plan per
/// row and the moments are recomputed from the current selector.
struct Dataset {
  std::vector<std::string> ids;
  Matrix features;    // raw moments
  Matrix properties;  // raw targets, may have zero columns
  const std::vector<scattering::ScatteringPlan>* plans = nullptr;

  std::size_t size() const noexcept { return features.rows(); }
};

struct TapeOutputs {
  ad::Var input;   // standardized moments
  ad::Var z;       // sample used downstream (mu when not sampling)
  ad::Var mu;
  ad::Var logvar;  // invalid for the plain autoencoder
};

struct LossTerms {
  ad::Var total;
  ad::Var reconstruction;
  ad::Var property;  // invalid when lambda_p = 0
  ad::Var kl;        // invalid unless variational
};

class LatentModel {
 public:
  LatentModel() = default;
  /// Draws encoder, decoder and regressor weights from rng, in that order.
  /// `learned` adds trainable selector logits initialized near the dyadic bank.
  LatentModel(LatentModelConfig cfg, Rng& rng,
              std::optional<scattering::ScatteringConfig> learned = std::nullopt);

  const LatentModelConfig& config() const noexcept { return cfg_; }
  std::size_t latent_dim() const noexcept { return cfg_.latent_dim; }
  bool learned_scattering() const noexcept { return scattering_.has_value(); }
  const std::optional<scattering::ScatteringConfig>& scattering_config() const noexcept { return scattering_; }
  /// Row-stochastic selector currently encoded by the logits.
  Matrix selector() const;

  Standardizer& feature_stats() noexcept { return features_; }
  const Standardizer& feature_stats() const noexcept { return features_; }
  Standardizer& property_stats() noexcept { return properties_; }
  const Standardizer& property_stats() const noexcept { return properties_; }

  /// Raw moments -> z (mu for the variational model). Throws DimensionMismatch.
  Matrix encode(const Matrix& raw_features) const;
  std::vector<double> encode(std::span<const double> raw_feature) const;
  /// z -> standardized moments.
  Matrix decode(const Matrix& z) const;
  /// Raw moments -> properties in original units.
  Matrix predict_properties(const Matrix& raw_features) const;
  /// Throws UnknownProperty.
  std::vector<double> predict_property(const Matrix& raw_features, const std::string& name) const;

  /// Encoder on the tape. With `noise` the variational model samples
  /// z = mu + exp(logvar / 2) * eps with eps drawn from noise and held constant.
  TapeOutputs encode(ad::Tape& tape, ad::Var standardized, Rng* noise = nullptr);
  ad::Var decode(ad::Tape& tape, ad::Var z);
  ad::Var regress(ad::Tape& tape, ad::Var z);
  /// Decoder with frozen weights.
  ad::Var decode_frozen(ad::Tape& tape, ad::Var z) const;

  /// Standardized moments for the given rows, recorded on the tape. In learned
  /// mode they depend on the selector logits.
  ad::Var input_batch(ad::Tape& tape, const Dataset& data, std::span<const std::size_t> rows);

  /// All terms of the training objective for one batch.
  LossTerms loss(ad::Tape& tape, const Dataset& data, std::span<const std::size_t> rows, Rng* noise);

  std::vector<ad::Parameter*> autoencoder_parameters();
  std::vector<ad::Parameter*> regressor_parameters();
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  /// Blob plus JSON manifest; `extra` is stored under "extra".
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object()) const;
  static LatentModel load(const std::filesystem::path& dir);
  /// Manifest of a saved model, for callers that need "extra".
  static nlohmann::json manifest(const std::filesystem::path& dir);

  int trained_epoch = 0;
  double best_val_loss = 0.0;

 private:
  LatentModelConfig cfg_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  nn::Mlp regressor_;
  std::optional<scattering::ScatteringConfig> scattering_;
  ad::Parameter selector_logits_;
  Standardizer features_;
  Standardizer properties_;
};

// Losses of a model on raw inputs, measured in standardized space. Both throw
// EmptyBatch on an empty batch.
double reconstruction_loss(const LatentModel& m, const Matrix& raw_features);
double property_loss(const LatentModel& m, const Matrix& raw_features, const Matrix& raw_properties);

ad::Var reconstruction_loss(ad::Var input, ad::Var reconstruction);
ad::Var property_loss(ad::Var targets, ad::Var predictions);
/// Throws NotVariational when logvar is not a valid node.
ad::Var kl_loss(ad::Var mu, ad::Var logvar);
double kl_loss(const Matrix& mu, const Matrix& logvar);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double reconstruction = 0.0;
  double property = 0.0;
  double kl = 0.0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  Split split;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Fits standardization on the training split, trains with Adam and early
/// stopping, and leaves the model at its best validation checkpoint. `seed`
/// drives batch order and variational noise. Throws DatasetTooSmall below 10
/// graphs.
TrainResult train(LatentModel& m, const Dataset& data, const Split& split, std::uint64_t seed);
/// Same, with the split drawn first from Rng(seed).
TrainResult train(LatentModel& m, const Dataset& data, std::uint64_t seed);

/// Trains only the regressor on the frozen latent space (probe for models
/// trained without the property term). Uses the split from training.
std::vector<EpochRecord> fit_probe(LatentModel& m, const Dataset& data, const Split& split, std::uint64_t seed);

}  // namespace grassy::latent
