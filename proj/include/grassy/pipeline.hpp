// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end commands behind the grassy CLI.
//
// Every command reads the run config, applies command-line overrides,
// validates the result and only then touches data. Outputs go below the run
// directory (--out):
//
//   features.csv, feature_stats.json, bank.json, featurize_errors.jsonl
//   <model>/model.bin, model.json, history.csv, split.json, latent.csv
//   <model>/gan/gan.bin, gan.json, history.csv
//   <model>/samples.jsonl, validity.json
//   report.json, report.txt
//
// <model> is ae, ae_regr, vae or vae_regr, with a _learned suffix for
// learned scattering scales.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grassy/generator.hpp"
#include "grassy/latent_model.hpp"
#include "grassy/metrics.hpp"
#include "grassy/scattering.hpp"
#include "grassy/validity.hpp"

namespace grassy::pipeline {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path dataset;
  std::vector<std::string> alphabet;  // empty = default alphabet
  scattering::ScatteringConfig scattering;
  latent::LatentModelConfig latent;
  bool property_names_given = false;
  gan::GeneratorConfig generator;
  validity::ValidityConfig validity;
  metrics::SmoothnessConfig smoothness;
  std::size_t sample_count = 100;
  gan::SampleMode sample_mode = gan::SampleMode::Perturb;
};

/// Relative dataset paths resolve against `base_dir`. Throws ConfigInvalid
/// with the offending field path.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);
/// Cross-field and per-field checks that need no data. Throws ConfigInvalid.
void validate(const RunConfig& cfg);

struct Options {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  bool variational = false;
  bool no_regr = false;
  std::optional<scattering::Mode> scattering_mode;
  std::optional<std::size_t> count;
  std::optional<gan::SampleMode> sample_mode;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> samples;
  std::vector<std::string> models;
};

/// Loads the config named in opts and applies the overrides.
RunConfig resolve(const Options& opts);
std::string model_name(const RunConfig& cfg, const Options& opts);

// Each command returns the process exit code and throws grassy::Error on
// failure. Progress and tables go to `log`.
int cmd_featurize(const Options& opts, std::ostream& log);
int cmd_train_ae(const Options& opts, std::ostream& log);
int cmd_train_gan(const Options& opts, std::ostream& log);
int cmd_generate(const Options& opts, std::ostream& log);
int cmd_validate(const Options& opts, std::ostream& log);
int cmd_metrics(const Options& opts, std::ostream& log);

// CSV helpers shared with tests.
std::string format_double(double v);
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace grassy::pipeline
