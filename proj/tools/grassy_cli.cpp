// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "grassy/error.hpp"
#include "grassy/pipeline.hpp"

namespace {

using grassy::pipeline::Options;

struct Flags {
  std::string config, out, dataset, samples, scattering_mode, mode;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  bool variational = false, no_regr = false;
  std::vector<std::string> models;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Flags& f) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", f.config, "run config (JSON)");
  sub->add_option("--out", f.out, "run directory")->required();
  sub->add_option("--seed", f.seed, "overrides the config seed");
  sub->add_option("--dataset", f.dataset, "overrides the config dataset path");
  sub->add_option("--scattering-mode", f.scattering_mode, "dyadic or learned")
      ->check(CLI::IsMember({"dyadic", "learned"}));
  sub->add_flag("--variational", f.variational, "select the variational model");
  sub->add_flag("--no-regr", f.no_regr, "select the model without the property regressor");
  return sub;
}

Options to_options(const Flags& f, const CLI::App& sub) {
  Options o;
  o.config = f.config;
  o.out = f.out;
  o.variational = f.variational;
  o.no_regr = f.no_regr;
  o.models = f.models;
  if (sub.count("--seed")) o.seed = f.seed;
  if (sub.count("--dataset")) o.dataset = f.dataset;
  if (!f.scattering_mode.empty())
    o.scattering_mode = f.scattering_mode == "learned" ? grassy::scattering::Mode::Learned : grassy::scattering::Mode::Dyadic;
  if (sub.get_option_no_throw("--count") && sub.count("--count")) o.count = f.count;
  if (!f.mode.empty())
    o.sample_mode = f.mode == "interp" ? grassy::gan::SampleMode::Interpolate : grassy::gan::SampleMode::Perturb;
  if (!f.samples.empty()) o.samples = f.samples;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scattering-feature latent models and graph generation for small molecules", "grassy"};
  app.require_subcommand(1);
  Flags f;

  using Command = int (*)(const Options&, std::ostream&);
  std::map<CLI::App*, Command> commands;
  commands[add_command(app, "featurize", "compute scattering features for the dataset", f)] = grassy::pipeline::cmd_featurize;
  commands[add_command(app, "train-ae", "train the autoencoder and property regressor", f)] = grassy::pipeline::cmd_train_ae;
  commands[add_command(app, "train-gan", "train the latent-to-graph generator", f)] = grassy::pipeline::cmd_train_gan;
  CLI::App* gen = add_command(app, "generate", "sample graphs and check validity", f);
  gen->add_option("--count", f.count, "number of samples");
  gen->add_option("--mode", f.mode, "perturb or interp")->check(CLI::IsMember({"perturb", "interp"}));
  commands[gen] = grassy::pipeline::cmd_generate;
  CLI::App* val = add_command(app, "validate", "re-check the validity of a samples file", f);
  val->add_option("--samples", f.samples, "samples.jsonl to check");
  commands[val] = grassy::pipeline::cmd_validate;
  CLI::App* met = add_command(app, "metrics", "property error, smoothness and validity tables", f);
  met->add_option("--models", f.models, "model directories to include (default: all)");
  commands[met] = grassy::pipeline::cmd_metrics;

  CLI11_PARSE(app, argc, argv);

  for (const auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    try {
      return run(to_options(f, *sub), std::cout);
    } catch (const grassy::Error& e) {
      std::cerr << "grassy " << sub->get_name() << ": " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "grassy " << sub->get_name() << ": internal error: " << e.what() << "\n";
      return 2;
    }
  }
  return 1;
}
