// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grassy/dataset.hpp"
#include "grassy/latent_model.hpp"
#include "grassy/scattering.hpp"

namespace fixture {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(GRASSY_TEST_DATA) / name; }

struct Loaded {
  std::vector<grassy::MolecularGraph> graphs;
  grassy::latent::Dataset data;
};

/// Graphs and dyadic moments of a fixture file, with the named properties.
inline Loaded load(const std::string& name, const std::vector<std::string>& properties,
                   const grassy::scattering::ScatteringConfig& cfg = {}) {
  const grassy::AtomAlphabet alphabet;
  Loaded out;
  out.graphs = grassy::data::load_dataset(data_path(name), alphabet).graphs;
  out.data.features = grassy::scattering::featurize_dataset(out.graphs, alphabet, cfg);
  out.data.properties = grassy::latent::property_matrix(out.graphs, properties);
  for (const auto& g : out.graphs) out.data.ids.push_back(g.id);
  return out;
}

/// Scratch directory below the build tree, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(GRASSY_TEST_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
