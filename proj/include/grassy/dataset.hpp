// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// JSONL molecule datasets.
//
// One object per line:
//   {"id": "m1", "smiles": "CC(=O)O", "properties": {"qed": 0.43}}
//   {"id": "m2", "adjacency": {"edges": [[0, 1]], "labels": ["C", "O"]}}
// Exactly one of "smiles" and "adjacency" is present. Blank lines are skipped.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grassy/graph.hpp"

namespace grassy::data {

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string id;        // empty when the id itself could not be read
  std::string kind;
  std::string message;
};

struct LoadedDataset {
  std::vector<MolecularGraph> graphs;
  std::vector<std::size_t> lines;  // source line of each graph
  std::vector<RecordError> errors;
  std::size_t records = 0;

  double failure_rate() const {
    return records == 0 ? 0.0 : static_cast<double>(errors.size()) / static_cast<double>(records);
  }
};

/// Builds the graph of one record. Throws Error (FormatError for schema
/// problems, parser and graph errors otherwise).
MolecularGraph record_to_graph(const nlohmann::json& record, const AtomAlphabet& alphabet);

/// Parses every line; bad records are collected rather than thrown.
/// Throws DatasetUnreadable when the file cannot be opened.
LoadedDataset load_dataset(const std::filesystem::path& path, const AtomAlphabet& alphabet);
LoadedDataset parse_dataset(std::string_view text, const AtomAlphabet& alphabet);

nlohmann::json to_json(const RecordError& e);

/// Property names present in every graph, sorted.
std::vector<std::string> common_properties(const std::vector<MolecularGraph>& graphs);

}  // namespace grassy::data
