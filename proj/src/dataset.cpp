// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "grassy/error.hpp"
#include "grassy/smiles.hpp"

namespace grassy::data {

using nlohmann::json;

namespace {

[[noreturn]] void format_error(const std::string& msg) { throw Error(ErrorKind::FormatError, msg); }

std::pair<std::string, std::string> split_error(const std::exception& e) {
  if (const auto* g = dynamic_cast<const Error*>(&e)) {
    std::string msg = g->what();
    const std::string prefix = std::string(to_string(g->kind())) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    return {std::string(to_string(g->kind())), msg};
  }
  return {"FormatError", e.what()};
}

}  // namespace

MolecularGraph record_to_graph(const json& rec, const AtomAlphabet& alphabet) {
  if (!rec.is_object()) format_error("record is not a JSON object");
  const auto id_it = rec.find("id");
  if (id_it == rec.end() || !id_it->is_string() || id_it->get<std::string>().empty())
    format_error("record needs a nonempty string \"id\"");
  const bool has_smiles = rec.contains("smiles");
  const bool has_adj = rec.contains("adjacency");
  if (has_smiles == has_adj) format_error("record needs exactly one of \"smiles\" and \"adjacency\"");

  MolecularGraph g;
  if (has_smiles) {
    if (!rec["smiles"].is_string()) format_error("\"smiles\" must be a string");
    g = smiles::parse_smiles(rec["smiles"].get<std::string>(), alphabet);
  } else {
    const json& adj = rec["adjacency"];
    if (!adj.is_object() || !adj.contains("edges") || !adj.contains("labels") || !adj["edges"].is_array() ||
        !adj["labels"].is_array())
      format_error("\"adjacency\" needs array fields \"edges\" and \"labels\"");
    std::vector<int> labels;
    for (const json& l : adj["labels"]) {
      if (l.is_string()) {
        const auto idx = alphabet.index_of(l.get<std::string>());
        if (!idx) throw Error(ErrorKind::UnknownLabel, "label '" + l.get<std::string>() + "' not in alphabet");
        labels.push_back(*idx);
      } else if (l.is_number_integer()) {
        labels.push_back(l.get<int>());
      } else {
        format_error("labels must be atom symbols or alphabet indices");
      }
    }
    std::vector<std::pair<int, int>> edges;
    for (const json& e : adj["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        format_error("each edge must be a pair of integers");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    g = build_graph(std::span<const std::pair<int, int>>(edges), std::move(labels), alphabet);
  }
  g.id = id_it->get<std::string>();

  if (rec.contains("properties")) {
    const json& props = rec["properties"];
    if (!props.is_object()) format_error("\"properties\" must be an object");
    for (const auto& [name, value] : props.items()) {
      if (!value.is_number()) format_error("property '" + name + "' is not a number");
      const double v = value.get<double>();
      if (!std::isfinite(v)) format_error("property '" + name + "' is not finite");
      g.properties[name] = v;
    }
  }
  return g;
}

LoadedDataset parse_dataset(std::string_view text, const AtomAlphabet& alphabet) {
  LoadedDataset out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++out.records;
    std::string id;
    try {
      const json rec = json::parse(line);
      if (rec.is_object() && rec.contains("id") && rec["id"].is_string()) id = rec["id"].get<std::string>();
      MolecularGraph g = record_to_graph(rec, alphabet);
      if (!ids.insert(g.id).second) format_error("duplicate id '" + g.id + "'");
      out.graphs.push_back(std::move(g));
      out.lines.push_back(line_no);
    } catch (const json::exception& e) {
      out.errors.push_back({line_no, id, "FormatError", std::string("invalid JSON: ") + e.what()});
    } catch (const std::exception& e) {
      auto [kind, msg] = split_error(e);
      out.errors.push_back({line_no, id, kind, msg});
    }
  }
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path, const AtomAlphabet& alphabet) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::DatasetUnreadable, "cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw Error(ErrorKind::DatasetUnreadable, "read error on " + path.string());
  return parse_dataset(ss.str(), alphabet);
}

json to_json(const RecordError& e) {
  return json{{"line", e.line}, {"id", e.id}, {"kind", e.kind}, {"message", e.message}};
}

std::vector<std::string> common_properties(const std::vector<MolecularGraph>& graphs) {
  if (graphs.empty()) return {};
  std::vector<std::string> out;
  for (const auto& [name, value] : graphs.front().properties) {
    bool everywhere = true;
    for (const MolecularGraph& g : graphs) everywhere = everywhere && g.properties.contains(name);
    if (everywhere) out.push_back(name);
  }
  return out;
}

}  // namespace grassy::data
