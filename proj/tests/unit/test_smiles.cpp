// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "grassy/smiles.hpp"
#include "grassy/validity.hpp"

using namespace grassy;
using grassy::smiles::parse_smiles;
using grassy::smiles::SmilesError;
using grassy::smiles::TokenKind;

namespace {

std::vector<nlohmann::json> read_jsonl(const std::string& name) {
  std::ifstream in(std::string(GRASSY_TEST_DATA) + "/" + name);
  REQUIRE(in.good());
  std::vector<nlohmann::json> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

SmilesError parse_error(std::string_view s) {
  try {
    parse_smiles(s);
  } catch (const SmilesError& e) {
    return e;
  }
  FAIL("expected a SmilesError for " << s);
  return SmilesError(ErrorKind::FormatError, 0, "");
}

}  // namespace

TEST_CASE("small molecules") {
  const MolecularGraph methane = parse_smiles("C");
  CHECK(methane.n() == 1);
  CHECK(methane.edge_count() == 0);

  const MolecularGraph hexane = parse_smiles("C1CCCCC1");
  CHECK(hexane.n() == 6);
  CHECK(hexane.edge_count() == 6);
  CHECK(validity::ring_sizes(validity::from_adjacency(hexane.adjacency)) == std::vector<std::size_t>{6});

  const MolecularGraph acetic = parse_smiles("CC(=O)O");
  CHECK(acetic.n() == 4);
  CHECK(acetic.edge_count() == 3);
  CHECK(acetic.degrees()[1] == 3);
  CHECK(acetic.bonds[1].order == 2);
}

TEST_CASE("tokenizer takes the longest atom symbol and reads %NN ring bonds") {
  const auto cl = smiles::tokenize("Cl");
  REQUIRE(cl.size() == 1);
  CHECK(cl[0].kind == TokenKind::Atom);
  CHECK(cl[0].symbol == "Cl");

  const auto ring = smiles::tokenize("C%12C");
  REQUIRE(ring.size() == 3);
  CHECK(ring[1].kind == TokenKind::RingBond);
  CHECK(ring[1].ring == 12);

  try {
    smiles::tokenize("C@");
    FAIL("expected an error");
  } catch (const SmilesError& e) {
    CHECK(e.kind() == ErrorKind::UnexpectedCharacter);
    CHECK(e.offset() == 1);
  }
}

TEST_CASE("aromatic atoms map to their uppercase symbol") {
  const MolecularGraph benzene = parse_smiles("c1ccccc1");
  const MolecularGraph pyridine = parse_smiles("c1ccncc1");
  const AtomAlphabet a;
  CHECK(benzene.n() == 6);
  CHECK(benzene.edge_count() == 6);
  CHECK(pyridine.labels[3] == *a.index_of("N"));
  CHECK(benzene.bonds[0].order == smiles::kAromaticBond);
}

TEST_CASE("structural errors") {
  CHECK(parse_error("CC(C").kind() == ErrorKind::UnbalancedBranch);
  CHECK(parse_error("CC)C").kind() == ErrorKind::UnbalancedBranch);
  CHECK(parse_error("C1CC").kind() == ErrorKind::DanglingRingBond);
  CHECK(parse_error("C1CC").offset() == 1);
  CHECK(parse_error("Xe").kind() == ErrorKind::UnknownAtom);
  CHECK(parse_error("C=1CC#1").kind() == ErrorKind::RingBondConflict);
  CHECK(parse_error("C11").kind() == ErrorKind::RingBondConflict);
  CHECK(parse_error("C12CC12").kind() == ErrorKind::RingBondConflict);
  CHECK(parse_error("").kind() == ErrorKind::UnexpectedCharacter);
  CHECK(parse_error("CC=").kind() == ErrorKind::UnexpectedCharacter);
  CHECK(parse_error("C()C").kind() == ErrorKind::UnexpectedCharacter);
  CHECK(parse_error("C%1C").kind() == ErrorKind::UnexpectedCharacter);
}

TEST_CASE("ring closure takes the bond order from either side") {
  CHECK(parse_smiles("C=1CCCCC1").bonds.back().order == 2);
  CHECK(parse_smiles("C1CCCCC=1").bonds.back().order == 2);
  CHECK(parse_smiles("C=1CCCCC=1").bonds.back().order == 2);
}

TEST_CASE("unknown symbols outside the alphabet") {
  const AtomAlphabet cn({"C", "N"});
  CHECK_NOTHROW(parse_smiles("CNC", cn));
  try {
    parse_smiles("CNO", cn);
    FAIL("expected an error");
  } catch (const SmilesError& e) {
    CHECK(e.kind() == ErrorKind::UnknownAtom);
    CHECK(e.offset() == 2);
  }
}

TEST_CASE("fixture corpus: node count, edge count and ring sizes") {
  const auto corpus = read_jsonl("smiles_corpus.jsonl");
  CHECK(corpus.size() >= 50);
  for (const auto& row : corpus) {
    const std::string s = row["smiles"];
    CAPTURE(s);
    const MolecularGraph g = parse_smiles(s);
    CHECK(g.n() == row["nodes"].get<std::size_t>());
    CHECK(g.edge_count() == row["edges"].get<std::size_t>());
    CHECK(validity::ring_sizes(validity::from_adjacency(g.adjacency)) == row["rings"].get<std::vector<std::size_t>>());
  }
}

TEST_CASE("fixture rejections carry kind and offset") {
  for (const auto& row : read_jsonl("smiles_rejections.jsonl")) {
    const std::string s = row["smiles"];
    CAPTURE(s);
    const SmilesError e = parse_error(s);
    CHECK(std::string(to_string(e.kind())) == row["kind"].get<std::string>());
    CHECK(e.offset() == row["offset"].get<std::size_t>());
  }
}

TEST_CASE("edge count follows atoms, ring closures and branches") {
  // Each atom after the first bonds to exactly one predecessor; each ring
  // closure pair adds one more.
  for (const char* s : {"CC(C)(C)C", "C1CC2CC1C2", "c1ccc2ccccc2c1", "CC(=O)Oc1ccccc1C(=O)O", "C%10CC%10"}) {
    CAPTURE(s);
    std::size_t atoms = 0, closures = 0;
    for (const auto& t : smiles::tokenize(s)) {
      atoms += t.kind == TokenKind::Atom || t.kind == TokenKind::AromaticAtom;
      closures += t.kind == TokenKind::RingBond;
    }
    const MolecularGraph g = parse_smiles(s);
    CHECK(g.n() == atoms);
    CHECK(g.edge_count() == atoms - 1 + closures / 2);
  }
}

TEST_CASE("random bytes yield a graph or a structured error") {
  std::mt19937_64 rng(17);
  const std::string alphabet = "CNOSPFIBrcl()=#-:%0123456789[]@+./\\*";
  for (int i = 0; i < 20000; ++i) {
    const std::size_t len = 1 + rng() % 32;
    std::string s(len, ' ');
    for (char& c : s) c = (i % 2 == 0) ? alphabet[rng() % alphabet.size()] : static_cast<char>(rng() % 256);
    try {
      const MolecularGraph g = parse_smiles(s);
      CHECK(g.n() >= 1);
    } catch (const SmilesError& e) {
      CHECK(e.offset() <= s.size());
    }
  }
}
