// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Restricted SMILES reader: organic-subset atoms (aromatic lowercase
// included), bond symbols - = # :, branches and ring closures (0-9, %NN).
// Bracket atoms, charges, stereo marks and dot-disconnected components are
// rejected with the byte offset of the offending character.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "grassy/error.hpp"
#include "grassy/graph.hpp"

namespace grassy::smiles {

enum class TokenKind { Atom, AromaticAtom, Bond, BranchOpen, BranchClose, RingBond };

struct SmilesToken {
  TokenKind kind;
  std::string symbol;  // atom symbol as written, or the bond character
  int ring = -1;       // ring-closure number for RingBond
  std::size_t offset = 0;

  friend bool operator==(const SmilesToken&, const SmilesToken&) = default;
};

/// Bond order stored on aromatic bonds.
inline constexpr int kAromaticBond = 4;

class SmilesError : public Error {
 public:
  SmilesError(ErrorKind kind, std::size_t offset, const std::string& message)
      : Error(kind, message + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

std::vector<SmilesToken> tokenize(std::string_view s);

MolecularGraph parse_smiles(std::string_view s, const AtomAlphabet& alphabet = AtomAlphabet());

}  // namespace grassy::smiles
