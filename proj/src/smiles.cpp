// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <string_view>

namespace grassy::smiles {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string describe(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 0x20 && u < 0x7f) return std::string("'") + c + "'";
  return "byte 0x" + std::string(1, "0123456789abcdef"[u >> 4]) + "0123456789abcdef"[u & 15];
}

int bond_order(char c) {
  switch (c) {
    case '-': return 1;
    case '=': return 2;
    case '#': return 3;
    default: return kAromaticBond;
  }
}

}  // namespace

std::vector<SmilesToken> tokenize(std::string_view s) {
  std::vector<SmilesToken> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const std::size_t at = i;
    // Two-letter symbols take precedence over their one-letter prefixes.
    if (c == 'C' && i + 1 < s.size() && s[i + 1] == 'l') {
      tokens.push_back({TokenKind::Atom, "Cl", -1, at});
      i += 2;
      continue;
    }
    if (c == 'B' && i + 1 < s.size() && s[i + 1] == 'r') {
      tokens.push_back({TokenKind::Atom, "Br", -1, at});
      i += 2;
      continue;
    }
    switch (c) {
      case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I':
        tokens.push_back({TokenKind::Atom, std::string(1, c), -1, at});
        ++i;
        continue;
      case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
        tokens.push_back({TokenKind::AromaticAtom, std::string(1, c), -1, at});
        ++i;
        continue;
      case '-': case '=': case '#': case ':':
        tokens.push_back({TokenKind::Bond, std::string(1, c), -1, at});
        ++i;
        continue;
      case '(':
        tokens.push_back({TokenKind::BranchOpen, "(", -1, at});
        ++i;
        continue;
      case ')':
        tokens.push_back({TokenKind::BranchClose, ")", -1, at});
        ++i;
        continue;
      case '%':
        if (i + 2 < s.size() && is_digit(s[i + 1]) && is_digit(s[i + 2])) {
          tokens.push_back({TokenKind::RingBond, std::string(s.substr(i, 3)),
                            (s[i + 1] - '0') * 10 + (s[i + 2] - '0'), at});
          i += 3;
          continue;
        }
        throw SmilesError(ErrorKind::UnexpectedCharacter, at, "'%' must be followed by two digits");
      default:
        if (is_digit(c)) {
          tokens.push_back({TokenKind::RingBond, std::string(1, c), c - '0', at});
          ++i;
          continue;
        }
        throw SmilesError(ErrorKind::UnexpectedCharacter, at, "unexpected character " + describe(c));
    }
  }
  return tokens;
}

MolecularGraph parse_smiles(std::string_view s, const AtomAlphabet& alphabet) {
  if (s.empty()) throw SmilesError(ErrorKind::UnexpectedCharacter, 0, "empty SMILES string");

  std::vector<SmilesToken> tokens;
  try {
    tokens = tokenize(s);
  } catch (const SmilesError& e) {
    const char c = s[e.offset()];
    static constexpr std::string_view kUnsupported = "@/\\[]+.*$";
    if (kUnsupported.find(c) != std::string_view::npos)
      throw SmilesError(ErrorKind::UnsupportedFeature, e.offset(),
                        std::string("unsupported SMILES feature '") + c + "'");
    if (std::isalpha(static_cast<unsigned char>(c)))
      throw SmilesError(ErrorKind::UnknownAtom, e.offset(), "unknown atom " + describe(c));
    throw;
  }

  struct OpenRing {
    int atom;
    int order;  // 0 when unspecified
    std::size_t offset;
  };

  std::vector<int> labels;
  std::vector<bool> aromatic;
  std::vector<Bond> bonds;
  std::vector<int> branch_stack;
  std::vector<bool> branch_has_atom;
  std::map<int, OpenRing> rings;

  int prev = -1;
  int pending = 0;  // explicit bond order waiting for its second atom
  std::size_t pending_offset = 0;

  auto has_bond = [&](int a, int b) {
    return std::any_of(bonds.begin(), bonds.end(), [&](const Bond& x) {
      return (x.u == a && x.v == b) || (x.u == b && x.v == a);
    });
  };
  auto implicit_order = [&](int a, int b) { return aromatic[a] && aromatic[b] ? kAromaticBond : 1; };

  for (const SmilesToken& t : tokens) {
    switch (t.kind) {
      case TokenKind::Atom:
      case TokenKind::AromaticAtom: {
        std::string symbol = t.symbol;
        if (t.kind == TokenKind::AromaticAtom)
          symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0])));
        const auto label = alphabet.index_of(symbol);
        if (!label) throw SmilesError(ErrorKind::UnknownAtom, t.offset, "atom '" + symbol + "' not in alphabet");
        const int idx = static_cast<int>(labels.size());
        labels.push_back(*label);
        aromatic.push_back(t.kind == TokenKind::AromaticAtom);
        if (prev >= 0) {
          bonds.push_back({prev, idx, pending != 0 ? pending : implicit_order(prev, idx)});
        } else if (pending != 0) {
          throw SmilesError(ErrorKind::UnexpectedCharacter, pending_offset, "bond symbol without a preceding atom");
        }
        if (!branch_has_atom.empty()) branch_has_atom.back() = true;
        pending = 0;
        prev = idx;
        break;
      }
      case TokenKind::Bond:
        if (prev < 0 || pending != 0)
          throw SmilesError(ErrorKind::UnexpectedCharacter, t.offset, "misplaced bond symbol '" + t.symbol + "'");
        pending = bond_order(t.symbol[0]);
        pending_offset = t.offset;
        break;
      case TokenKind::BranchOpen:
        if (prev < 0) throw SmilesError(ErrorKind::UnbalancedBranch, t.offset, "branch without a preceding atom");
        if (pending != 0) throw SmilesError(ErrorKind::UnexpectedCharacter, pending_offset, "bond symbol before '('");
        branch_stack.push_back(prev);
        branch_has_atom.push_back(false);
        break;
      case TokenKind::BranchClose:
        if (branch_stack.empty()) throw SmilesError(ErrorKind::UnbalancedBranch, t.offset, "')' without matching '('");
        if (pending != 0) throw SmilesError(ErrorKind::UnexpectedCharacter, pending_offset, "bond symbol before ')'");
        if (!branch_has_atom.back()) throw SmilesError(ErrorKind::UnexpectedCharacter, t.offset, "empty branch");
        prev = branch_stack.back();
        branch_stack.pop_back();
        branch_has_atom.pop_back();
        break;
      case TokenKind::RingBond: {
        if (prev < 0) throw SmilesError(ErrorKind::UnexpectedCharacter, t.offset, "ring bond without a preceding atom");
        auto it = rings.find(t.ring);
        if (it == rings.end()) {
          rings.emplace(t.ring, OpenRing{prev, pending, t.offset});
          pending = 0;
          break;
        }
        const OpenRing open = it->second;
        rings.erase(it);
        if (open.atom == prev)
          throw SmilesError(ErrorKind::RingBondConflict, t.offset, "ring closure " + std::to_string(t.ring) + " bonds an atom to itself");
        if (open.order != 0 && pending != 0 && open.order != pending)
          throw SmilesError(ErrorKind::RingBondConflict, t.offset, "ring closure " + std::to_string(t.ring) + " has conflicting bond orders");
        if (has_bond(open.atom, prev))
          throw SmilesError(ErrorKind::RingBondConflict, t.offset, "ring closure " + std::to_string(t.ring) + " duplicates an existing bond");
        const int order = pending != 0 ? pending : (open.order != 0 ? open.order : implicit_order(open.atom, prev));
        bonds.push_back({open.atom, prev, order});
        pending = 0;
        break;
      }
    }
  }

  if (pending != 0) throw SmilesError(ErrorKind::UnexpectedCharacter, pending_offset, "trailing bond symbol");
  if (!branch_stack.empty()) throw SmilesError(ErrorKind::UnbalancedBranch, s.size(), "unclosed '('");
  if (!rings.empty()) {
    const auto& [num, open] = *rings.begin();
    throw SmilesError(ErrorKind::DanglingRingBond, open.offset, "ring bond " + std::to_string(num) + " never closed");
  }
  if (labels.empty()) throw SmilesError(ErrorKind::UnexpectedCharacter, 0, "no atoms");

  return build_graph(std::span<const Bond>(bonds), std::move(labels), alphabet);
}

}  // namespace grassy::smiles
