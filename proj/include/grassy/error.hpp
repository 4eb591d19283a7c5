// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grassy {

enum class ErrorKind {
  // graph_core
  OutOfRangeNode,
  SelfLoop,
  DimensionMismatch,
  UnknownLabel,
  GraphTooLarge,
  InvalidPermutation,
  // smiles
  UnexpectedCharacter,
  UnsupportedFeature,
  UnbalancedBranch,
  DanglingRingBond,
  UnknownAtom,
  RingBondConflict,
  // scattering
  InvalidConfig,
  NotRowStochastic,
  BankGraphMismatch,
  // autodiff
  ShapeMismatch,
  NonScalarLoss,
  // models
  EmptyBatch,
  MissingProperty,
  UnknownProperty,
  NotVariational,
  DatasetTooSmall,
  AlphaOutOfRange,
  // validity / metrics
  EmptySampleSet,
  EmptyTestSet,
  TooFewPoints,
  ZeroPropertyVector,
  // pipeline
  IoError,
  ConfigInvalid,
  DatasetUnreadable,
  MissingPrerequisite,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace grassy
