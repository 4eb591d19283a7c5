// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#include "grassy/error.hpp"

namespace grassy {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfRangeNode: return "OutOfRangeNode";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::GraphTooLarge: return "GraphTooLarge";
    case ErrorKind::InvalidPermutation: return "InvalidPermutation";
    case ErrorKind::UnexpectedCharacter: return "UnexpectedCharacter";
    case ErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorKind::UnbalancedBranch: return "UnbalancedBranch";
    case ErrorKind::DanglingRingBond: return "DanglingRingBond";
    case ErrorKind::UnknownAtom: return "UnknownAtom";
    case ErrorKind::RingBondConflict: return "RingBondConflict";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NotRowStochastic: return "NotRowStochastic";
    case ErrorKind::BankGraphMismatch: return "BankGraphMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::MissingProperty: return "MissingProperty";
    case ErrorKind::UnknownProperty: return "UnknownProperty";
    case ErrorKind::NotVariational: return "NotVariational";
    case ErrorKind::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorKind::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorKind::EmptySampleSet: return "EmptySampleSet";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::ZeroPropertyVector: return "ZeroPropertyVector";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::DatasetUnreadable: return "DatasetUnreadable";
    case ErrorKind::MissingPrerequisite: return "MissingPrerequisite";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace grassy
