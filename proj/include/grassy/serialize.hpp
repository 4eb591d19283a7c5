// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter blobs and crash-safe file writes.
//
// Blob layout, all integers little-endian:
//   "GRSY"  u32 version  u32 count
//   count x { u32 name_len, name bytes, u32 rank, rank x u64 dim, f64 values }
// Tensors are stored with rank 2.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grassy/autodiff.hpp"

namespace grassy::io {

inline constexpr std::uint32_t kBlobVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

std::string encode_blob(std::span<const NamedTensor> tensors);
/// Throws FormatError on a bad magic, version or truncated payload.
std::vector<NamedTensor> decode_blob(std::string_view bytes);

void save_parameters(const std::filesystem::path& path, std::span<const ad::Parameter* const> params);
/// Fills each parameter from the tensor with the same name. Missing names or
/// shape differences throw FormatError.
void load_parameters(const std::filesystem::path& path, std::span<ad::Parameter* const> params);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// see either the old or the new contents. Throws IoError.
void atomic_write(const std::filesystem::path& path, std::string_view contents);
/// Whole-file read; throws IoError.
std::string read_file(const std::filesystem::path& path);

}  // namespace grassy::io
