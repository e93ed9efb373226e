// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace aspectforge {

inline constexpr std::uint64_t fnv1a_offset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a, chainable through `state`.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = fnv1a_offset);

/// Sixteen lowercase hex digits.
std::string hex_digest(std::uint64_t value);

/// FNV-1a digest of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

}  // namespace aspectforge
