// SPDX-License-Identifier: Apache-2.0
#include "aspectforge/hash.hpp"

#include <array>
#include <fstream>

#include "aspectforge/error.hpp"

namespace aspectforge {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state) {
  for (const char c : bytes) {
    state ^= static_cast<unsigned char>(c);
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::string hex_digest(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t state = fnv1a_offset;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    state = fnv1a(std::string_view(buffer.data(), static_cast<std::size_t>(in.gcount())), state);
  }
  return hex_digest(state);
}

}  // namespace aspectforge
