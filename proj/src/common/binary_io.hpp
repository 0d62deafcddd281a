#pragma once

// Little-endian primitives shared by the binary container formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace awe::io {

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
bool get(std::istream& is, T& value) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline bool get_string(std::istream& is, std::string& s, std::uint32_t max_len = 1u << 20) {
  std::uint32_t n = 0;
  if (!get(is, n) || n > max_len) return false;
  s.resize(n);
  return static_cast<bool>(is.read(s.data(), n));
}

}  // namespace awe::io
