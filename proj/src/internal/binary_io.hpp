// Copyright 2026 The mrspoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian field helpers shared by the binary file formats.

#ifndef MRSPOOF_INTERNAL_BINARY_IO_HPP_
#define MRSPOOF_INTERNAL_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "mrspoof/errors.hpp"

namespace mrspoof::internal {

template <typename U>
void put_le(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
  }
  os.write(buf, sizeof(U));
}

inline void put_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

inline void put_bytes(std::ostream& os, std::string_view bytes) {
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename U>
U get_le(std::istream& is, const std::string& what) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) {
    throw FormatError("truncated file while reading " + what);
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline float get_f32(std::istream& is, const std::string& what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(is, what));
}
inline double get_f64(std::istream& is, const std::string& what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}

inline std::string get_bytes(std::istream& is, std::size_t n, const std::string& what) {
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("truncated file while reading " + what);
  }
  return s;
}

}  // namespace mrspoof::internal

#endif  // MRSPOOF_INTERNAL_BINARY_IO_HPP_
