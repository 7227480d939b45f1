#ifndef TEXTRGCN_SRC_BINARY_IO_HPP
#define TEXTRGCN_SRC_BINARY_IO_HPP

#include <array>
#include <cstddef>
#include <istream>
#include <ostream>

namespace textrgcn::detail {

// Little-endian integer I/O independent of host byte order.

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(bytes[i]) << (8 * i));
  }
  return true;
}

}  // namespace textrgcn::detail

#endif  // TEXTRGCN_SRC_BINARY_IO_HPP
