#pragma once

// Little-endian primitive readers/writers shared by the on-disk formats.

#include "handkin/common.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace handkin::bin {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <typename T>
void write(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read(std::istream& is, std::string_view what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("unexpected end of file while reading " + std::string(what));
  return to_little(v);
}

inline void write_string(std::ostream& os, const std::string& s) {
  write<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::string_view what, std::uint32_t max_len = 1u << 20) {
  const auto n = read<std::uint32_t>(is, what);
  if (n > max_len) throw Error("implausible string length in " + std::string(what));
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error("unexpected end of file while reading " + std::string(what));
  return s;
}

inline void write_doubles(std::ostream& os, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  } else {
    for (double x : v) write(os, x);
  }
}

inline void read_doubles(std::istream& is, std::span<double> v, std::string_view what) {
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (!is) throw Error("unexpected end of file while reading " + std::string(what));
  if constexpr (std::endian::native == std::endian::big) {
    for (double& x : v) x = to_little(x);
  }
}

// Row-major matrix payload, the layout used by every file format here.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_doubles(os, std::span<const double>(rm.data(), static_cast<std::size_t>(rm.size())));
}

inline Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  read_doubles(is, std::span<double>(rm.data(), static_cast<std::size_t>(rm.size())), what);
  return rm;
}

inline void expect_magic(std::istream& is, std::string_view magic, std::string_view what) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!is || got != magic) throw Error("not a " + std::string(what) + " file (bad magic)");
}

}  // namespace handkin::bin
