#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mragp/errors.hpp"

namespace mragp {

// Little-endian POD stream IO for the binary state and wire formats. The
// supported platforms are little-endian; a byte-order marker in each file
// header guards against foreign files rather than foreign hosts.

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ValidationError("unexpected end of stream while reading binary record");
  return value;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, std::uint64_t max_len = (1ULL << 20)) {
  auto n = read_pod<std::uint64_t>(is);
  if (n > max_len) throw ValidationError("string length field exceeds sane bound");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw ValidationError("unexpected end of stream while reading string");
  return s;
}

inline void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  write_pod<std::int64_t>(os, m.rows());
  write_pod<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Eigen::MatrixXd read_matrix(std::istream& is) {
  auto rows = read_pod<std::int64_t>(is);
  auto cols = read_pod<std::int64_t>(is);
  if (rows < 0 || cols < 0 || rows > (1LL << 32) || cols > (1LL << 32))
    throw ValidationError("matrix dimension field out of range");
  Eigen::MatrixXd m(rows, cols);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!is) throw ValidationError("unexpected end of stream while reading matrix");
  return m;
}

inline void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  write_pod<std::int64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
}

inline Eigen::VectorXd read_vector(std::istream& is) {
  auto n = read_pod<std::int64_t>(is);
  if (n < 0 || n > (1LL << 33)) throw ValidationError("vector length field out of range");
  Eigen::VectorXd v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(v.size())));
  if (!is) throw ValidationError("unexpected end of stream while reading vector");
  return v;
}

template <typename T>
void append_pod(std::vector<std::uint8_t>& buf, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T peel_pod(const std::uint8_t*& p, const std::uint8_t* end) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (p + sizeof(T) > end) throw ValidationError("message payload truncated");
  T value;
  std::memcpy(&value, p, sizeof(T));
  p += sizeof(T);
  return value;
}

}  // namespace mragp
