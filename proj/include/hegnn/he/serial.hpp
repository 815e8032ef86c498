// SPDX-License-Identifier: Apache-2.0
//
// Length-prefixed binary container for keys and ciphertexts.
// Layout: magic "HGN1" (4 bytes), version byte, kind byte, then kind-specific
// payload. All integers and f64 bit patterns are little-endian; every array is
// prefixed with a u64 element count.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hegnn/errors.hpp"

namespace hegnn::he {

inline constexpr char kMagic[4] = {'H', 'G', 'N', '1'};
inline constexpr std::uint8_t kSerialVersion = 1;

enum class BlobKind : std::uint8_t {
  kSimCiphertext = 1,
  kCkksCiphertext = 2,
  kCkksKeySet = 3,
  kSimKeySet = 4,
  kCiphertextList = 5,
};

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void u64_array(const std::vector<std::uint64_t>& a) {
    u64(a.size());
    for (auto v : a) u64(v);
  }

  void f64_array(const std::vector<double>& a) {
    u64(a.size());
    for (auto v : a) f64(v);
  }

  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  double f64() { return std::bit_cast<double>(u64()); }

  std::vector<std::uint64_t> u64_array() {
    std::uint64_t n = u64();
    need(n * 8);
    std::vector<std::uint64_t> a(n);
    for (auto& v : a) v = u64();
    return a;
  }

  std::vector<double> f64_array() {
    std::uint64_t n = u64();
    need(n * 8);
    std::vector<double> a(n);
    for (auto& v : a) v = f64();
    return a;
  }

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (pos_ + n > buf_.size()) throw ParseError("binary container truncated");
  }

  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

inline void write_header(BinaryWriter& w, BlobKind kind) {
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kSerialVersion);
  w.u8(static_cast<std::uint8_t>(kind));
}

inline BlobKind read_header(BinaryReader& r) {
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw ParseError("bad container magic");
  }
  std::uint8_t version = r.u8();
  if (version != kSerialVersion) {
    throw ParseError("unsupported container version " + std::to_string(version));
  }
  return static_cast<BlobKind>(r.u8());
}

inline void write_file(const std::string& path, const BinaryWriter& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write file: " + path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

inline BinaryReader read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return BinaryReader(std::move(bytes));
}

}  // namespace hegnn::he
