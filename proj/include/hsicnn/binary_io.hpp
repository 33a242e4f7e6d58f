#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "hsicnn/error.hpp"

namespace hsicnn::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

// Append-only little-endian encoder.
class Writer {
 public:
  void bytes(std::string_view raw) { buf_.append(raw); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }

  const std::string& buffer() const noexcept { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }

  std::string buf_;
};

// Little-endian decoder over an in-memory buffer. Failures report the byte
// offset at which decoding stopped.
class Reader {
 public:
  Reader(std::string_view data, std::string what, ErrorKind kind = ErrorKind::format)
      : data_(data), what_(std::move(what)), kind_(kind) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(kind_,
                what_ + ": " + msg + " at byte offset " + std::to_string(pos_));
  }

  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (data_.substr(pos_, magic.size()) != magic) {
      fail("bad magic (expected \"" + std::string(magic) + "\")");
    }
    pos_ += magic.size();
  }

  void expect_version(std::uint8_t version) {
    const std::size_t at = pos_;
    const std::uint8_t v = u8();
    if (v != version) {
      pos_ = at;
      fail("unsupported version " + std::to_string(v));
    }
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16() { return get<std::uint16_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }

  void need(std::size_t n) const {
    if (remaining() < n) {
      fail("truncated payload (need " + std::to_string(n) + " bytes, have " +
           std::to_string(remaining()) + ")");
    }
  }

  void expect_end() const {
    if (remaining() != 0) fail("trailing bytes");
  }

 private:
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view data_;
  std::string what_;
  ErrorKind kind_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorKind::io, "short write to " + path);
}

}  // namespace hsicnn::io
