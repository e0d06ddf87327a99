// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "spt/errors.hpp"

namespace spt {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

// Little-endian byte packing for the on-disk formats.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void bytes(const void* p, size_t n) { raw(p, n); }
  void magic(const char* m) { buf_.append(m); }

  // u16 length prefix + UTF-8 payload
  void str16(const std::string& s) {
    if (s.size() > 0xffff) throw ValidationError("string too long for u16 length prefix");
    u16(static_cast<uint16_t>(s.size()));
    buf_.append(s);
  }

  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
  void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
};

class ByteReader {
 public:
  ByteReader(const std::string& data, std::string origin)
      : data_(data), origin_(std::move(origin)) {}

  uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
  uint16_t u16() { return read_as<uint16_t>(); }
  uint32_t u32() { return read_as<uint32_t>(); }
  uint64_t u64() { return read_as<uint64_t>(); }
  float f32() { return read_as<float>(); }
  double f64() { return read_as<double>(); }

  std::string str16() {
    const uint16_t n = u16();
    return std::string(take(n), n);
  }

  void bytes(void* out, size_t n) { std::memcpy(out, take(n), n); }

  void expect_magic(const char* m, size_t n) {
    if (std::memcmp(take(n), m, n) != 0) {
      throw DataError(origin_ + ": bad magic, not a " + std::string(m, n) + " file");
    }
  }

  bool exhausted() const { return pos_ == data_.size(); }
  void expect_exhausted() {
    if (!exhausted()) throw DataError(origin_ + ": trailing bytes after payload");
  }

 private:
  const std::string& data_;
  std::string origin_;
  size_t pos_ = 0;

  const char* take(size_t n) {
    if (pos_ + n > data_.size()) throw DataError(origin_ + ": truncated file");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  template <typename T>
  T read_as() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
};

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace spt
