/*
 * Copyright 2026 the vfhe authors
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Byte-buffer utilities shared by every module: hex codecs, big-endian field
// access, and bounds-checked cursor types for parsing wire formats.

#ifndef VFHE_BYTES_HPP
#define VFHE_BYTES_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vfhe {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Thrown when an incoming byte string does not parse as the expected wire
// shape. Verification paths catch it and convert to a rejection value.
class MalformedMessage : public std::runtime_error {
 public:
  explicit MalformedMessage(const std::string& what) : std::runtime_error(what) {}
};

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_hex(ByteView v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(v.size() * 2);
  for (std::uint8_t b : v) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

inline Bytes from_hex(std::string_view s) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (s.size() % 2 != 0) throw MalformedMessage("hex string has odd length");
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nib(s[2 * i]), lo = nib(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw MalformedMessage("bad hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

// Append-only writer for the fixed big-endian wire formats.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(std::size_t reserve) { buf_.reserve(reserve); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }
  void raw(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }
  template <std::size_t N>
  void raw(const std::array<std::uint8_t, N>& a) {
    buf_.insert(buf_.end(), a.begin(), a.end());
  }

  Bytes take() { return std::move(buf_); }
  const Bytes& view() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

// Bounds-checked cursor over an immutable byte view. Every accessor throws
// MalformedMessage on underflow; callers that finished parsing call done()
// to reject trailing garbage.
class ByteReader {
 public:
  explicit ByteReader(ByteView v) : data_(v) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    ByteView b = take(2);
    return static_cast<std::uint16_t>(b[0] << 8 | b[1]);
  }
  std::uint32_t u32() {
    ByteView b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
    return v;
  }
  std::uint64_t u64() {
    ByteView b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
    return v;
  }
  ByteView take(std::size_t n) {
    if (n > remaining()) throw MalformedMessage("message truncated");
    ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  Bytes take_bytes(std::size_t n) {
    ByteView v = take(n);
    return Bytes(v.begin(), v.end());
  }
  template <std::size_t N>
  std::array<std::uint8_t, N> take_array() {
    ByteView v = take(N);
    std::array<std::uint8_t, N> out;
    std::memcpy(out.data(), v.data(), N);
    return out;
  }
  void done() const {
    if (pos_ != data_.size()) throw MalformedMessage("trailing bytes after message");
  }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace vfhe

#endif  // VFHE_BYTES_HPP
