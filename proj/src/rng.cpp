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

#include "vfhe/rng.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace vfhe {

namespace {
void ensure_sodium() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
}
}  // namespace

Rng::Rng(const std::array<std::uint8_t, 32>& seed) : key_(seed), pos_(block_.size()), counter_(0) {
  ensure_sodium();
}

Rng Rng::from_seed(std::uint64_t seed) {
  ensure_sodium();
  std::uint8_t enc[8];
  for (int i = 0; i < 8; ++i) enc[i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  std::array<std::uint8_t, 32> key;
  crypto_hash_sha256(key.data(), enc, sizeof enc);
  return Rng(key);
}

void Rng::refill() {
  std::uint8_t nonce[8];
  for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(counter_ >> (56 - 8 * i));
  ++counter_;
  std::memset(block_.data(), 0, block_.size());
  crypto_stream_chacha20_xor(block_.data(), block_.data(), block_.size(), nonce, key_.data());
  pos_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t off = 0;
  while (off < out.size()) {
    if (pos_ == block_.size()) refill();
    std::size_t n = std::min(out.size() - off, block_.size() - pos_);
    std::memcpy(out.data() + off, block_.data() + pos_, n);
    pos_ += n;
    off += n;
  }
}

std::uint8_t Rng::next_u8() {
  std::uint8_t b;
  fill({&b, 1});
  return b;
}

std::uint64_t Rng::next_u64() {
  std::uint8_t b[8];
  fill(b);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
  return v;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
  // Rejection from the largest multiple of bound below 2^64.
  std::uint64_t limit = ~static_cast<std::uint64_t>(0) - (~static_cast<std::uint64_t>(0) % bound);
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit || limit == 0) return v % bound;
  }
}

Rng Rng::fork(std::string_view label) const {
  std::array<std::uint8_t, 32> key;
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, key_.data(), key_.size());
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_hash_sha256_final(&st, key.data());
  return Rng(key);
}

}  // namespace vfhe
