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

#ifndef VFHE_RNG_HPP
#define VFHE_RNG_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "vfhe/bytes.hpp"

namespace vfhe {

// Deterministic random stream (ChaCha20 keystream under a fixed seed).
// Every random choice in the system flows through one of these so that a
// session replayed under the same seed is byte-identical.
class Rng {
 public:
  explicit Rng(const std::array<std::uint8_t, 32>& seed);

  // Convenience seeding from a small integer: key = SHA-256 of the
  // big-endian encoding. Distinct integers give unrelated streams.
  static Rng from_seed(std::uint64_t seed);

  void fill(std::span<std::uint8_t> out);
  std::uint8_t next_u8();
  std::uint64_t next_u64();

  // Uniform draw from [0, bound) by rejection; bound must be nonzero.
  std::uint64_t uniform_below(std::uint64_t bound);

  // Derives an independent stream keyed by (seed, label). Used to give
  // client and server unrelated randomness from one session seed.
  Rng fork(std::string_view label) const;

 private:
  void refill();

  std::array<std::uint8_t, 32> key_;
  std::array<std::uint8_t, 4096> block_;
  std::size_t pos_;
  std::uint64_t counter_;
};

}  // namespace vfhe

#endif  // VFHE_RNG_HPP
