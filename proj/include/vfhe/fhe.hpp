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

// Minimal scale-invariant homomorphic encryption over R_q = Z_q[X]/(X^n+1).
//
// Keys:    s ternary; pk = (b, a) with b = -(a*s) - e, a uniform.
// Encrypt: c0 = b*u + e0 + Delta*m, c1 = a*u + e1, with Delta = floor(q/t).
// Decrypt: m = round((t/q) * (c0 + c1*s)) mod t, coefficient-wise.
//
// The operator set is deliberately small: ciphertext addition, plaintext
// addition, and plaintext multiplication. There is no ciphertext-ciphertext
// multiplication, no relinearization, and no modulus switching; all three
// operators are bitwise deterministic, which is what lets an execution
// transcript pin down the evaluated function.

#ifndef VFHE_FHE_HPP
#define VFHE_FHE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vfhe/bytes.hpp"
#include "vfhe/rng.hpp"

namespace vfhe::fhe {

// An operand coefficient escaped the plaintext space [0, t). Raised by the
// homomorphic operators; protocol layers run explicit scans first and turn
// this condition into a rejection value before it can throw.
class PlaintextSpaceViolation : public std::runtime_error {
 public:
  explicit PlaintextSpaceViolation(const std::string& what) : std::runtime_error(what) {}
};

struct Params {
  std::uint32_t n = 0;   // ring degree, power of two
  std::uint64_t q = 0;   // ciphertext modulus, prime, < 2^62
  std::uint64_t t = 0;   // plaintext modulus
  double sigma = 0.0;    // error width; samples are cut at 6*sigma

  // Desk-scale profile: n=1024, 52-bit q with q = 1 mod t, t=65537.
  static Params desk();
  // Same moduli over a larger ring, for payload-size experiments.
  static Params desk_ring(std::uint32_t n);
  // Small-ring profile for exhaustive tests.
  static Params tiny();

  std::uint64_t delta() const { return q / t; }
  std::uint64_t error_bound() const;  // ceil(6*sigma)
  // Identifies the parameter set in wire headers: first four bytes of a
  // digest over (n, q, t, round(1000*sigma)).
  std::uint32_t id() const;
  void validate() const;

  bool operator==(const Params&) const = default;
};

struct Poly {
  std::vector<std::uint64_t> c;  // length n, values in [0, q)

  bool operator==(const Poly&) const = default;
};

struct Plaintext {
  std::vector<std::uint64_t> c;  // length n, values in [0, t)

  bool operator==(const Plaintext&) const = default;
};

struct SecretKey {
  std::uint32_t params_id = 0;
  Poly s;
  // Positions of the +1 / -1 coefficients of s, kept for the fast
  // ternary-multiply path in decryption.
  std::vector<std::uint32_t> plus_idx, minus_idx;
};

struct PublicKey {
  std::uint32_t params_id = 0;
  Poly b, a;

  Bytes serialize() const;
  static PublicKey parse(const Params& p, ByteView v);
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

// Wire layout: params id (4) || k (2) || k*n coefficients, 8 bytes each,
// big-endian. The tracked noise bound is diagnostic state, derived where the
// secret key lives, and is never serialized.
struct Ciphertext {
  std::uint32_t params_id = 0;
  std::vector<Poly> polys;     // k >= 2 ring elements
  double noise_bound = 0.0;    // conservative infinity-norm bound on the noise

  static Ciphertext zero(const Params& p);  // the trivial noiseless encryption of 0

  Bytes serialize() const;
  static Ciphertext parse(const Params& p, ByteView v);
};

KeyPair gen(const Params& p, Rng& rng);

Plaintext encode_vector(const Params& p, std::span<const std::uint64_t> values);
std::vector<std::uint64_t> decode_vector(const Params& p, const Plaintext& pt);
Plaintext encode_scalar(const Params& p, std::uint64_t value);

Ciphertext encrypt(const Params& p, const PublicKey& pk, const Plaintext& pt, Rng& rng);
Plaintext decrypt(const Params& p, const SecretKey& sk, const Ciphertext& ct);

Ciphertext add(const Params& p, const Ciphertext& x, const Ciphertext& y);
Ciphertext add_plain(const Params& p, const Ciphertext& x, const Plaintext& m);
Ciphertext mul_plain(const Params& p, const Ciphertext& x, const Plaintext& m);

// Measured noise budget in bits: floor(log2(q/2t) - log2(max(1, |v|_inf)))
// where v is the actual noise recovered with the secret key. Negative once
// the noise passes the decryption threshold. Throws on params mismatch.
std::int64_t noise_budget(const Params& p, const SecretKey& sk, const Ciphertext& ct);

// Tracked a-priori budget from the ciphertext's own noise bound; no key
// needed. Never increases under the homomorphic operators.
std::int64_t budget_estimate(const Params& p, const Ciphertext& ct);

bool in_plaintext_space(const Params& p, const Plaintext& pt);

namespace detail {
// Negacyclic product reference path, exposed for oracle comparison in tests.
Poly negacyclic_mul(const Params& p, const Poly& x, const Poly& y);
}  // namespace detail

}  // namespace vfhe::fhe

#endif  // VFHE_FHE_HPP
