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

// Software model of a discrete TPM: a bank of hash-chained platform
// configuration registers, an endorsement-certified attestation key, and a
// quote operation that signs the selected register values against a caller
// nonce. The attestation secret never leaves this object; it is the only
// signing secret anywhere in the system. The device is single-owner: calls
// are not thread-safe and are expected to be serialized by the monitor.

#ifndef VFHE_TPM_HPP
#define VFHE_TPM_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "vfhe/crypto.hpp"
#include "vfhe/rng.hpp"

namespace vfhe::tpm {

inline constexpr std::size_t kNumPcrs = 24;
inline constexpr std::size_t kQuoteBytes = 231;
inline constexpr std::size_t kQuoteSignedPrefix = 71;

// Quote latency of a discrete TPM part, in microseconds. Charged against a
// virtual clock by default so benchmarks can report hardware-faithful
// attestation cost without waiting for it.
inline constexpr std::uint64_t kDefaultQuoteLatencyMicros = 195752;

using Nonce = std::array<std::uint8_t, 32>;

// Wire layout (231 bytes total):
//   "TPMQ" (4) || selection bitmap (3) || composite digest (32) || nonce (32)
//   || signature over the preceding 71 bytes (64) || attestation pk (32)
//   || endorsement certificate (64)
// The composite digest hashes the selected PCR values in ascending index
// order; bit p%8 of bitmap byte p/8 marks PCR p as selected.
struct Quote {
  std::array<std::uint8_t, 3> selection{};
  crypto::Digest composite;
  Nonce nonce{};
  crypto::Signature signature;
  crypto::PublicKey attestation_pk;
  crypto::Signature certificate;

  Bytes signed_prefix() const;
  Bytes serialize() const;
  static Quote parse(ByteView v);
};

std::array<std::uint8_t, 3> selection_bitmap(const std::vector<std::size_t>& pcrs);
std::vector<std::size_t> selection_indices(const std::array<std::uint8_t, 3>& bitmap);

enum class QuoteCheck : std::uint8_t {
  Ok,
  UntrustedEndorsement,  // certificate does not chain to the trusted root
  BadSignature,
  NonceMismatch,
  SelectionMismatch,  // quoted PCR set differs from the expected one
  CompositeMismatch,  // claimed PCR values do not hash to the composite
};

class Tpm {
 public:
  // Manufactures and boots a device: draws a fresh attestation keypair and
  // certifies its public half under the manufacturer root. Every boot yields
  // a distinct attestation identity.
  static Tpm boot(const crypto::SecretKey& manufacturer_root_sk, Rng& rng);

  Tpm(Tpm&&) = default;
  Tpm& operator=(Tpm&&) = default;
  Tpm(const Tpm&) = delete;
  Tpm& operator=(const Tpm&) = delete;

  const crypto::Digest& pcr_read(std::size_t index) const;
  // pcr <- H(pcr || d); returns the new value. The only PCR-mutating call.
  crypto::Digest pcr_extend(std::size_t index, const crypto::Digest& d);

  Quote quote(const std::vector<std::size_t>& selection, const Nonce& nonce);

  const crypto::PublicKey& attestation_pk() const { return attestation_.pk; }
  const crypto::Signature& endorsement_certificate() const { return certificate_; }

  std::uint64_t signature_count() const { return signature_count_; }
  // Virtual time spent inside quote, per the latency model.
  std::uint64_t clock_micros() const { return clock_micros_; }

  std::uint64_t quote_latency_micros() const { return quote_latency_micros_; }
  void set_quote_latency_micros(std::uint64_t v) { quote_latency_micros_ = v; }
  // When set, quote additionally sleeps for the modeled latency.
  void set_realtime(bool v) { realtime_ = v; }

  // Snapshot of the full register bank, for no-mutation assertions.
  std::array<crypto::Digest, kNumPcrs> pcr_snapshot() const { return pcrs_; }

 private:
  Tpm() = default;

  std::array<crypto::Digest, kNumPcrs> pcrs_{};
  crypto::SigKeyPair attestation_;
  crypto::Signature certificate_;
  std::uint64_t signature_count_ = 0;
  std::uint64_t clock_micros_ = 0;
  std::uint64_t quote_latency_micros_ = kDefaultQuoteLatencyMicros;
  bool realtime_ = false;
};

// Endorsement check: does the certificate bind `attestation_pk` to the
// manufacturer root?
bool verify_endorsement(const crypto::PublicKey& manufacturer_root_pk, const Quote& q);

// Full quote verification against the expected PCR selection, the claimed
// values for exactly those registers (ascending index order), and the
// challenge nonce. Checks run in the order the enum lists them.
QuoteCheck verify_quote(const crypto::PublicKey& manufacturer_root_pk, const Quote& q,
                        const std::vector<std::size_t>& expected_selection,
                        const std::vector<crypto::Digest>& claimed_values, const Nonce& nonce);

}  // namespace vfhe::tpm

#endif  // VFHE_TPM_HPP
