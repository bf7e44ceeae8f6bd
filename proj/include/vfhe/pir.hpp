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

// Authenticated private information retrieval. The client sends a one-hot
// vector of N ciphertexts; the enclave computes the inner product with the
// packed database, so the response decrypts to exactly the selected entry.
// The database is committed in a binding (non-hiding) Merkle tree whose root
// the enclave transcribes, and every entry carries an in-band checksum so a
// corrupted decryption is observable instead of silent.

#ifndef VFHE_PIR_HPP
#define VFHE_PIR_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "vfhe/scheme.hpp"

namespace vfhe::pir {

// Entries are fixed-size byte strings packed two bytes per coefficient,
// big-endian, with the first four bytes of sha256(entry) appended:
//   coeffs = be16(entry || checksum), zero-padded to degree n.
// Requires an even entry_size and (entry_size + 4) / 2 <= n.
std::size_t packed_coeff_count(std::size_t entry_size);
fhe::Plaintext pack_entry(const fhe::Params& p, ByteView entry, std::size_t entry_size);

// Strict inverse: rejects out-of-range coefficients, nonzero padding, and
// checksum mismatches as DecryptionFailure.
Outcome<Bytes> unpack_entry(const fhe::Params& p, const fhe::Plaintext& pt,
                            std::size_t entry_size);

class PirServer {
 public:
  PirServer(const fhe::Params& p, scheme::Platform platform, std::size_t entry_size);

  // Packs and installs the database and publishes the commitment root.
  // N must be a power of two; entries longer than entry_size are a caller
  // error, shorter ones are zero-padded.
  Outcome<crypto::Digest> init(const std::vector<Bytes>& entries);

  // Installs an already-packed database. This is the knob a misbehaving
  // operator turns: values are type-checked exactly like init(), and any
  // out-of-range coefficient puts the server into the refusing state before
  // a single query is answered.
  Outcome<crypto::Digest> init_packed(std::vector<fhe::Plaintext> packed);

  // Replaces one entry; the published root is refreshed along one
  // leaf-to-root path.
  void update_entry(std::size_t index, ByteView entry);

  // One batch of queries = one enclave lifetime = one quote.
  Outcome<scheme::EvalSession> open_batch();

  bool serving() const { return serving_; }
  std::size_t entry_count() const { return core_.server_input().size(); }
  std::size_t entry_size() const { return entry_size_; }
  const crypto::Digest& root() const { return core_.committed_root(); }
  const crypto::Digest& measurement() const { return measurement_; }
  scheme::Server& core() { return core_; }

 private:
  std::size_t entry_size_;
  bool serving_ = false;
  scheme::Server core_;
  crypto::Digest measurement_{};
};

class PirClient {
 public:
  PirClient(const fhe::Params& p, const scheme::TrustAnchors& anchors, Rng rng,
            std::size_t entry_size);

  // Starts a batch against a server holding n entries whose published root
  // was fetched out-of-band.
  void begin_batch(std::size_t n, const crypto::Digest& reference_root);

  // One-hot query for db[index]; fresh randomness every call.
  Bytes build_query(std::size_t index);
  void record_response(Bytes response);
  const tpm::Nonce& nonce() const;

  // Verifies the batch transcript and, only then, decrypts and unpacks one
  // entry per recorded response.
  Outcome<std::vector<Bytes>> finish_batch(const monitor::AttestedTranscript& at);
  Outcome<std::vector<Bytes>> finish_batch_wire(ByteView attested_transcript);

  std::uint64_t decryption_failures() const { return decryption_failures_; }
  // Measured noise margin of each response in the last successful batch,
  // in bits left before decryption would fail.
  const std::vector<std::int64_t>& response_budgets() const { return response_budgets_; }
  scheme::Client& core() { return core_; }

 private:
  Outcome<std::vector<Bytes>> unpack_all(std::vector<scheme::VerifiedOutput> outs);

  std::size_t entry_size_;
  std::size_t n_ = 0;
  bool batch_open_ = false;
  scheme::Client core_;
  scheme::VerifySpec spec_;
  std::uint64_t decryption_failures_ = 0;
  std::vector<std::int64_t> response_budgets_;
};

}  // namespace vfhe::pir

#endif  // VFHE_PIR_HPP
