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

// End-to-end session driver: runs a full client/server exchange for any of
// the three applications over either transport, optionally with the server
// executing one behavior from the malicious-server catalog. Every attack is
// a deterministic transformation of the honest server's messages or state,
// and each maps to exactly one documented rejection reason.

#ifndef VFHE_HARNESS_HPP
#define VFHE_HARNESS_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfhe/fhe.hpp"
#include "vfhe/psi.hpp"
#include "vfhe/tpm.hpp"
#include "vfhe/wire.hpp"

namespace vfhe::harness {

enum class App : std::uint8_t { Vfhe = 1, Pir = 2, Psi = 3 };

enum class AttackBehavior : std::uint8_t {
  None = 0,
  // Replace the enclave's output ciphertext bytes with a flipped copy.
  TamperOutputCiphertext,
  // Substitute fresh, validly formed encryptions under the client's own key.
  ReencryptCorrectOutput,
  // Run a circuit with identical input/output behavior but different bytes.
  SwapCircuit,
  // Plant a database value outside the plaintext space.
  MalformedDbEntry,
  // Transcribe an arbitrary digest instead of the served data's root.
  WrongCommitment,
  // Modify the data after publication and serve it, commitment and all.
  RecommitModifiedSet,
  // Answer the attestation request with a previously attested transcript.
  ReplayTranscript,
  // Run on a platform whose attestation chain ends at an untrusted root.
  ForgeSignature,
  // Answer one request outside the enclave, leaving it untranscribed.
  DropInput,
  // Feed requests to the enclave in a different order than they arrived.
  ReorderInputs,
};

const char* to_string(App a);
const char* to_string(AttackBehavior b);
std::optional<App> app_from_string(std::string_view s);
std::optional<AttackBehavior> attack_from_string(std::string_view s);

// The ten active behaviors, in declaration order.
std::vector<AttackBehavior> all_attacks();

// The reason a verifying client reports for each behavior. This is the
// contract the soundness suite checks.
Reason expected_reason(AttackBehavior b);

// One row of the amortization benchmark. Attestation time is virtual: the
// TPM charges its modeled quote latency against a virtual clock, so the
// numbers are hardware-faithful without wall-clock sleeps.
struct BenchReport {
  App app = App::Vfhe;
  std::size_t batch = 0;
  double setup_ms = 0;       // platform boot and key generation
  double preprocess_ms = 0;  // data packing and commitment
  double per_query_ms = 0;   // wall time per request round trip
  double attest_ms = 0;      // virtual TPM time charged for the batch quote
  double attest_per_query_ms = 0;
  std::uint64_t signatures = 0;  // TPM signatures spent on the batch
  std::uint64_t wire_bytes = 0;  // framed bytes, both directions

  static std::string csv_header();
  std::string csv_row() const;
};

struct SessionConfig {
  App app = App::Vfhe;
  AttackBehavior attack = AttackBehavior::None;
  std::uint64_t seed = 1;
  // Queries per attested batch; for PSI this is the client's item count
  // (the protocol always has its two rounds).
  std::size_t batch = 1;
  bool over_tcp = false;
  std::uint64_t latency_micros = tpm::kDefaultQuoteLatencyMicros;
  fhe::Params params = fhe::Params::desk();
  std::size_t db_entries = 16;  // PIR database size; power of two
  std::size_t entry_size = 16;  // PIR entry bytes
  std::size_t set_size = 24;    // PSI server set size
};

struct SessionResult {
  bool accepted = false;
  Reason reason = Reason::Accepted;
  // Client-side counters after the session: decryptions performed and PIR
  // payload checksum failures observed.
  std::uint64_t decrypted = 0;
  std::uint64_t decryption_failures = 0;
  // On acceptance: the application-level results, and whether they equal
  // the locally computed ground truth.
  std::vector<Bytes> outputs;
  bool outputs_match = false;
  // The attested transcript exactly as received, and a digest over all
  // response payloads; both are transport-independent.
  Bytes transcript_wire;
  crypto::Digest response_digest{};
  BenchReport bench;
};

SessionResult run_session(const SessionConfig& cfg);

// Honest benchmark sweep over batch sizes, PIR-shaped by default: 64
// entries of 128 bytes.
std::vector<BenchReport> run_bench(App app, std::span<const std::size_t> batches,
                                   std::uint64_t latency_micros = tpm::kDefaultQuoteLatencyMicros,
                                   bool over_tcp = false);

// The honest server half of one application bound to a frame handler: the
// same state machine run_session drives, without the attack hooks. A serve
// command owns one of these and passes handler() to a TcpServer.
class ServerEndpoint {
 public:
  // PIR over fixed-size records of cfg.entry_size bytes each.
  static ServerEndpoint pir(SessionConfig cfg, const crypto::SecretKey& endorsement_sk,
                            std::vector<Bytes> entries);
  // PSI over raw set items; the bin table is sized from the set.
  static ServerEndpoint psi(SessionConfig cfg, const crypto::SecretKey& endorsement_sk,
                            std::vector<Bytes> items);
  ~ServerEndpoint();
  ServerEndpoint(ServerEndpoint&&) noexcept;
  ServerEndpoint& operator=(ServerEndpoint&&) noexcept;

  // False when the data was rejected at install time; the reason says why,
  // and every session against the endpoint is refused with it.
  bool serving() const;
  Reason init_reason() const;
  const crypto::Digest& root() const;  // published commitment root
  psi::Binning binning() const;        // published PSI table shape
  // One session at a time.
  wire::Handler handler();

 private:
  struct Impl;
  explicit ServerEndpoint(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Client halves run against an already-connected channel, typically a
// TcpChannel to a remote serve command. Trust references arrive out of
// band: the endorsement root inside `anchors`, the commitment root and
// table geometry from the serve command's published values. On acceptance
// the received attested transcript is left in *transcript_wire when a sink
// is given. Indices must be below entry_count; entry_count must match the
// served database.
Outcome<std::vector<Bytes>> pir_query(wire::Channel& ch, const fhe::Params& params,
                                      const scheme::TrustAnchors& anchors, Rng rng,
                                      std::size_t entry_count, std::size_t entry_size,
                                      const crypto::Digest& reference_root,
                                      std::span<const std::size_t> indices,
                                      Bytes* transcript_wire = nullptr);

Outcome<std::vector<Bytes>> psi_intersect(wire::Channel& ch, const fhe::Params& params,
                                          const scheme::TrustAnchors& anchors, Rng rng,
                                          std::vector<Bytes> items, const psi::PsiServerInfo& info,
                                          Bytes* transcript_wire = nullptr);

}  // namespace vfhe::harness

#endif  // VFHE_HARNESS_HPP
