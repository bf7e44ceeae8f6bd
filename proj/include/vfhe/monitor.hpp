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

// Security monitor: the measured-boot root of trust that owns the TPM,
// hosts enclaves, and keeps an append-only transcript of everything an
// enclave consumes and produces. Attestation folds the transcript digest
// into PCR2 and has the TPM sign the register state; the monitor itself
// holds no signing secrets.
//
// Register assignment: PCR0 = monitor binary measurement, PCR1 = boot
// configuration measurement, PCR2 = hash chain of attested transcript
// digests (never reset; verifiers refold the whole history).

#ifndef VFHE_MONITOR_HPP
#define VFHE_MONITOR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "vfhe/crypto.hpp"
#include "vfhe/reason.hpp"
#include "vfhe/tpm.hpp"

namespace vfhe::monitor {

enum class EntryTag : std::uint8_t {
  SmMeasurement = 0x01,
  EnclaveMeasurement = 0x02,
  InitState = 0x03,
  Input = 0x04,
  Output = 0x05,
  ServerInputCommitment = 0x06,
};

struct TranscriptEntry {
  EntryTag tag;
  crypto::Digest payload;

  bool operator==(const TranscriptEntry&) const = default;
};

// Append-only ledger with a running digest
//   D_0 = 0^32,  D_i = H(D_{i-1} || tag_i || payload_i).
struct Transcript {
  std::vector<TranscriptEntry> entries;
  crypto::Digest running;

  void append(EntryTag tag, const crypto::Digest& payload);
  // Recomputes the running digest from scratch; equals `running` by
  // construction and is what verifiers rebuild on their side.
  static crypto::Digest fold(const std::vector<TranscriptEntry>& entries);

  Bytes serialize() const;  // count (4) || (tag (1) || payload (32))*
  static Transcript parse(ByteView v);
};

// Initial register and memory-layout state of an enclave; part of its
// measured identity so that two enclaves with equal code but different
// layouts are distinguishable.
struct InitState {
  std::uint64_t entry_point = 0x1000;
  std::uint64_t stack_pointer = 0x8000;
  std::uint64_t page_table_root = 0x100000;
  std::uint64_t shared_mem_base = 0x200000;
  std::uint64_t shared_mem_size = 0x10000;

  Bytes canonical() const;  // five fields, 8 bytes each, big-endian
  bool operator==(const InitState&) const = default;
};

struct EnclaveImage {
  Bytes binary;
  InitState init;

  crypto::Digest binary_digest() const { return crypto::sha256(binary); }
  crypto::Digest init_digest() const { return crypto::sha256(init.canonical()); }
  // Combined identity: H(binary || canonical init state).
  crypto::Digest measurement() const;
};

// The function an enclave runs. A returned rejection marks the enclave
// aborted: its transcript ends at the INPUT entry that triggered it.
using EnclaveComputation = std::function<Outcome<Bytes>(ByteView)>;

enum class EnclaveState : std::uint8_t { Running, Aborted, Closed };

using EnclaveId = std::uint32_t;

// Everything a verifier receives: the per-enclave transcript, the full
// history of transcript digests folded into PCR2 since boot, and the quote.
struct AttestedTranscript {
  Transcript transcript;
  std::vector<crypto::Digest> pcr2_history;
  tpm::Quote quote;

  Bytes serialize() const;
  static AttestedTranscript parse(ByteView v);
};

class Monitor {
 public:
  // Measures the monitor image and boot configuration into PCR0/PCR1.
  // Rejects with RebootRequired if those registers are already occupied:
  // a measured boot only means something from power-on state.
  static Outcome<Monitor> measured_boot(tpm::Tpm& tpm, ByteView sm_binary,
                                        ByteView boot_config = {});

  Monitor(Monitor&&) = default;
  Monitor& operator=(Monitor&&) = default;
  Monitor(const Monitor&) = delete;
  Monitor& operator=(const Monitor&) = delete;

  // Opens an enclave: fresh transcript carrying both monitor measurements,
  // the enclave code measurement, and the init-state measurement, in that
  // order (four entries).
  EnclaveId create_enclave(const EnclaveImage& image, EnclaveComputation fn);

  // Records the server's committed-input root. Only legal before the first
  // INPUT entry of that enclave.
  void commit_server_input(EnclaveId id, const crypto::Digest& root);

  // Transcribes the input, runs the enclave function, transcribes the
  // output. On a signalled abort the OUTPUT entry is withheld and the
  // enclave is dead to further runs.
  Outcome<Bytes> run(EnclaveId id, ByteView input);

  // Folds the transcript digest into PCR2 and quotes PCR0..2 against the
  // caller nonce. Closes the enclave; one quote per enclave lifetime.
  AttestedTranscript attest(EnclaveId id, const tpm::Nonce& nonce);

  EnclaveState state(EnclaveId id) const;
  const Transcript& transcript(EnclaveId id) const;
  const crypto::Digest& sm_binary_measurement() const { return sm_binary_digest_; }
  const crypto::Digest& boot_config_measurement() const { return boot_config_digest_; }
  const std::vector<crypto::Digest>& pcr2_history() const { return pcr2_history_; }
  tpm::Tpm& tpm() { return *tpm_; }

  // Flat serialization of all monitor-held state, for audits that assert
  // no key material lives here.
  Bytes state_image() const;

 private:
  explicit Monitor(tpm::Tpm& tpm) : tpm_(&tpm) {}

  struct Enclave {
    crypto::Digest binary_digest;
    crypto::Digest init_digest;
    Transcript transcript;
    EnclaveComputation fn;
    EnclaveState state = EnclaveState::Running;
  };

  Enclave& require(EnclaveId id);
  const Enclave& require(EnclaveId id) const;

  tpm::Tpm* tpm_;
  crypto::Digest sm_binary_digest_;
  crypto::Digest boot_config_digest_;
  std::map<EnclaveId, Enclave> enclaves_;
  std::vector<crypto::Digest> pcr2_history_;
  EnclaveId next_id_ = 1;
};

// One extend step, H(prev || d): the chain PCRs and verifiers both speak.
crypto::Digest extend_digest(const crypto::Digest& prev, const crypto::Digest& d);
// Folds a digest sequence into the PCR value it produces from power-on zero.
crypto::Digest fold_pcr(const std::vector<crypto::Digest>& history);

// The monitor image this build ships; measured into PCR0 at boot. Clients
// use the same constant to derive their expected measurement.
ByteView default_sm_binary();

}  // namespace vfhe::monitor

#endif  // VFHE_MONITOR_HPP
