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

// Verifiable homomorphic evaluation: a client encrypts inputs, an untrusted
// server evaluates a public circuit inside a monitored enclave, and the
// attested transcript proves that exactly that circuit ran over exactly
// those inputs. Decryption is gated on verification: the only way to obtain
// a VerifiedOutput is to pass every transcript check.

#ifndef VFHE_SCHEME_HPP
#define VFHE_SCHEME_HPP

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vfhe/fhe.hpp"
#include "vfhe/monitor.hpp"
#include "vfhe/reason.hpp"

namespace vfhe::scheme {

// Straight-line program over a single ciphertext accumulator, built from the
// three deterministic homomorphic operators. The serialized form is the
// enclave binary, so the program's bytes are its measured identity.
//
// Operand packing (8 bytes, big-endian):
//   MacInputConst   input index (hi 32) || scalar weight (lo 32)
//   AddConst        scalar value
//   MacInputServer  input index (hi 32) || server element index (lo 32)
//   AddServer       server element index (lo 32)
struct Circuit {
  enum class OpCode : std::uint8_t {
    MacInputConst = 0x01,   // acc += input[i] * w
    AddConst = 0x02,        // acc += v
    MacInputServer = 0x03,  // acc += input[i] * server[j]
    AddServer = 0x04,       // acc += server[j]
  };
  struct Op {
    OpCode code;
    std::uint64_t operand;
    bool operator==(const Op&) const = default;
  };
  std::vector<Op> ops;

  static Circuit identity();
  static Circuit affine(std::uint64_t scale, std::uint64_t offset);
  static Circuit inner_product(std::span<const std::uint64_t> weights);
  // acc = sum_j input[j] * server[j]; the database-style evaluation shape.
  static Circuit server_inner_product(std::size_t k);

  Bytes serialize() const;  // count (2) || (opcode (1) || operand (8))*
  static Circuit parse(ByteView v);

  std::size_t input_arity() const;
  std::size_t server_arity() const;
  bool uses_server_input() const { return server_arity() > 0; }

  fhe::Ciphertext evaluate(const fhe::Params& p, std::span<const fhe::Ciphertext> inputs,
                           std::span<const fhe::Plaintext> server_input) const;

  bool operator==(const Circuit&) const = default;
};

// The enclave image a circuit runs as; both sides derive it from the same
// public description, which is how the client knows what measurement to
// expect.
monitor::EnclaveImage image_for(const Circuit& c);

// Request/response payloads are ciphertext lists:
//   count (2) || (length (4) || ciphertext bytes)*
Bytes serialize_ct_list(std::span<const fhe::Ciphertext> cts);
std::vector<fhe::Ciphertext> parse_ct_list(const fhe::Params& p, ByteView v);

Bytes serialize_plaintext(const fhe::Params& p, const fhe::Plaintext& pt);

// Evaluates one request message against a circuit the way the enclave does:
// well-formedness scan over the server input, then parse, arity check, and
// circuit evaluation. Returns the serialized response message.
Outcome<Bytes> evaluate_request(const fhe::Params& p, const Circuit& c,
                                std::span<const fhe::Plaintext> server_input, ByteView request);

// What a client must know about the platform out of band: the manufacturer
// root that endorses attestation keys and the good-known monitor
// measurements.
struct TrustAnchors {
  crypto::PublicKey manufacturer_root_pk;
  crypto::Digest sm_binary_measurement;
  crypto::Digest boot_config_measurement;
};

TrustAnchors default_anchors(const crypto::PublicKey& manufacturer_root_pk);

// TPM plus monitor, heap-pinned so the monitor's device reference survives
// moves.
struct Platform {
  std::unique_ptr<tpm::Tpm> tpm;
  monitor::Monitor monitor;

  static Platform boot(const crypto::SecretKey& manufacturer_root_sk, Rng& rng,
                       ByteView sm_binary = monitor::default_sm_binary());
};

class Server;

// One enclave lifetime on the server: answer zero or more requests, then
// attest the whole batch with a single quote.
class EvalSession {
 public:
  Outcome<Bytes> answer(ByteView request);
  monitor::AttestedTranscript finish(const tpm::Nonce& nonce);

 private:
  friend class Server;
  EvalSession(Server& server, monitor::EnclaveId id) : server_(&server), id_(id) {}
  Server* server_;
  monitor::EnclaveId id_;
};

class Server {
 public:
  Server(const fhe::Params& p, Platform platform);

  // Registers a circuit under its measured identity.
  crypto::Digest register_circuit(const Circuit& c);

  // Installs the committed server-side input vector and publishes its
  // binding commitment root. Values are deliberately not validated here;
  // the enclave's well-formedness check is the defense.
  void set_server_input(std::vector<fhe::Plaintext> w);
  // Replaces one element and refreshes the published root along a single
  // leaf-to-root path instead of rebuilding the tree.
  void update_server_input(std::size_t index, fhe::Plaintext pt);
  const crypto::Digest& committed_root() const;
  const crypto::MerkleTree& commitment() const;
  const std::vector<fhe::Plaintext>& server_input() const { return server_input_; }
  std::vector<fhe::Plaintext>& mutable_server_input() { return server_input_; }

  // Opens an enclave for the given registered circuit. For circuits that
  // read server input the commitment root is transcribed before any input;
  // `commitment_override` lets a dishonest caller transcribe something else.
  Outcome<EvalSession> open_session(const crypto::Digest& measurement,
                                    std::optional<crypto::Digest> commitment_override = {});

  const fhe::Params& params() const { return params_; }
  Platform& platform() { return platform_; }

 private:
  friend class EvalSession;
  struct Registered {
    Circuit circuit;
    monitor::EnclaveImage image;
  };

  fhe::Params params_;
  Platform platform_;
  std::map<std::array<std::uint8_t, 32>, Registered> registry_;
  std::vector<fhe::Plaintext> server_input_;
  std::optional<crypto::MerkleTree> commitment_;
};

// A response message that passed transcript verification, together with the
// digest of the transcript that vouches for it. Not constructible outside
// the verifier: decryption requires one, so unverified responses cannot
// reach the secret key. Protocols with non-ciphertext rounds simply never
// ask for the ciphertext view of those messages.
class VerifiedOutput {
 public:
  const Bytes& message() const { return message_; }
  // Parses the message as a ciphertext list. Calling this on a round that
  // is not one is a caller bug and throws.
  std::vector<fhe::Ciphertext> ciphertexts() const;
  const crypto::Digest& transcript_digest() const { return transcript_digest_; }

 private:
  friend class Client;
  VerifiedOutput(fhe::Params p, Bytes message, crypto::Digest d)
      : params_(p), message_(std::move(message)), transcript_digest_(d) {}
  fhe::Params params_;
  Bytes message_;
  crypto::Digest transcript_digest_;
};

// Everything the client checks a transcript against.
struct VerifySpec {
  crypto::Digest enclave_binary_digest;
  crypto::Digest init_digest;
  std::optional<crypto::Digest> commitment_root;
  std::vector<Bytes> sent;      // request messages, in send order
  std::vector<Bytes> received;  // response messages, in receive order
  tpm::Nonce nonce{};
};

class Client {
 public:
  Client(const fhe::Params& p, const TrustAnchors& anchors, Rng rng);

  const fhe::PublicKey& public_key() const { return keys_.pk; }
  Bytes public_key_bytes() const { return keys_.pk.serialize(); }

  tpm::Nonce fresh_nonce();

  // One ciphertext per scalar, packed into a single request message.
  Bytes encrypt_request(std::span<const std::uint64_t> values);

  // Full transcript verification; on success returns one VerifiedOutput per
  // response message. Checks run in a fixed order and report the first
  // failure: UntrustedEndorsement, BadQuote, MonitorMismatch,
  // TranscriptMismatch, CircuitMismatch, InputMismatch, OutputMismatch,
  // CommitmentMismatch.
  Outcome<std::vector<VerifiedOutput>> verify(const monitor::AttestedTranscript& at,
                                              const VerifySpec& spec);
  // Same, over the serialized transcript as received from the wire.
  Outcome<std::vector<VerifiedOutput>> verify_wire(ByteView attested_transcript,
                                                   const VerifySpec& spec);

  // The only decryption path. Counts every ciphertext it opens.
  fhe::Plaintext decrypt(const VerifiedOutput& out, std::size_t index);
  std::uint64_t decrypt_scalar(const VerifiedOutput& out, std::size_t index);
  std::uint64_t decrypt_count() const { return decrypt_count_; }

  std::int64_t response_noise_budget(const VerifiedOutput& out, std::size_t index) const;

  const fhe::Params& params() const { return params_; }

 private:
  fhe::Params params_;
  TrustAnchors anchors_;
  Rng rng_;
  fhe::KeyPair keys_;
  std::uint64_t decrypt_count_ = 0;
};

// Offline platform checks over a saved attested transcript: endorsement
// chain, quote signature and register selection, monitor measurements,
// the PCR2 fold against the quoted composite, and the entry-tag structure.
// Nonce freshness and application expectations (which circuit, which
// inputs and outputs, which commitment) only mean something inside a live
// session; Client::verify covers those. Returns the parsed transcript.
Outcome<monitor::AttestedTranscript> inspect_transcript(ByteView wire,
                                                        const TrustAnchors& anchors);

}  // namespace vfhe::scheme

#endif  // VFHE_SCHEME_HPP
