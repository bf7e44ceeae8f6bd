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

#include "vfhe/scheme.hpp"

#include <stdexcept>

namespace vfhe::scheme {

Circuit Circuit::identity() {
  return Circuit{{{OpCode::MacInputConst, std::uint64_t{0} << 32 | 1}}};
}

Circuit Circuit::affine(std::uint64_t scale, std::uint64_t offset) {
  Circuit c;
  c.ops.push_back({OpCode::MacInputConst, std::uint64_t{0} << 32 | scale});
  c.ops.push_back({OpCode::AddConst, offset});
  return c;
}

Circuit Circuit::inner_product(std::span<const std::uint64_t> weights) {
  Circuit c;
  for (std::size_t j = 0; j < weights.size(); ++j)
    c.ops.push_back({OpCode::MacInputConst, static_cast<std::uint64_t>(j) << 32 | weights[j]});
  return c;
}

Circuit Circuit::server_inner_product(std::size_t k) {
  Circuit c;
  for (std::size_t j = 0; j < k; ++j)
    c.ops.push_back({OpCode::MacInputServer, static_cast<std::uint64_t>(j) << 32 | j});
  return c;
}

Bytes Circuit::serialize() const {
  ByteWriter w(2 + ops.size() * 9);
  w.u16(static_cast<std::uint16_t>(ops.size()));
  for (const Op& op : ops) {
    w.u8(static_cast<std::uint8_t>(op.code));
    w.u64(op.operand);
  }
  return w.take();
}

Circuit Circuit::parse(ByteView v) {
  ByteReader r(v);
  std::uint16_t count = r.u16();
  Circuit c;
  c.ops.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    std::uint8_t code = r.u8();
    if (code < 0x01 || code > 0x04) throw MalformedMessage("unknown circuit opcode");
    c.ops.push_back({static_cast<OpCode>(code), r.u64()});
  }
  r.done();
  return c;
}

std::size_t Circuit::input_arity() const {
  std::size_t arity = 0;
  for (const Op& op : ops)
    if (op.code == OpCode::MacInputConst || op.code == OpCode::MacInputServer)
      arity = std::max(arity, static_cast<std::size_t>(op.operand >> 32) + 1);
  return arity;
}

std::size_t Circuit::server_arity() const {
  std::size_t arity = 0;
  for (const Op& op : ops) {
    if (op.code == OpCode::MacInputServer || op.code == OpCode::AddServer)
      arity = std::max(arity, static_cast<std::size_t>(op.operand & 0xffffffffu) + 1);
  }
  return arity;
}

fhe::Ciphertext Circuit::evaluate(const fhe::Params& p, std::span<const fhe::Ciphertext> inputs,
                                  std::span<const fhe::Plaintext> server_input) const {
  auto input_at = [&](std::uint64_t operand) -> const fhe::Ciphertext& {
    std::size_t i = operand >> 32;
    if (i >= inputs.size()) throw std::out_of_range("circuit input index");
    return inputs[i];
  };
  auto server_at = [&](std::uint64_t operand) -> const fhe::Plaintext& {
    std::size_t j = operand & 0xffffffffu;
    if (j >= server_input.size()) throw std::out_of_range("circuit server index");
    return server_input[j];
  };

  fhe::Ciphertext acc = fhe::Ciphertext::zero(p);
  for (const Op& op : ops) {
    switch (op.code) {
      case OpCode::MacInputConst:
        acc = fhe::add(p, acc,
                       fhe::mul_plain(p, input_at(op.operand),
                                      fhe::encode_scalar(p, op.operand & 0xffffffffu)));
        break;
      case OpCode::AddConst:
        acc = fhe::add_plain(p, acc, fhe::encode_scalar(p, op.operand));
        break;
      case OpCode::MacInputServer:
        acc = fhe::add(p, acc, fhe::mul_plain(p, input_at(op.operand), server_at(op.operand)));
        break;
      case OpCode::AddServer:
        acc = fhe::add_plain(p, acc, server_at(op.operand));
        break;
    }
  }
  return acc;
}

monitor::EnclaveImage image_for(const Circuit& c) {
  return monitor::EnclaveImage{c.serialize(), monitor::InitState{}};
}

Bytes serialize_ct_list(std::span<const fhe::Ciphertext> cts) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(cts.size()));
  for (const fhe::Ciphertext& ct : cts) {
    Bytes b = ct.serialize();
    w.u32(static_cast<std::uint32_t>(b.size()));
    w.raw(b);
  }
  return w.take();
}

std::vector<fhe::Ciphertext> parse_ct_list(const fhe::Params& p, ByteView v) {
  ByteReader r(v);
  std::uint16_t count = r.u16();
  std::vector<fhe::Ciphertext> cts;
  cts.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    std::uint32_t len = r.u32();
    cts.push_back(fhe::Ciphertext::parse(p, r.take(len)));
  }
  r.done();
  return cts;
}

Bytes serialize_plaintext(const fhe::Params& p, const fhe::Plaintext& pt) {
  if (pt.c.size() != p.n) throw std::invalid_argument("plaintext size mismatch");
  ByteWriter w(pt.c.size() * 8);
  for (std::uint64_t c : pt.c) w.u64(c);
  return w.take();
}

Outcome<Bytes> evaluate_request(const fhe::Params& p, const Circuit& c,
                                std::span<const fhe::Plaintext> server_input, ByteView request) {
  // The committed server input is type-checked before the request is even
  // parsed; a malformed database aborts the enclave with no answer.
  for (const fhe::Plaintext& pt : server_input)
    if (!fhe::in_plaintext_space(p, pt)) return Reason::WellFormednessViolation;

  std::vector<fhe::Ciphertext> inputs;
  try {
    inputs = parse_ct_list(p, request);
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
  if (inputs.size() != c.input_arity()) return Reason::InputMismatch;
  if (c.server_arity() > server_input.size()) return Reason::EvalAborted;

  try {
    fhe::Ciphertext out = c.evaluate(p, inputs, server_input);
    return serialize_ct_list(std::span<const fhe::Ciphertext>(&out, 1));
  } catch (const fhe::PlaintextSpaceViolation&) {
    return Reason::PlaintextSpaceViolation;
  }
}

TrustAnchors default_anchors(const crypto::PublicKey& manufacturer_root_pk) {
  return TrustAnchors{manufacturer_root_pk, crypto::sha256(monitor::default_sm_binary()),
                      crypto::sha256({})};
}

Platform Platform::boot(const crypto::SecretKey& manufacturer_root_sk, Rng& rng, ByteView sm_binary) {
  auto device = std::make_unique<tpm::Tpm>(tpm::Tpm::boot(manufacturer_root_sk, rng));
  Outcome<monitor::Monitor> mon = monitor::Monitor::measured_boot(*device, sm_binary);
  if (!mon.ok()) throw std::logic_error("fresh device failed measured boot");
  return Platform{std::move(device), mon.take()};
}

Server::Server(const fhe::Params& p, Platform platform)
    : params_(p), platform_(std::move(platform)) {
  params_.validate();
}

crypto::Digest Server::register_circuit(const Circuit& c) {
  monitor::EnclaveImage image = image_for(c);
  crypto::Digest m = image.measurement();
  registry_[m.bytes] = Registered{c, std::move(image)};
  return m;
}

void Server::set_server_input(std::vector<fhe::Plaintext> w) {
  std::vector<Bytes> leaves;
  leaves.reserve(w.size());
  for (const fhe::Plaintext& pt : w) leaves.push_back(serialize_plaintext(params_, pt));
  commitment_ = crypto::MerkleTree::build(leaves);
  server_input_ = std::move(w);
}

void Server::update_server_input(std::size_t index, fhe::Plaintext pt) {
  if (!commitment_) throw std::logic_error("no server input installed");
  commitment_->update_leaf(index, serialize_plaintext(params_, pt));
  server_input_.at(index) = std::move(pt);
}

const crypto::Digest& Server::committed_root() const {
  if (!commitment_) throw std::logic_error("no server input installed");
  return commitment_->root();
}

const crypto::MerkleTree& Server::commitment() const {
  if (!commitment_) throw std::logic_error("no server input installed");
  return *commitment_;
}

Outcome<EvalSession> Server::open_session(const crypto::Digest& measurement,
                                          std::optional<crypto::Digest> commitment_override) {
  auto it = registry_.find(measurement.bytes);
  if (it == registry_.end()) return Reason::UnknownCircuit;
  const Registered& reg = it->second;

  // The enclave loads its own copy of the server input: once created, later
  // mutations of the server's staging copy cannot reach it.
  auto snapshot = std::make_shared<const std::vector<fhe::Plaintext>>(server_input_);
  monitor::EnclaveId id = platform_.monitor.create_enclave(
      reg.image, [p = params_, circ = reg.circuit, snapshot](ByteView request) {
        return evaluate_request(p, circ, *snapshot, request);
      });

  if (reg.circuit.uses_server_input() || commitment_override.has_value()) {
    // The transcribed root is recomputed from the loaded data, never taken
    // from the server's claim, so the transcript binds the exact bytes the
    // circuit will read. The override models a transcript that carries some
    // other root, however it got there.
    crypto::Digest root;
    if (commitment_override) {
      root = *commitment_override;
    } else {
      std::vector<Bytes> leaves;
      leaves.reserve(snapshot->size());
      for (const fhe::Plaintext& pt : *snapshot) leaves.push_back(serialize_plaintext(params_, pt));
      root = crypto::MerkleTree::build(leaves).root();
    }
    platform_.monitor.commit_server_input(id, root);
  }
  return EvalSession(*this, id);
}

Outcome<Bytes> EvalSession::answer(ByteView request) {
  return server_->platform_.monitor.run(id_, request);
}

monitor::AttestedTranscript EvalSession::finish(const tpm::Nonce& nonce) {
  return server_->platform_.monitor.attest(id_, nonce);
}

Client::Client(const fhe::Params& p, const TrustAnchors& anchors, Rng rng)
    : params_(p), anchors_(anchors), rng_(std::move(rng)), keys_(fhe::gen(params_, rng_)) {}

tpm::Nonce Client::fresh_nonce() {
  tpm::Nonce n;
  rng_.fill(n);
  return n;
}

Bytes Client::encrypt_request(std::span<const std::uint64_t> values) {
  std::vector<fhe::Ciphertext> cts;
  cts.reserve(values.size());
  for (std::uint64_t v : values)
    cts.push_back(fhe::encrypt(params_, keys_.pk, fhe::encode_scalar(params_, v), rng_));
  return serialize_ct_list(cts);
}

Outcome<std::vector<VerifiedOutput>> Client::verify(const monitor::AttestedTranscript& at,
                                                    const VerifySpec& spec) {
  using monitor::EntryTag;

  // Endorsement chain, then quote integrity against our challenge.
  if (!tpm::verify_endorsement(anchors_.manufacturer_root_pk, at.quote))
    return Reason::UntrustedEndorsement;
  if (!crypto::verify(at.quote.attestation_pk, at.quote.signed_prefix(), at.quote.signature))
    return Reason::BadQuote;
  if (at.quote.nonce != spec.nonce) return Reason::BadQuote;
  if (at.quote.selection != tpm::selection_bitmap({0, 1, 2})) return Reason::BadQuote;

  // The monitor that ran is the monitor we trust.
  const auto& e = at.transcript.entries;
  if (e.size() < 2 || e[0].tag != EntryTag::SmMeasurement ||
      !(e[0].payload == anchors_.sm_binary_measurement) || e[1].tag != EntryTag::SmMeasurement ||
      !(e[1].payload == anchors_.boot_config_measurement))
    return Reason::MonitorMismatch;

  // The transcript we were handed is the transcript the TPM signed: the
  // last folded digest must be this transcript's fold, and the register
  // values reproduced from our anchors plus the digest history must hash to
  // the quoted composite. Folding from the entries (not the carried running
  // digest) is what binds every entry to the signature.
  const crypto::Digest transcript_fold = monitor::Transcript::fold(e);
  if (at.pcr2_history.empty() || !(at.pcr2_history.back() == transcript_fold))
    return Reason::TranscriptMismatch;
  crypto::Digest zero{};
  crypto::Digest pcr0 = monitor::extend_digest(zero, anchors_.sm_binary_measurement);
  crypto::Digest pcr1 = monitor::extend_digest(zero, anchors_.boot_config_measurement);
  crypto::Digest pcr2 = monitor::fold_pcr(at.pcr2_history);
  crypto::Digest composite =
      crypto::sha256_cat({ByteView(pcr0.bytes), ByteView(pcr1.bytes), ByteView(pcr2.bytes)});
  if (!(composite == at.quote.composite)) return Reason::TranscriptMismatch;

  // The program that ran is the program we asked for.
  if (e.size() < 4 || e[2].tag != EntryTag::EnclaveMeasurement || e[3].tag != EntryTag::InitState ||
      !(e[2].payload == spec.enclave_binary_digest) || !(e[3].payload == spec.init_digest))
    return Reason::CircuitMismatch;

  // Structural walk: optional commitment, then alternating input/output
  // (a trailing lone input marks an abort).
  std::size_t i = 4;
  std::optional<crypto::Digest> committed;
  if (i < e.size() && e[i].tag == EntryTag::ServerInputCommitment) {
    committed = e[i].payload;
    ++i;
  }
  std::vector<crypto::Digest> inputs, outputs;
  while (i < e.size()) {
    if (e[i].tag != EntryTag::Input) return Reason::TranscriptMismatch;
    inputs.push_back(e[i].payload);
    ++i;
    if (i < e.size()) {
      if (e[i].tag != EntryTag::Output) return Reason::TranscriptMismatch;
      outputs.push_back(e[i].payload);
      ++i;
    }
  }

  // Exactly our messages, in our order.
  if (inputs.size() != spec.sent.size()) return Reason::InputMismatch;
  for (std::size_t j = 0; j < inputs.size(); ++j)
    if (!(inputs[j] == crypto::sha256(spec.sent[j]))) return Reason::InputMismatch;

  if (outputs.size() != spec.received.size()) return Reason::OutputMismatch;
  for (std::size_t j = 0; j < outputs.size(); ++j)
    if (!(outputs[j] == crypto::sha256(spec.received[j]))) return Reason::OutputMismatch;

  // The data the circuit read is the data that was promised.
  if (committed.has_value() != spec.commitment_root.has_value()) return Reason::CommitmentMismatch;
  if (committed && !(*committed == *spec.commitment_root)) return Reason::CommitmentMismatch;

  std::vector<VerifiedOutput> verified;
  verified.reserve(spec.received.size());
  for (const Bytes& msg : spec.received)
    verified.push_back(VerifiedOutput(params_, msg, transcript_fold));
  return verified;
}

std::vector<fhe::Ciphertext> VerifiedOutput::ciphertexts() const {
  return parse_ct_list(params_, message_);
}

Outcome<std::vector<VerifiedOutput>> Client::verify_wire(ByteView attested_transcript,
                                                         const VerifySpec& spec) {
  monitor::AttestedTranscript at;
  try {
    at = monitor::AttestedTranscript::parse(attested_transcript);
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
  return verify(at, spec);
}

fhe::Plaintext Client::decrypt(const VerifiedOutput& out, std::size_t index) {
  fhe::Ciphertext ct = out.ciphertexts().at(index);
  ++decrypt_count_;
  return fhe::decrypt(params_, keys_.sk, ct);
}

std::uint64_t Client::decrypt_scalar(const VerifiedOutput& out, std::size_t index) {
  return fhe::decode_vector(params_, decrypt(out, index))[0];
}

std::int64_t Client::response_noise_budget(const VerifiedOutput& out, std::size_t index) const {
  return fhe::noise_budget(params_, keys_.sk, out.ciphertexts().at(index));
}

Outcome<monitor::AttestedTranscript> inspect_transcript(ByteView wire,
                                                        const TrustAnchors& anchors) {
  using monitor::EntryTag;

  monitor::AttestedTranscript at;
  try {
    at = monitor::AttestedTranscript::parse(wire);
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }

  if (!tpm::verify_endorsement(anchors.manufacturer_root_pk, at.quote))
    return Reason::UntrustedEndorsement;
  if (!crypto::verify(at.quote.attestation_pk, at.quote.signed_prefix(), at.quote.signature))
    return Reason::BadQuote;
  if (at.quote.selection != tpm::selection_bitmap({0, 1, 2})) return Reason::BadQuote;

  const auto& e = at.transcript.entries;
  if (e.size() < 2 || e[0].tag != EntryTag::SmMeasurement ||
      !(e[0].payload == anchors.sm_binary_measurement) || e[1].tag != EntryTag::SmMeasurement ||
      !(e[1].payload == anchors.boot_config_measurement))
    return Reason::MonitorMismatch;

  const crypto::Digest transcript_fold = monitor::Transcript::fold(e);
  if (at.pcr2_history.empty() || !(at.pcr2_history.back() == transcript_fold))
    return Reason::TranscriptMismatch;
  crypto::Digest zero{};
  crypto::Digest pcr0 = monitor::extend_digest(zero, anchors.sm_binary_measurement);
  crypto::Digest pcr1 = monitor::extend_digest(zero, anchors.boot_config_measurement);
  crypto::Digest pcr2 = monitor::fold_pcr(at.pcr2_history);
  crypto::Digest composite =
      crypto::sha256_cat({ByteView(pcr0.bytes), ByteView(pcr1.bytes), ByteView(pcr2.bytes)});
  if (!(composite == at.quote.composite)) return Reason::TranscriptMismatch;

  // Shape only; which measurement and which digests is session context.
  if (e.size() < 4 || e[2].tag != EntryTag::EnclaveMeasurement || e[3].tag != EntryTag::InitState)
    return Reason::TranscriptMismatch;
  std::size_t i = 4;
  if (i < e.size() && e[i].tag == EntryTag::ServerInputCommitment) ++i;
  while (i < e.size()) {
    if (e[i].tag != EntryTag::Input) return Reason::TranscriptMismatch;
    ++i;
    if (i < e.size()) {
      if (e[i].tag != EntryTag::Output) return Reason::TranscriptMismatch;
      ++i;
    }
  }
  return at;
}

}  // namespace vfhe::scheme
