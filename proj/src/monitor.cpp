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

#include "vfhe/monitor.hpp"

#include <stdexcept>

namespace vfhe::monitor {

namespace {
bool valid_tag(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(EntryTag::SmMeasurement) &&
         t <= static_cast<std::uint8_t>(EntryTag::ServerInputCommitment);
}
}  // namespace

void Transcript::append(EntryTag tag, const crypto::Digest& payload) {
  entries.push_back({tag, payload});
  std::uint8_t t = static_cast<std::uint8_t>(tag);
  running = crypto::sha256_cat({ByteView(running.bytes), ByteView(&t, 1), ByteView(payload.bytes)});
}

crypto::Digest Transcript::fold(const std::vector<TranscriptEntry>& entries) {
  crypto::Digest d{};
  for (const TranscriptEntry& e : entries) {
    std::uint8_t t = static_cast<std::uint8_t>(e.tag);
    d = crypto::sha256_cat({ByteView(d.bytes), ByteView(&t, 1), ByteView(e.payload.bytes)});
  }
  return d;
}

Bytes Transcript::serialize() const {
  ByteWriter w(4 + entries.size() * 33);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const TranscriptEntry& e : entries) {
    w.u8(static_cast<std::uint8_t>(e.tag));
    w.raw(e.payload.bytes);
  }
  return w.take();
}

Transcript Transcript::parse(ByteView v) {
  ByteReader r(v);
  std::uint32_t count = r.u32();
  Transcript t;
  t.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint8_t tag = r.u8();
    if (!valid_tag(tag)) throw MalformedMessage("unknown transcript entry tag");
    t.entries.push_back({static_cast<EntryTag>(tag), crypto::Digest::from(r.take(32))});
  }
  r.done();
  t.running = fold(t.entries);
  return t;
}

Bytes InitState::canonical() const {
  ByteWriter w(40);
  w.u64(entry_point);
  w.u64(stack_pointer);
  w.u64(page_table_root);
  w.u64(shared_mem_base);
  w.u64(shared_mem_size);
  return w.take();
}

crypto::Digest EnclaveImage::measurement() const {
  return crypto::sha256_cat({ByteView(binary), ByteView(init.canonical())});
}

Bytes AttestedTranscript::serialize() const {
  ByteWriter w;
  w.raw(transcript.serialize());
  w.u16(static_cast<std::uint16_t>(pcr2_history.size()));
  for (const crypto::Digest& d : pcr2_history) w.raw(d.bytes);
  w.raw(quote.serialize());
  return w.take();
}

AttestedTranscript AttestedTranscript::parse(ByteView v) {
  ByteReader r(v);
  std::uint32_t count = r.u32();
  AttestedTranscript at;
  at.transcript.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint8_t tag = r.u8();
    if (!valid_tag(tag)) throw MalformedMessage("unknown transcript entry tag");
    at.transcript.entries.push_back({static_cast<EntryTag>(tag), crypto::Digest::from(r.take(32))});
  }
  at.transcript.running = Transcript::fold(at.transcript.entries);
  std::uint16_t h = r.u16();
  at.pcr2_history.reserve(h);
  for (std::uint16_t i = 0; i < h; ++i) at.pcr2_history.push_back(crypto::Digest::from(r.take(32)));
  at.quote = tpm::Quote::parse(r.take(tpm::kQuoteBytes));
  r.done();
  return at;
}

Outcome<Monitor> Monitor::measured_boot(tpm::Tpm& tpm, ByteView sm_binary, ByteView boot_config) {
  crypto::Digest zero{};
  if (!(tpm.pcr_read(0) == zero) || !(tpm.pcr_read(1) == zero)) return Reason::RebootRequired;

  Monitor m(tpm);
  m.sm_binary_digest_ = crypto::sha256(sm_binary);
  m.boot_config_digest_ = crypto::sha256(boot_config);
  tpm.pcr_extend(0, m.sm_binary_digest_);
  tpm.pcr_extend(1, m.boot_config_digest_);
  return m;
}

Monitor::Enclave& Monitor::require(EnclaveId id) {
  auto it = enclaves_.find(id);
  if (it == enclaves_.end()) throw std::out_of_range("no such enclave");
  return it->second;
}

const Monitor::Enclave& Monitor::require(EnclaveId id) const {
  auto it = enclaves_.find(id);
  if (it == enclaves_.end()) throw std::out_of_range("no such enclave");
  return it->second;
}

EnclaveId Monitor::create_enclave(const EnclaveImage& image, EnclaveComputation fn) {
  Enclave e;
  e.binary_digest = image.binary_digest();
  e.init_digest = image.init_digest();
  e.fn = std::move(fn);
  e.transcript.append(EntryTag::SmMeasurement, sm_binary_digest_);
  e.transcript.append(EntryTag::SmMeasurement, boot_config_digest_);
  e.transcript.append(EntryTag::EnclaveMeasurement, e.binary_digest);
  e.transcript.append(EntryTag::InitState, e.init_digest);
  EnclaveId id = next_id_++;
  enclaves_.emplace(id, std::move(e));
  return id;
}

void Monitor::commit_server_input(EnclaveId id, const crypto::Digest& root) {
  Enclave& e = require(id);
  if (e.state != EnclaveState::Running) throw std::logic_error("enclave is not running");
  for (const TranscriptEntry& entry : e.transcript.entries)
    if (entry.tag == EntryTag::Input)
      throw std::logic_error("commitment must precede the first input");
  e.transcript.append(EntryTag::ServerInputCommitment, root);
}

Outcome<Bytes> Monitor::run(EnclaveId id, ByteView input) {
  Enclave& e = require(id);
  if (e.state != EnclaveState::Running) return Reason::EvalAborted;
  e.transcript.append(EntryTag::Input, crypto::sha256(input));
  Outcome<Bytes> result = e.fn(input);
  if (!result.ok()) {
    e.state = EnclaveState::Aborted;
    return result;
  }
  e.transcript.append(EntryTag::Output, crypto::sha256(result.value()));
  return result;
}

AttestedTranscript Monitor::attest(EnclaveId id, const tpm::Nonce& nonce) {
  Enclave& e = require(id);
  if (e.state == EnclaveState::Closed) throw std::logic_error("enclave already attested");
  tpm_->pcr_extend(2, e.transcript.running);
  pcr2_history_.push_back(e.transcript.running);
  AttestedTranscript at;
  at.transcript = e.transcript;
  at.pcr2_history = pcr2_history_;
  at.quote = tpm_->quote({0, 1, 2}, nonce);
  e.state = EnclaveState::Closed;
  e.fn = nullptr;  // the computation ends with its enclave
  return at;
}

EnclaveState Monitor::state(EnclaveId id) const { return require(id).state; }

const Transcript& Monitor::transcript(EnclaveId id) const { return require(id).transcript; }

Bytes Monitor::state_image() const {
  ByteWriter w;
  w.raw(sm_binary_digest_.bytes);
  w.raw(boot_config_digest_.bytes);
  for (const auto& [id, e] : enclaves_) {
    w.u32(id);
    w.raw(e.binary_digest.bytes);
    w.raw(e.init_digest.bytes);
    w.u8(static_cast<std::uint8_t>(e.state));
    w.raw(e.transcript.serialize());
  }
  for (const crypto::Digest& d : pcr2_history_) w.raw(d.bytes);
  return w.take();
}

crypto::Digest extend_digest(const crypto::Digest& prev, const crypto::Digest& d) {
  return crypto::sha256_cat({ByteView(prev.bytes), ByteView(d.bytes)});
}

crypto::Digest fold_pcr(const std::vector<crypto::Digest>& history) {
  crypto::Digest pcr{};
  for (const crypto::Digest& d : history) pcr = extend_digest(pcr, d);
  return pcr;
}

ByteView default_sm_binary() {
  static const Bytes image = to_bytes("monitor-core-image-v1: measured boot, enclave transcripts, quote glue");
  return image;
}

}  // namespace vfhe::monitor
