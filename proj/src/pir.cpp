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

#include "vfhe/pir.hpp"

#include <bit>
#include <stdexcept>

namespace vfhe::pir {

namespace {

constexpr std::size_t kChecksumBytes = 4;

void check_entry_size(const fhe::Params& p, std::size_t entry_size) {
  if (entry_size == 0 || entry_size % 2 != 0) throw std::invalid_argument("entry size must be a positive even byte count");
  if (packed_coeff_count(entry_size) > p.n) throw std::invalid_argument("entry does not fit one plaintext");
}

}  // namespace

std::size_t packed_coeff_count(std::size_t entry_size) {
  return (entry_size + kChecksumBytes) / 2;
}

fhe::Plaintext pack_entry(const fhe::Params& p, ByteView entry, std::size_t entry_size) {
  check_entry_size(p, entry_size);
  if (entry.size() > entry_size) throw std::invalid_argument("entry larger than entry size");

  Bytes padded(entry.begin(), entry.end());
  padded.resize(entry_size, 0);
  crypto::Digest h = crypto::sha256(padded);
  padded.insert(padded.end(), h.bytes.begin(), h.bytes.begin() + kChecksumBytes);

  fhe::Plaintext pt;
  pt.c.assign(p.n, 0);
  for (std::size_t i = 0; i < padded.size(); i += 2)
    pt.c[i / 2] = static_cast<std::uint64_t>(padded[i]) << 8 | padded[i + 1];
  return pt;
}

Outcome<Bytes> unpack_entry(const fhe::Params& p, const fhe::Plaintext& pt,
                            std::size_t entry_size) {
  check_entry_size(p, entry_size);
  if (pt.c.size() != p.n) return Reason::DecryptionFailure;
  std::size_t m = packed_coeff_count(entry_size);

  Bytes padded(2 * m);
  for (std::size_t i = 0; i < p.n; ++i) {
    if (i >= m) {
      if (pt.c[i] != 0) return Reason::DecryptionFailure;
      continue;
    }
    if (pt.c[i] > 0xffff) return Reason::DecryptionFailure;
    padded[2 * i] = static_cast<std::uint8_t>(pt.c[i] >> 8);
    padded[2 * i + 1] = static_cast<std::uint8_t>(pt.c[i] & 0xff);
  }

  Bytes entry(padded.begin(), padded.begin() + entry_size);
  crypto::Digest h = crypto::sha256(entry);
  for (std::size_t k = 0; k < kChecksumBytes; ++k)
    if (padded[entry_size + k] != h.bytes[k]) return Reason::DecryptionFailure;
  return entry;
}

PirServer::PirServer(const fhe::Params& p, scheme::Platform platform, std::size_t entry_size)
    : entry_size_(entry_size), core_(p, std::move(platform)) {
  check_entry_size(p, entry_size);
}

Outcome<crypto::Digest> PirServer::init(const std::vector<Bytes>& entries) {
  std::vector<fhe::Plaintext> packed;
  packed.reserve(entries.size());
  for (const Bytes& e : entries) packed.push_back(pack_entry(core_.params(), e, entry_size_));
  return init_packed(std::move(packed));
}

Outcome<crypto::Digest> PirServer::init_packed(std::vector<fhe::Plaintext> packed) {
  if (packed.empty() || !std::has_single_bit(packed.size()))
    throw std::invalid_argument("entry count must be a power of two");

  // Selective-failure defense: a database that could make some honest query
  // undecryptable is rejected wholesale, before anything is committed or
  // served, so no per-query failure signal exists to observe.
  for (const fhe::Plaintext& pt : packed) {
    if (!fhe::in_plaintext_space(core_.params(), pt)) {
      serving_ = false;
      return Reason::WellFormednessViolation;
    }
  }

  core_.set_server_input(std::move(packed));
  measurement_ = core_.register_circuit(
      scheme::Circuit::server_inner_product(core_.server_input().size()));
  serving_ = true;
  return core_.committed_root();
}

void PirServer::update_entry(std::size_t index, ByteView entry) {
  if (!serving_) throw std::logic_error("server is not serving");
  core_.update_server_input(index, pack_entry(core_.params(), entry, entry_size_));
}

Outcome<scheme::EvalSession> PirServer::open_batch() {
  if (!serving_) return Reason::Refused;
  return core_.open_session(measurement_);
}

PirClient::PirClient(const fhe::Params& p, const scheme::TrustAnchors& anchors, Rng rng,
                     std::size_t entry_size)
    : entry_size_(entry_size), core_(p, anchors, std::move(rng)) {
  check_entry_size(p, entry_size);
}

void PirClient::begin_batch(std::size_t n, const crypto::Digest& reference_root) {
  if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("entry count must be a power of two");
  n_ = n;
  monitor::EnclaveImage image = scheme::image_for(scheme::Circuit::server_inner_product(n));
  spec_ = scheme::VerifySpec{};
  spec_.enclave_binary_digest = image.binary_digest();
  spec_.init_digest = image.init_digest();
  spec_.commitment_root = reference_root;
  spec_.nonce = core_.fresh_nonce();
  batch_open_ = true;
}

Bytes PirClient::build_query(std::size_t index) {
  if (!batch_open_) throw std::logic_error("no open batch");
  if (index >= n_) throw std::out_of_range("index past database end");
  std::vector<std::uint64_t> onehot(n_, 0);
  onehot[index] = 1;
  Bytes query = core_.encrypt_request(onehot);
  spec_.sent.push_back(query);
  return query;
}

void PirClient::record_response(Bytes response) {
  if (!batch_open_) throw std::logic_error("no open batch");
  spec_.received.push_back(std::move(response));
}

const tpm::Nonce& PirClient::nonce() const {
  if (!batch_open_) throw std::logic_error("no open batch");
  return spec_.nonce;
}

Outcome<std::vector<Bytes>> PirClient::finish_batch(const monitor::AttestedTranscript& at) {
  if (!batch_open_) throw std::logic_error("no open batch");
  batch_open_ = false;
  auto outs = core_.verify(at, spec_);
  if (!outs.ok()) return outs.reason();
  return unpack_all(outs.take());
}

Outcome<std::vector<Bytes>> PirClient::finish_batch_wire(ByteView attested_transcript) {
  if (!batch_open_) throw std::logic_error("no open batch");
  batch_open_ = false;
  auto outs = core_.verify_wire(attested_transcript, spec_);
  if (!outs.ok()) return outs.reason();
  return unpack_all(outs.take());
}

Outcome<std::vector<Bytes>> PirClient::unpack_all(std::vector<scheme::VerifiedOutput> outs) {
  std::vector<Bytes> entries;
  entries.reserve(outs.size());
  response_budgets_.clear();
  for (scheme::VerifiedOutput& out : outs) {
    if (out.ciphertexts().size() != 1) return Reason::MalformedMessage;
    response_budgets_.push_back(core_.response_noise_budget(out, 0));
    Outcome<Bytes> entry = unpack_entry(core_.params(), core_.decrypt(out, 0), entry_size_);
    if (!entry.ok()) {
      ++decryption_failures_;
      return entry.reason();
    }
    entries.push_back(entry.take());
  }
  return entries;
}

}  // namespace vfhe::pir
