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

#include "vfhe/tpm.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace vfhe::tpm {

namespace {
constexpr char kQuoteMagic[4] = {'T', 'P', 'M', 'Q'};
}

Bytes Quote::signed_prefix() const {
  ByteWriter w(kQuoteSignedPrefix);
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kQuoteMagic), 4));
  w.raw(selection);
  w.raw(composite.bytes);
  w.raw(nonce);
  return w.take();
}

Bytes Quote::serialize() const {
  ByteWriter w(kQuoteBytes);
  w.raw(signed_prefix());
  w.raw(signature.bytes);
  w.raw(attestation_pk.bytes);
  w.raw(certificate.bytes);
  return w.take();
}

Quote Quote::parse(ByteView v) {
  if (v.size() != kQuoteBytes) throw MalformedMessage("quote must be 231 bytes");
  ByteReader r(v);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), reinterpret_cast<const std::uint8_t*>(kQuoteMagic)))
    throw MalformedMessage("bad quote magic");
  Quote q;
  q.selection = r.take_array<3>();
  q.composite = crypto::Digest::from(r.take(32));
  q.nonce = r.take_array<32>();
  q.signature.bytes = r.take_array<64>();
  q.attestation_pk.bytes = r.take_array<32>();
  q.certificate.bytes = r.take_array<64>();
  r.done();
  return q;
}

std::array<std::uint8_t, 3> selection_bitmap(const std::vector<std::size_t>& pcrs) {
  std::array<std::uint8_t, 3> bm{};
  for (std::size_t p : pcrs) {
    if (p >= kNumPcrs) throw std::out_of_range("pcr index");
    bm[p / 8] |= static_cast<std::uint8_t>(1u << (p % 8));
  }
  return bm;
}

std::vector<std::size_t> selection_indices(const std::array<std::uint8_t, 3>& bitmap) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < kNumPcrs; ++p)
    if (bitmap[p / 8] & (1u << (p % 8))) out.push_back(p);
  return out;
}

Tpm Tpm::boot(const crypto::SecretKey& manufacturer_root_sk, Rng& rng) {
  Tpm t;
  t.attestation_ = crypto::SigKeyPair::generate(rng);
  t.certificate_ = crypto::sign(manufacturer_root_sk, t.attestation_.pk.bytes);
  return t;
}

const crypto::Digest& Tpm::pcr_read(std::size_t index) const {
  if (index >= kNumPcrs) throw std::out_of_range("pcr index");
  return pcrs_[index];
}

crypto::Digest Tpm::pcr_extend(std::size_t index, const crypto::Digest& d) {
  if (index >= kNumPcrs) throw std::out_of_range("pcr index");
  pcrs_[index] = crypto::sha256_cat({ByteView(pcrs_[index].bytes), ByteView(d.bytes)});
  return pcrs_[index];
}

Quote Tpm::quote(const std::vector<std::size_t>& selection, const Nonce& nonce) {
  Quote q;
  q.selection = selection_bitmap(selection);
  // Composite covers the selected registers in ascending index order,
  // regardless of the order the caller listed them.
  std::vector<std::size_t> ordered = selection_indices(q.selection);
  ByteWriter concat(ordered.size() * 32);
  for (std::size_t p : ordered) concat.raw(pcrs_[p].bytes);
  q.composite = crypto::sha256(concat.view());
  q.nonce = nonce;
  q.signature = crypto::sign(attestation_.sk, q.signed_prefix());
  q.attestation_pk = attestation_.pk;
  q.certificate = certificate_;

  ++signature_count_;
  clock_micros_ += quote_latency_micros_;
  if (realtime_) std::this_thread::sleep_for(std::chrono::microseconds(quote_latency_micros_));
  return q;
}

bool verify_endorsement(const crypto::PublicKey& manufacturer_root_pk, const Quote& q) {
  return crypto::verify(manufacturer_root_pk, q.attestation_pk.bytes, q.certificate);
}

QuoteCheck verify_quote(const crypto::PublicKey& manufacturer_root_pk, const Quote& q,
                        const std::vector<std::size_t>& expected_selection,
                        const std::vector<crypto::Digest>& claimed_values, const Nonce& nonce) {
  if (!verify_endorsement(manufacturer_root_pk, q)) return QuoteCheck::UntrustedEndorsement;
  if (!crypto::verify(q.attestation_pk, q.signed_prefix(), q.signature))
    return QuoteCheck::BadSignature;
  if (q.nonce != nonce) return QuoteCheck::NonceMismatch;
  if (q.selection != selection_bitmap(expected_selection)) return QuoteCheck::SelectionMismatch;

  std::vector<std::size_t> ordered = selection_indices(q.selection);
  if (ordered.size() != claimed_values.size()) return QuoteCheck::CompositeMismatch;
  ByteWriter concat(claimed_values.size() * 32);
  for (const crypto::Digest& d : claimed_values) concat.raw(d.bytes);
  if (!(crypto::sha256(concat.view()) == q.composite)) return QuoteCheck::CompositeMismatch;
  return QuoteCheck::Ok;
}

}  // namespace vfhe::tpm
