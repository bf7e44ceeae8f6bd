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

#include <doctest.h>

#include "vfhe/tpm.hpp"

using namespace vfhe;
using namespace vfhe::tpm;

namespace {

struct Fixture {
  Rng rng = Rng::from_seed(2024);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(rng);
  Tpm tpm = Tpm::boot(root.sk, rng);

  Nonce nonce(std::uint8_t fill = 0xab) {
    Nonce n;
    n.fill(fill);
    return n;
  }
  std::vector<crypto::Digest> claimed(const std::vector<std::size_t>& sel) {
    std::vector<crypto::Digest> out;
    for (std::size_t p : sel) out.push_back(tpm.pcr_read(p));
    return out;
  }
};

}  // namespace

TEST_CASE("all 24 registers are zero at boot") {
  Fixture f;
  crypto::Digest zero{};
  for (std::size_t i = 0; i < kNumPcrs; ++i) CHECK(f.tpm.pcr_read(i) == zero);
  CHECK_THROWS_AS(f.tpm.pcr_read(kNumPcrs), std::out_of_range);
}

TEST_CASE("extend is the hash chain H(old || d)") {
  Fixture f;
  crypto::Digest d1 = crypto::sha256(to_bytes("event one"));
  crypto::Digest d2 = crypto::sha256(to_bytes("event two"));

  crypto::Digest zero{};
  crypto::Digest after1 = f.tpm.pcr_extend(7, d1);
  CHECK(after1 == crypto::sha256_cat({ByteView(zero.bytes), ByteView(d1.bytes)}));
  crypto::Digest after2 = f.tpm.pcr_extend(7, d2);
  CHECK(after2 == crypto::sha256_cat({ByteView(after1.bytes), ByteView(d2.bytes)}));
  CHECK(f.tpm.pcr_read(7) == after2);

  // Order sensitivity: extending the same events in swapped order lands elsewhere.
  Fixture g;
  g.tpm.pcr_extend(7, d2);
  CHECK_FALSE(g.tpm.pcr_extend(7, d1) == after2);
}

TEST_CASE("quote serializes to exactly 231 bytes and parses back") {
  Fixture f;
  f.tpm.pcr_extend(0, crypto::sha256(to_bytes("measurement")));
  Quote q = f.tpm.quote({0, 1, 2}, f.nonce());

  Bytes wire = q.serialize();
  CHECK(wire.size() == kQuoteBytes);
  CHECK(q.signed_prefix().size() == kQuoteSignedPrefix);

  Quote back = Quote::parse(wire);
  CHECK(back.serialize() == wire);
  CHECK(back.nonce == q.nonce);
  CHECK(back.composite == q.composite);

  Bytes shorter(wire.begin(), wire.end() - 1);
  CHECK_THROWS_AS(Quote::parse(shorter), MalformedMessage);
  Bytes longer = wire;
  longer.push_back(0);
  CHECK_THROWS_AS(Quote::parse(longer), MalformedMessage);
}

TEST_CASE("selection bitmap marks bit p%8 of byte p/8") {
  auto bm = selection_bitmap({0, 1, 2});
  CHECK(bm[0] == 0x07);
  CHECK(bm[1] == 0x00);
  CHECK(bm[2] == 0x00);
  auto bm2 = selection_bitmap({8, 23});
  CHECK(bm2[0] == 0x00);
  CHECK(bm2[1] == 0x01);
  CHECK(bm2[2] == 0x80);
  CHECK(selection_indices(bm2) == std::vector<std::size_t>{8, 23});
  CHECK_THROWS_AS(selection_bitmap({24}), std::out_of_range);
}

TEST_CASE("quote verifies end to end and pins every field") {
  Fixture f;
  f.tpm.pcr_extend(0, crypto::sha256(to_bytes("sm")));
  f.tpm.pcr_extend(2, crypto::sha256(to_bytes("transcript")));
  std::vector<std::size_t> sel = {0, 1, 2};
  Nonce n = f.nonce();
  Quote q = f.tpm.quote(sel, n);

  CHECK(verify_quote(f.root.pk, q, sel, f.claimed(sel), n) == QuoteCheck::Ok);

  SUBCASE("wrong nonce") {
    CHECK(verify_quote(f.root.pk, q, sel, f.claimed(sel), f.nonce(0xcd)) ==
          QuoteCheck::NonceMismatch);
  }
  SUBCASE("wrong claimed register value") {
    auto claimed = f.claimed(sel);
    claimed[2].bytes[0] ^= 1;
    CHECK(verify_quote(f.root.pk, q, sel, claimed, n) == QuoteCheck::CompositeMismatch);
  }
  SUBCASE("wrong selection expectation") {
    CHECK(verify_quote(f.root.pk, q, {0, 1}, f.claimed({0, 1}), n) ==
          QuoteCheck::SelectionMismatch);
  }
  SUBCASE("flipped signature byte") {
    Quote bad = q;
    bad.signature.bytes[10] ^= 1;
    CHECK(verify_quote(f.root.pk, bad, sel, f.claimed(sel), n) == QuoteCheck::BadSignature);
  }
  SUBCASE("tampered composite breaks the signature") {
    Quote bad = q;
    bad.composite.bytes[0] ^= 1;
    CHECK(verify_quote(f.root.pk, bad, sel, f.claimed(sel), n) == QuoteCheck::BadSignature);
  }
  SUBCASE("re-signed under a rogue key fails endorsement") {
    Rng rogue_rng = Rng::from_seed(666);
    crypto::SigKeyPair rogue = crypto::SigKeyPair::generate(rogue_rng);
    Quote forged = q;
    forged.attestation_pk = rogue.pk;
    forged.signature = crypto::sign(rogue.sk, forged.signed_prefix());
    CHECK(verify_quote(f.root.pk, forged, sel, f.claimed(sel), n) ==
          QuoteCheck::UntrustedEndorsement);
    // Even a rogue self-issued certificate does not help.
    forged.certificate = crypto::sign(rogue.sk, rogue.pk.bytes);
    CHECK(verify_quote(f.root.pk, forged, sel, f.claimed(sel), n) ==
          QuoteCheck::UntrustedEndorsement);
  }
  SUBCASE("verification against a different manufacturer root fails") {
    Rng other_rng = Rng::from_seed(667);
    crypto::SigKeyPair other_root = crypto::SigKeyPair::generate(other_rng);
    CHECK(verify_quote(other_root.pk, q, sel, f.claimed(sel), n) ==
          QuoteCheck::UntrustedEndorsement);
  }
}

TEST_CASE("each boot mints a fresh certified attestation identity") {
  Rng rng = Rng::from_seed(11);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(rng);
  Tpm a = Tpm::boot(root.sk, rng);
  Tpm b = Tpm::boot(root.sk, rng);
  CHECK_FALSE(a.attestation_pk() == b.attestation_pk());
  CHECK(crypto::verify(root.pk, a.attestation_pk().bytes, a.endorsement_certificate()));
  CHECK(crypto::verify(root.pk, b.attestation_pk().bytes, b.endorsement_certificate()));
}

TEST_CASE("quote charges the latency model and counts signatures") {
  Fixture f;
  CHECK(f.tpm.signature_count() == 0);
  CHECK(f.tpm.clock_micros() == 0);

  f.tpm.quote({0, 1, 2}, f.nonce());
  CHECK(f.tpm.signature_count() == 1);
  CHECK(f.tpm.clock_micros() == kDefaultQuoteLatencyMicros);

  f.tpm.set_quote_latency_micros(1000);
  f.tpm.quote({0}, f.nonce());
  CHECK(f.tpm.signature_count() == 2);
  CHECK(f.tpm.clock_micros() == kDefaultQuoteLatencyMicros + 1000);
}

TEST_CASE("only pcr_extend mutates the register bank") {
  Fixture f;
  auto before = f.tpm.pcr_snapshot();
  f.tpm.quote({0, 1, 2}, f.nonce());
  f.tpm.pcr_read(5);
  (void)f.tpm.attestation_pk();
  CHECK(f.tpm.pcr_snapshot() == before);
  f.tpm.pcr_extend(3, crypto::sha256(to_bytes("x")));
  CHECK_FALSE(f.tpm.pcr_snapshot() == before);
}

TEST_CASE("quotes from distinct boots never share signatures") {
  Rng rng = Rng::from_seed(12);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(rng);
  Tpm a = Tpm::boot(root.sk, rng);
  Tpm b = Tpm::boot(root.sk, rng);
  Nonce n{};
  Quote qa = a.quote({0}, n);
  Quote qb = b.quote({0}, n);
  CHECK_FALSE(qa.signature == qb.signature);
}
