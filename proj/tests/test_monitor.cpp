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

#include <algorithm>

#include "vfhe/monitor.hpp"

using namespace vfhe;
using namespace vfhe::monitor;

namespace {

struct Fixture {
  Rng rng = Rng::from_seed(404);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(rng);
  tpm::Tpm tpm = tpm::Tpm::boot(root.sk, rng);
  Monitor mon = Monitor::measured_boot(tpm, default_sm_binary()).take();

  static Outcome<Bytes> echo(ByteView in) { return Bytes(in.begin(), in.end()); }

  EnclaveImage image(std::string_view name = "enclave-binary") {
    return EnclaveImage{to_bytes(name), InitState{}};
  }
  tpm::Nonce nonce(std::uint8_t fill = 0x42) {
    tpm::Nonce n;
    n.fill(fill);
    return n;
  }
};

bool contains(const Bytes& haystack, ByteView needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

}  // namespace

TEST_CASE("measured boot extends PCR0/PCR1 with the image and config digests") {
  Fixture f;
  crypto::Digest zero{};
  crypto::Digest sm = crypto::sha256(default_sm_binary());
  crypto::Digest cfg = crypto::sha256({});
  CHECK(f.tpm.pcr_read(0) == extend_digest(zero, sm));
  CHECK(f.tpm.pcr_read(1) == extend_digest(zero, cfg));
  CHECK(f.tpm.pcr_read(2) == zero);
  CHECK(f.mon.sm_binary_measurement() == sm);
  CHECK(f.mon.boot_config_measurement() == cfg);
}

TEST_CASE("measured boot refuses a platform that is already booted") {
  Fixture f;
  Outcome<Monitor> second = Monitor::measured_boot(f.tpm, default_sm_binary());
  CHECK_FALSE(second.ok());
  CHECK(second.reason() == Reason::RebootRequired);
}

TEST_CASE("different monitor binaries land on different PCR0 values") {
  Rng rng = Rng::from_seed(7);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(rng);
  tpm::Tpm t1 = tpm::Tpm::boot(root.sk, rng);
  tpm::Tpm t2 = tpm::Tpm::boot(root.sk, rng);
  Monitor::measured_boot(t1, to_bytes("monitor A")).value();
  Monitor::measured_boot(t2, to_bytes("monitor B")).value();
  CHECK_FALSE(t1.pcr_read(0) == t2.pcr_read(0));
}

TEST_CASE("enclave creation transcribes exactly four measurement entries") {
  Fixture f;
  EnclaveImage img = f.image();
  EnclaveId id = f.mon.create_enclave(img, Fixture::echo);

  const Transcript& t = f.mon.transcript(id);
  REQUIRE(t.entries.size() == 4);
  CHECK(t.entries[0].tag == EntryTag::SmMeasurement);
  CHECK(t.entries[0].payload == f.mon.sm_binary_measurement());
  CHECK(t.entries[1].tag == EntryTag::SmMeasurement);
  CHECK(t.entries[1].payload == f.mon.boot_config_measurement());
  CHECK(t.entries[2].tag == EntryTag::EnclaveMeasurement);
  CHECK(t.entries[2].payload == img.binary_digest());
  CHECK(t.entries[3].tag == EntryTag::InitState);
  CHECK(t.entries[3].payload == img.init_digest());
  CHECK(t.running == Transcript::fold(t.entries));
}

TEST_CASE("the running digest is the documented fold") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("ping"));

  crypto::Digest expect{};
  for (const TranscriptEntry& e : f.mon.transcript(id).entries) {
    std::uint8_t tag = static_cast<std::uint8_t>(e.tag);
    expect = crypto::sha256_cat({ByteView(expect.bytes), ByteView(&tag, 1), ByteView(e.payload.bytes)});
  }
  CHECK(f.mon.transcript(id).running == expect);
}

TEST_CASE("init state is part of the measured identity") {
  EnclaveImage a{to_bytes("same-binary"), InitState{}};
  EnclaveImage b = a;
  b.init.stack_pointer += 0x1000;
  CHECK(a.binary_digest() == b.binary_digest());
  CHECK_FALSE(a.init_digest() == b.init_digest());
  CHECK_FALSE(a.measurement() == b.measurement());
  CHECK(a.init.canonical().size() == 40);
}

TEST_CASE("run transcribes inputs and outputs around the computation") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  Bytes in = to_bytes("query");
  Outcome<Bytes> out = f.mon.run(id, in);
  REQUIRE(out.ok());
  CHECK(out.value() == in);

  const Transcript& t = f.mon.transcript(id);
  REQUIRE(t.entries.size() == 6);
  CHECK(t.entries[4].tag == EntryTag::Input);
  CHECK(t.entries[4].payload == crypto::sha256(in));
  CHECK(t.entries[5].tag == EntryTag::Output);
  CHECK(t.entries[5].payload == crypto::sha256(in));
}

TEST_CASE("an aborting computation leaves the transcript at its input entry") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(
      f.image(), [](ByteView) -> Outcome<Bytes> { return Reason::WellFormednessViolation; });
  Outcome<Bytes> out = f.mon.run(id, to_bytes("poison"));
  CHECK_FALSE(out.ok());
  CHECK(out.reason() == Reason::WellFormednessViolation);
  CHECK(f.mon.state(id) == EnclaveState::Aborted);

  const Transcript& t = f.mon.transcript(id);
  CHECK(t.entries.back().tag == EntryTag::Input);

  // Dead enclaves stay dead.
  CHECK(f.mon.run(id, to_bytes("again")).reason() == Reason::EvalAborted);
}

TEST_CASE("server-input commitments are transcribed before any input") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  crypto::Digest root = crypto::sha256(to_bytes("committed data"));
  f.mon.commit_server_input(id, root);
  CHECK(f.mon.transcript(id).entries[4].tag == EntryTag::ServerInputCommitment);
  CHECK(f.mon.transcript(id).entries[4].payload == root);

  f.mon.run(id, to_bytes("x"));
  CHECK_THROWS_AS(f.mon.commit_server_input(id, root), std::logic_error);
}

TEST_CASE("attest folds the transcript into PCR2 and quotes PCR0..2") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("input"));
  tpm::Nonce n = f.nonce();
  AttestedTranscript at = f.mon.attest(id, n);

  REQUIRE(at.pcr2_history.size() == 1);
  CHECK(at.pcr2_history[0] == at.transcript.running);
  CHECK(f.tpm.pcr_read(2) == fold_pcr(at.pcr2_history));

  std::vector<crypto::Digest> claimed = {f.tpm.pcr_read(0), f.tpm.pcr_read(1), f.tpm.pcr_read(2)};
  CHECK(tpm::verify_quote(f.root.pk, at.quote, {0, 1, 2}, claimed, n) == tpm::QuoteCheck::Ok);
  CHECK(f.mon.state(id) == EnclaveState::Closed);
  CHECK(f.tpm.signature_count() == 1);
}

TEST_CASE("PCR2 chains across enclaves and the history reproduces it") {
  Fixture f;
  EnclaveId a = f.mon.create_enclave(f.image("first"), Fixture::echo);
  f.mon.run(a, to_bytes("1"));
  AttestedTranscript at1 = f.mon.attest(a, f.nonce(1));

  EnclaveId b = f.mon.create_enclave(f.image("second"), Fixture::echo);
  f.mon.run(b, to_bytes("2"));
  AttestedTranscript at2 = f.mon.attest(b, f.nonce(2));

  REQUIRE(at2.pcr2_history.size() == 2);
  CHECK(at2.pcr2_history[0] == at1.transcript.running);
  CHECK(at2.pcr2_history[1] == at2.transcript.running);
  crypto::Digest zero{};
  CHECK(f.tpm.pcr_read(2) ==
        extend_digest(extend_digest(zero, at2.pcr2_history[0]), at2.pcr2_history[1]));
  CHECK(f.tpm.signature_count() == 2);
}

TEST_CASE("one quote per enclave lifetime") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.attest(id, f.nonce());
  CHECK_THROWS_AS(f.mon.attest(id, f.nonce()), std::logic_error);
  CHECK(f.mon.run(id, to_bytes("late")).reason() == Reason::EvalAborted);
}

TEST_CASE("measurement entries always precede input/output entries") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.commit_server_input(id, crypto::sha256(to_bytes("db")));
  for (int i = 0; i < 5; ++i) f.mon.run(id, to_bytes("q" + std::to_string(i)));

  bool seen_io = false;
  for (const TranscriptEntry& e : f.mon.transcript(id).entries) {
    if (e.tag == EntryTag::Input || e.tag == EntryTag::Output) seen_io = true;
    if (e.tag == EntryTag::SmMeasurement || e.tag == EntryTag::EnclaveMeasurement ||
        e.tag == EntryTag::InitState)
      CHECK_FALSE(seen_io);
  }
}

TEST_CASE("transcript serialization round-trips strictly") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("q"));
  const Transcript& t = f.mon.transcript(id);

  Bytes wire = t.serialize();
  CHECK(wire.size() == 4 + t.entries.size() * 33);
  Transcript back = Transcript::parse(wire);
  CHECK(back.entries == t.entries);
  CHECK(back.running == t.running);

  Bytes trailing = wire;
  trailing.push_back(0);
  CHECK_THROWS_AS(Transcript::parse(trailing), MalformedMessage);
  Bytes bad_tag = wire;
  bad_tag[4] = 0x7f;
  CHECK_THROWS_AS(Transcript::parse(bad_tag), MalformedMessage);
}

TEST_CASE("attested transcripts serialize and parse as one strict unit") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("payload"));
  AttestedTranscript at = f.mon.attest(id, f.nonce());

  Bytes wire = at.serialize();
  AttestedTranscript back = AttestedTranscript::parse(wire);
  CHECK(back.serialize() == wire);
  CHECK(back.transcript.entries == at.transcript.entries);
  CHECK(back.pcr2_history == at.pcr2_history);
  CHECK(back.quote.serialize() == at.quote.serialize());

  Bytes trailing = wire;
  trailing.push_back(0);
  CHECK_THROWS_AS(AttestedTranscript::parse(trailing), MalformedMessage);
  Bytes truncated(wire.begin(), wire.end() - 1);
  CHECK_THROWS_AS(AttestedTranscript::parse(truncated), MalformedMessage);
}

TEST_CASE("attestation under the same seed is byte-for-byte reproducible") {
  auto run = [] {
    Fixture f;
    EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
    f.mon.run(id, to_bytes("fixed input"));
    return f.mon.attest(id, f.nonce()).serialize();
  };
  CHECK(run() == run());
}

TEST_CASE("monitor state holds no signing secrets") {
  // Reconstruct the exact attestation secret the TPM drew by replaying the
  // seed, then scan every byte the monitor retains for it.
  Rng replay = Rng::from_seed(404);
  crypto::SigKeyPair root = crypto::SigKeyPair::generate(replay);
  crypto::SigKeyPair attestation = crypto::SigKeyPair::generate(replay);

  Fixture f;  // same seed: its TPM holds exactly `attestation`
  CHECK(f.tpm.attestation_pk() == attestation.pk);

  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("sensitive"));
  f.mon.attest(id, f.nonce());

  Bytes state = f.mon.state_image();
  CHECK_FALSE(contains(state, ByteView(attestation.sk.bytes)));
  CHECK_FALSE(contains(state, ByteView(root.sk.bytes)));
  // Not even the first quarter of either secret leaks.
  CHECK_FALSE(contains(state, ByteView(attestation.sk.bytes).subspan(0, 16)));
  CHECK_FALSE(contains(state, ByteView(root.sk.bytes).subspan(0, 16)));
}

TEST_CASE("quote does not perturb registers; only extend does") {
  Fixture f;
  EnclaveId id = f.mon.create_enclave(f.image(), Fixture::echo);
  f.mon.run(id, to_bytes("q"));
  auto before = f.tpm.pcr_snapshot();
  f.tpm.quote({0, 1, 2}, f.nonce());
  CHECK(f.tpm.pcr_snapshot() == before);
  f.mon.attest(id, f.nonce());  // attest extends PCR2 via pcr_extend
  CHECK_FALSE(f.tpm.pcr_snapshot() == before);
}
