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

// Release gate: ten end-to-end criteria covering completeness, soundness
// against the full attack catalog, application correctness, the selective
// failure defense, amortized attestation accounting, transcript
// compactness, determinism, arithmetic fidelity, and quote integrity.
// One PASS/FAIL line per criterion; exit 0 only if all ten pass.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "vfhe/harness.hpp"
#include "vfhe/pir.hpp"

namespace {

using namespace vfhe;
using harness::App;
using harness::AttackBehavior;
using harness::SessionConfig;
using harness::SessionResult;
using Clock = std::chrono::steady_clock;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool pass;
  std::string detail;
};

// Shared between the soundness criterion and the selective-failure one:
// decryption-failure counts observed anywhere in the attack suite.
struct SuiteStats {
  bool ran = false;
  std::size_t combos = 0;
  std::uint64_t decryption_failures = 0;
} g_suite;

// ---------------------------------------------------------------------------
// 1. Completeness: randomized honest sessions always verify.

scheme::Circuit random_circuit(Rng& rng, std::size_t server_count, std::uint64_t t) {
  using Op = scheme::Circuit::OpCode;
  scheme::Circuit c;
  std::size_t ops = 1 + rng.uniform_below(8);
  for (std::size_t k = 0; k < ops; ++k) {
    std::uint64_t input = rng.uniform_below(4) << 32;
    switch (rng.uniform_below(4)) {
      case 0: c.ops.push_back({Op::MacInputConst, input | rng.uniform_below(t)}); break;
      case 1: c.ops.push_back({Op::AddConst, rng.uniform_below(t)}); break;
      case 2: c.ops.push_back({Op::MacInputServer, input | rng.uniform_below(server_count)}); break;
      case 3: c.ops.push_back({Op::AddServer, rng.uniform_below(server_count)}); break;
    }
  }
  return c;
}

std::uint64_t circuit_oracle(const scheme::Circuit& c, std::span<const std::uint64_t> inputs,
                             std::span<const std::uint64_t> server_vals, std::uint64_t t) {
  using Op = scheme::Circuit::OpCode;
  unsigned __int128 acc = 0;
  for (const auto& op : c.ops) {
    std::uint64_t hi = op.operand >> 32, lo = op.operand & 0xffffffffu;
    switch (op.code) {
      case Op::MacInputConst: acc += static_cast<unsigned __int128>(inputs[hi]) * lo; break;
      case Op::AddConst: acc += op.operand; break;
      case Op::MacInputServer: acc += static_cast<unsigned __int128>(inputs[hi]) * server_vals[lo]; break;
      case Op::AddServer: acc += server_vals[lo]; break;
    }
  }
  return static_cast<std::uint64_t>(acc % t);
}

Verdict criterion1() {
  auto t0 = Clock::now();
  Rng master = Rng::from_seed(20260825);
  crypto::SigKeyPair keys = crypto::SigKeyPair::generate(master);
  scheme::TrustAnchors anchors = scheme::default_anchors(keys.pk);
  const fhe::Params p = fhe::Params::desk();
  const std::size_t kSessions = 1000;

  for (std::size_t i = 0; i < kSessions; ++i) {
    Rng rng = master.fork("session" + std::to_string(i));
    const std::size_t server_count = 1 + rng.uniform_below(4);
    scheme::Circuit c = random_circuit(rng, server_count, p.t);
    std::vector<std::uint64_t> server_vals(server_count);
    for (auto& v : server_vals) v = rng.uniform_below(p.t);

    Rng boot_rng = rng.fork("boot");
    scheme::Server server(p, scheme::Platform::boot(keys.sk, boot_rng));
    crypto::Digest measurement = server.register_circuit(c);
    if (c.uses_server_input()) {
      std::vector<fhe::Plaintext> w;
      for (std::uint64_t v : server_vals) w.push_back(fhe::encode_scalar(p, v));
      server.set_server_input(std::move(w));
    }

    scheme::Client client(p, anchors, rng.fork("client"));
    std::vector<std::uint64_t> inputs(c.input_arity());
    for (auto& v : inputs) v = rng.uniform_below(p.t);
    Bytes req = client.encrypt_request(inputs);

    auto session = server.open_session(measurement);
    if (!session.ok()) return {false, fmt("session %zu refused: %s", i, to_string(session.reason()))};
    auto resp = session.value().answer(req);
    if (!resp.ok()) return {false, fmt("session %zu eval refused: %s", i, to_string(resp.reason()))};

    scheme::VerifySpec spec;
    monitor::EnclaveImage img = scheme::image_for(c);
    spec.enclave_binary_digest = img.binary_digest();
    spec.init_digest = img.init_digest();
    if (c.uses_server_input()) spec.commitment_root = server.committed_root();
    spec.sent = {req};
    spec.received = {resp.value()};
    spec.nonce = client.fresh_nonce();
    monitor::AttestedTranscript at = session.value().finish(spec.nonce);

    auto outs = client.verify(at, spec);
    if (!outs.ok())
      return {false, fmt("session %zu rejected honestly computed result: %s", i,
                         to_string(outs.reason()))};
    std::uint64_t got = client.decrypt_scalar(outs.value()[0], 0);
    std::uint64_t want = circuit_oracle(c, inputs, server_vals, p.t);
    if (got != want) return {false, fmt("session %zu decrypted %" PRIu64 ", oracle says %" PRIu64, i, got, want)};
  }

  double el = secs_since(t0);
  if (el >= 60.0) return {false, fmt("1000/1000 accepted but took %.1fs, budget 60s", el)};
  return {true, fmt("1000/1000 randomized honest sessions accepted in %.1fs (budget 60s)", el)};
}

// ---------------------------------------------------------------------------
// 2. Soundness: every attack behavior, against every application, is
// rejected with its documented reason and zero decryptions.

Verdict criterion2() {
  std::uint64_t seed = 20000;
  std::size_t combos = 0;
  for (App app : {App::Vfhe, App::Pir, App::Psi}) {
    for (AttackBehavior b : harness::all_attacks()) {
      SessionConfig cfg;
      cfg.app = app;
      cfg.attack = b;
      cfg.seed = seed++;
      cfg.batch = app == App::Psi ? 4 : 2;
      SessionResult r = harness::run_session(cfg);
      g_suite.decryption_failures += r.decryption_failures;
      if (r.accepted)
        return {false, fmt("%s under %s was accepted", harness::to_string(app), harness::to_string(b))};
      if (r.reason != harness::expected_reason(b))
        return {false, fmt("%s under %s rejected with %s, documented reason is %s",
                           harness::to_string(app), harness::to_string(b), to_string(r.reason),
                           to_string(harness::expected_reason(b)))};
      if (r.decrypted != 0)
        return {false, fmt("%s under %s: client decrypted %" PRIu64 " ciphertexts",
                           harness::to_string(app), harness::to_string(b), r.decrypted)};
      ++combos;
    }
  }
  g_suite.ran = true;
  g_suite.combos = combos;
  return {true, fmt("%zu attack/application combinations: 0 acceptances, 0 decryptions, "
                    "documented reasons all matched", combos)};
}

// ---------------------------------------------------------------------------
// 3. PIR correctness against direct lookup.

Verdict criterion3() {
  auto t0 = Clock::now();

  SessionConfig cfg;
  cfg.app = App::Pir;
  cfg.db_entries = 1024;
  cfg.entry_size = 128;
  cfg.batch = 100;
  cfg.seed = 333;
  SessionResult r = harness::run_session(cfg);
  if (!r.accepted) return {false, fmt("N=1024 session rejected: %s", to_string(r.reason))};
  if (!r.outputs_match) return {false, "N=1024: some retrieved entry differs from direct lookup"};

  Rng rng = Rng::from_seed(640001);
  crypto::SigKeyPair keys = crypto::SigKeyPair::generate(rng);
  scheme::TrustAnchors anchors = scheme::default_anchors(keys.pk);
  std::vector<Bytes> db(64, Bytes(128));
  for (Bytes& e : db) rng.fill(e);

  SessionConfig ecfg;
  ecfg.seed = 640002;
  ecfg.entry_size = 128;
  harness::ServerEndpoint ep = harness::ServerEndpoint::pir(ecfg, keys.sk, db);
  if (!ep.serving()) return {false, "N=64 server refused an honest database"};
  wire::LocalChannel ch(ep.handler());
  std::vector<std::size_t> indices(64);
  for (std::size_t i = 0; i < 64; ++i) indices[i] = i;
  auto got = harness::pir_query(ch, fhe::Params::desk(), anchors, rng.fork("client"), 64, 128,
                                ep.root(), indices);
  if (!got.ok()) return {false, fmt("N=64 exhaustive batch rejected: %s", to_string(got.reason()))};
  for (std::size_t i = 0; i < 64; ++i)
    if (got.value()[i] != db[i]) return {false, fmt("N=64 entry %zu differs from direct lookup", i)};

  double el = secs_since(t0);
  if (el >= 120.0) return {false, fmt("lookups all correct but took %.1fs, budget 120s", el)};
  return {true, fmt("100 random indices at N=1024 and all 64 at N=64 equal direct lookup "
                    "in %.1fs (budget 120s)", el)};
}

// ---------------------------------------------------------------------------
// 4. Selective-failure defense: a malformed entry aborts the server before
// any answer, and no client anywhere in the suite saw a decryption failure.

Verdict criterion4() {
  SessionConfig cfg;
  cfg.app = App::Pir;
  cfg.attack = AttackBehavior::MalformedDbEntry;
  cfg.seed = 444;
  SessionResult r = harness::run_session(cfg);
  if (r.accepted) return {false, "session over a malformed database was accepted"};
  if (r.reason != Reason::WellFormednessViolation)
    return {false, fmt("expected WellFormednessViolation at init, got %s", to_string(r.reason))};
  if (!r.transcript_wire.empty()) return {false, "server answered queries before aborting"};
  if (r.decryption_failures != 0)
    return {false, fmt("client observed %" PRIu64 " decryption failures", r.decryption_failures)};
  if (!g_suite.ran) return {false, "soundness suite did not run first"};
  if (g_suite.decryption_failures != 0)
    return {false, fmt("%" PRIu64 " decryption failures observed across the attack suite",
                       g_suite.decryption_failures)};
  return {true, fmt("server aborted at init, zero queries answered; decryption-failure count "
                    "across %zu attack sessions: 0", g_suite.combos)};
}

// ---------------------------------------------------------------------------
// 5. PSI correctness and false-positive rate at |S|=4096, |C|=64.

Verdict criterion5() {
  auto t0 = Clock::now();
  Rng master = Rng::from_seed(5550123);
  crypto::SigKeyPair keys = crypto::SigKeyPair::generate(master);
  scheme::TrustAnchors anchors = scheme::default_anchors(keys.pk);
  const fhe::Params p = fhe::Params::desk();

  std::size_t false_pos = 0, false_neg = 0, members = 0, non_members = 0;
  std::size_t degree = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng = master.fork("instance" + std::to_string(inst));
    std::vector<Bytes> server_items(4096, Bytes(16));
    for (Bytes& s : server_items) rng.fill(s);
    std::vector<Bytes> client_items(64);
    for (std::size_t i = 0; i < client_items.size(); ++i) {
      if (i < 8) {
        client_items[i] = server_items[(i * 37 + 11) % server_items.size()];
      } else {
        client_items[i] = Bytes(16);
        rng.fill(client_items[i]);
      }
    }

    SessionConfig cfg;
    cfg.seed = 910000 + static_cast<std::uint64_t>(inst);
    harness::ServerEndpoint ep = harness::ServerEndpoint::psi(cfg, keys.sk, server_items);
    if (!ep.serving())
      return {false, fmt("instance %d: server refused an honest set: %s", inst,
                         to_string(ep.init_reason()))};
    degree = ep.binning().degree;

    wire::LocalChannel ch(ep.handler());
    auto got = harness::psi_intersect(ch, p, anchors, rng.fork("client"), client_items,
                                      psi::PsiServerInfo{ep.root(), ep.binning()});
    if (!got.ok()) return {false, fmt("instance %d rejected: %s", inst, to_string(got.reason()))};

    std::set<Bytes> server_set(server_items.begin(), server_items.end());
    std::set<Bytes> reported(got.value().begin(), got.value().end());
    for (const Bytes& item : client_items) {
      if (server_set.count(item)) {
        ++members;
        if (!reported.count(item)) ++false_neg;
      } else {
        ++non_members;
        if (reported.count(item)) ++false_pos;
      }
    }
  }

  double rate_bound = 10.0 * static_cast<double>(degree) / static_cast<double>(p.t);
  auto allowed = static_cast<std::size_t>(rate_bound * static_cast<double>(non_members));
  if (false_neg != 0) return {false, fmt("%zu of %zu true members were missed", false_neg, members)};
  if (false_pos > allowed)
    return {false, fmt("%zu false positives among %zu non-members exceeds allowance %zu",
                       false_pos, non_members, allowed)};
  return {true, fmt("20 instances in %.1fs: %zu/%zu members found, %zu/%zu non-members false-"
                    "positive (rate bound 10*%zu/%" PRIu64 " allows %zu)",
                    secs_since(t0), members - false_neg, members, false_pos, non_members, degree,
                    p.t, allowed)};
}

// ---------------------------------------------------------------------------
// 6. Batching amortization: attestation cost per query is latency / k within
// 1%, with exactly one signature per batch.

Verdict criterion6() {
  const std::size_t batches[] = {1, 2, 5, 10, 50};
  auto reports = harness::run_bench(App::Vfhe, batches);
  std::string curve;
  for (const harness::BenchReport& r : reports) {
    double expect = 195.752 / static_cast<double>(r.batch);
    if (r.signatures != 1)
      return {false, fmt("k=%zu spent %" PRIu64 " TPM signatures, expected 1", r.batch, r.signatures)};
    if (std::abs(r.attest_per_query_ms - expect) > 0.01 * expect)
      return {false, fmt("k=%zu attestation %.3f ms/query, expected %.3f within 1%%", r.batch,
                         r.attest_per_query_ms, expect)};
    curve += fmt("%s%.3f", curve.empty() ? "" : ", ", r.attest_per_query_ms);
  }
  return {true, fmt("per-query attestation [%s] ms for k in {1,2,5,10,50} = 195.752/k within "
                    "1%%; 1 signature per batch", curve.c_str())};
}

// ---------------------------------------------------------------------------
// 7. Transcript compactness: a single-query proof stays under 2 KB no matter
// how large the ciphertexts get.

Verdict criterion7() {
  SessionConfig small;
  small.app = App::Vfhe;
  small.batch = 1;
  small.seed = 777;
  SessionResult a = harness::run_session(small);
  if (!a.accepted) return {false, fmt("base session rejected: %s", to_string(a.reason))};

  SessionConfig big = small;
  big.params = fhe::Params::desk_ring(8192);
  SessionResult b = harness::run_session(big);
  if (!b.accepted) return {false, fmt("wide-ring session rejected: %s", to_string(b.reason))};

  if (a.transcript_wire.size() != b.transcript_wire.size())
    return {false, fmt("transcript size depends on payload: %zu vs %zu bytes",
                       a.transcript_wire.size(), b.transcript_wire.size())};
  if (a.transcript_wire.size() > 2048)
    return {false, fmt("transcript is %zu bytes, budget 2048", a.transcript_wire.size())};

  Rng rng = Rng::from_seed(778);
  fhe::Params p8 = fhe::Params::desk_ring(8192);
  fhe::KeyPair kp = fhe::gen(p8, rng);
  std::size_t ct_bytes = fhe::encrypt(p8, kp.pk, fhe::encode_scalar(p8, 1), rng).serialize().size();
  if (ct_bytes < 100 * 1024)
    return {false, fmt("wide-ring ciphertext is %zu bytes, wanted >= 100 KB", ct_bytes)};

  return {true, fmt("single-query transcript %zu bytes (budget 2048), unchanged when ciphertexts "
                    "grow to %zu bytes (>= 100 KB)", a.transcript_wire.size(), ct_bytes)};
}

// ---------------------------------------------------------------------------
// 8. Determinism: equal seeds give bit-identical sessions.

Verdict criterion8() {
  SessionConfig cfg;
  cfg.app = App::Pir;
  cfg.batch = 3;
  cfg.seed = 888;
  SessionResult a = harness::run_session(cfg);
  SessionResult b = harness::run_session(cfg);
  if (!a.accepted || !b.accepted) return {false, "honest PIR session rejected"};
  if (a.transcript_wire.empty()) return {false, "no transcript captured"};
  if (a.transcript_wire != b.transcript_wire)
    return {false, "same seed produced different attested transcripts"};
  if (!(a.response_digest == b.response_digest))
    return {false, "same seed produced different response bytes"};
  return {true, fmt("two seed-%" PRIu64 " PIR sessions: transcripts (%zu bytes) and response "
                    "digests bit-identical", cfg.seed, a.transcript_wire.size())};
}

// ---------------------------------------------------------------------------
// 9. Arithmetic fidelity against an independent modular oracle.

std::vector<std::uint64_t> negacyclic_oracle(std::span<const std::uint64_t> a,
                                             std::span<const std::uint64_t> b, std::uint64_t t) {
  std::size_t n = a.size();
  std::vector<__int128> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      __int128 prod = static_cast<__int128>(a[i]) * static_cast<__int128>(b[j]);
      std::size_t k = i + j;
      if (k < n) acc[k] += prod;
      else acc[k - n] -= prod;
    }
  std::vector<std::uint64_t> out(n);
  auto tt = static_cast<__int128>(t);
  for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<std::uint64_t>(((acc[k] % tt) + tt) % tt);
  return out;
}

Verdict criterion9() {
  const fhe::Params desk = fhe::Params::desk();
  const fhe::Params tiny = fhe::Params::tiny();
  Rng rng = Rng::from_seed(999);
  fhe::KeyPair kd = fhe::gen(desk, rng);
  fhe::KeyPair kt = fhe::gen(tiny, rng);

  for (int i = 0; i < 1000; ++i) {
    // Most cases on the tiny ring where the oracle is cheap; every fifth on
    // the full desk ring.
    const bool wide = i % 5 == 0;
    const fhe::Params& p = wide ? desk : tiny;
    const fhe::KeyPair& kp = wide ? kd : kt;

    std::vector<std::uint64_t> a(p.n), b(p.n);
    for (auto& v : a) v = rng.uniform_below(p.t);
    for (auto& v : b) v = rng.uniform_below(p.t);

    fhe::Ciphertext ca = fhe::encrypt(p, kp.pk, fhe::encode_vector(p, a), rng);
    fhe::Ciphertext cb = fhe::encrypt(p, kp.pk, fhe::encode_vector(p, b), rng);

    fhe::Ciphertext sum = fhe::add(p, ca, cb);
    if (fhe::noise_budget(p, kp.sk, sum) <= 0) return {false, fmt("case %d: add exhausted noise", i)};
    std::vector<std::uint64_t> got = fhe::decode_vector(p, fhe::decrypt(p, kp.sk, sum));
    for (std::size_t k = 0; k < p.n; ++k)
      if (got[k] != (a[k] + b[k]) % p.t)
        return {false, fmt("case %d: add mismatch at coefficient %zu", i, k)};

    fhe::Ciphertext prod = fhe::mul_plain(p, ca, fhe::encode_vector(p, b));
    if (fhe::noise_budget(p, kp.sk, prod) <= 0)
      return {false, fmt("case %d: mul_plain exhausted noise", i)};
    got = fhe::decode_vector(p, fhe::decrypt(p, kp.sk, prod));
    if (got != negacyclic_oracle(a, b, p.t))
      return {false, fmt("case %d: mul_plain differs from the convolution oracle", i)};
  }

  // Exhaustive single-coefficient roundtrip over the whole tiny ring.
  std::size_t cases = 0;
  for (std::size_t pos = 0; pos < tiny.n; ++pos) {
    for (std::uint64_t v = 0; v < tiny.t; ++v) {
      std::vector<std::uint64_t> u(tiny.n, 0);
      u[pos] = v;
      fhe::Ciphertext ct = fhe::encrypt(tiny, kt.pk, fhe::encode_vector(tiny, u), rng);
      if (fhe::decode_vector(tiny, fhe::decrypt(tiny, kt.sk, ct)) != u)
        return {false, fmt("roundtrip failed at position %zu value %" PRIu64, pos, v)};
      ++cases;
    }
  }
  return {true, fmt("1000 random add/mul_plain cases match the modular oracle with noise budget "
                    "left; %zu exhaustive n=16,t=17 roundtrips exact", cases)};
}

// ---------------------------------------------------------------------------
// 10. Quote integrity: any single flipped byte in the serialized proof is
// rejected.

Verdict criterion10() {
  Rng master = Rng::from_seed(101010);
  crypto::SigKeyPair keys = crypto::SigKeyPair::generate(master);
  scheme::TrustAnchors anchors = scheme::default_anchors(keys.pk);
  const fhe::Params p = fhe::Params::desk();

  Rng boot_rng = master.fork("boot");
  scheme::Server server(p, scheme::Platform::boot(keys.sk, boot_rng));
  const std::uint64_t weights[] = {3, 1, 4, 1};
  scheme::Circuit c = scheme::Circuit::inner_product(weights);
  crypto::Digest measurement = server.register_circuit(c);

  scheme::Client client(p, anchors, master.fork("client"));
  const std::uint64_t vals[] = {2, 7, 1, 8};
  Bytes req = client.encrypt_request(vals);
  auto session = server.open_session(measurement);
  Bytes resp = session.value().answer(req).value();

  scheme::VerifySpec spec;
  monitor::EnclaveImage img = scheme::image_for(c);
  spec.enclave_binary_digest = img.binary_digest();
  spec.init_digest = img.init_digest();
  spec.sent = {req};
  spec.received = {resp};
  spec.nonce = client.fresh_nonce();
  Bytes wire_bytes = session.value().finish(spec.nonce).serialize();

  if (!client.verify_wire(wire_bytes, spec).ok()) return {false, "pristine transcript rejected"};
  if (wire_bytes.size() < 100)
    return {false, fmt("serialized proof only %zu bytes, cannot sample 100 positions", wire_bytes.size())};

  for (std::size_t k = 0; k < 100; ++k) {
    std::size_t pos = k * wire_bytes.size() / 100;
    Bytes mutated = wire_bytes;
    mutated[pos] ^= static_cast<std::uint8_t>(1u << (k % 8));
    auto r = client.verify_wire(mutated, spec);
    if (r.ok())
      return {false, fmt("flipping bit %zu of byte %zu left the proof acceptable", k % 8, pos)};
  }
  return {true, fmt("100/100 single-byte mutations across a %zu-byte proof each rejected",
                    wire_bytes.size())};
}

}  // namespace

int main() {
  struct Criterion {
    int num;
    const char* name;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "completeness", criterion1},
      {2, "soundness", criterion2},
      {3, "pir correctness", criterion3},
      {4, "selective-failure defense", criterion4},
      {5, "psi correctness", criterion5},
      {6, "batching amortization", criterion6},
      {7, "transcript compactness", criterion7},
      {8, "determinism", criterion8},
      {9, "arithmetic fidelity", criterion9},
      {10, "quote integrity", criterion10},
  };

  auto t0 = Clock::now();
  int passed = 0;
  for (const Criterion& c : criteria) {
    Verdict v{false, ""};
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, fmt("uncaught exception: %s", e.what())};
    }
    std::printf("%s  %2d %-27s %s\n", v.pass ? "PASS" : "FAIL", c.num, c.name, v.detail.c_str());
    std::fflush(stdout);
    if (v.pass) ++passed;
  }
  std::printf("%d/10 criteria passed in %.1fs\n", passed, secs_since(t0));
  return passed == 10 ? 0 : 1;
}
