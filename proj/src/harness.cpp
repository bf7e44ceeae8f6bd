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

#include "vfhe/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "vfhe/pir.hpp"
#include "vfhe/psi.hpp"

namespace vfhe::harness {

const char* to_string(App a) {
  switch (a) {
    case App::Vfhe: return "vfhe";
    case App::Pir: return "pir";
    case App::Psi: return "psi";
  }
  return "?";
}

const char* to_string(AttackBehavior b) {
  switch (b) {
    case AttackBehavior::None: return "None";
    case AttackBehavior::TamperOutputCiphertext: return "TamperOutputCiphertext";
    case AttackBehavior::ReencryptCorrectOutput: return "ReencryptCorrectOutput";
    case AttackBehavior::SwapCircuit: return "SwapCircuit";
    case AttackBehavior::MalformedDbEntry: return "MalformedDbEntry";
    case AttackBehavior::WrongCommitment: return "WrongCommitment";
    case AttackBehavior::RecommitModifiedSet: return "RecommitModifiedSet";
    case AttackBehavior::ReplayTranscript: return "ReplayTranscript";
    case AttackBehavior::ForgeSignature: return "ForgeSignature";
    case AttackBehavior::DropInput: return "DropInput";
    case AttackBehavior::ReorderInputs: return "ReorderInputs";
  }
  return "?";
}

std::optional<App> app_from_string(std::string_view s) {
  for (App a : {App::Vfhe, App::Pir, App::Psi})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

std::optional<AttackBehavior> attack_from_string(std::string_view s) {
  for (AttackBehavior b : all_attacks())
    if (s == to_string(b)) return b;
  if (s == to_string(AttackBehavior::None)) return AttackBehavior::None;
  return std::nullopt;
}

std::vector<AttackBehavior> all_attacks() {
  return {AttackBehavior::TamperOutputCiphertext,
          AttackBehavior::ReencryptCorrectOutput,
          AttackBehavior::SwapCircuit,
          AttackBehavior::MalformedDbEntry,
          AttackBehavior::WrongCommitment,
          AttackBehavior::RecommitModifiedSet,
          AttackBehavior::ReplayTranscript,
          AttackBehavior::ForgeSignature,
          AttackBehavior::DropInput,
          AttackBehavior::ReorderInputs};
}

Reason expected_reason(AttackBehavior b) {
  switch (b) {
    case AttackBehavior::None: return Reason::Accepted;
    case AttackBehavior::TamperOutputCiphertext: return Reason::OutputMismatch;
    case AttackBehavior::ReencryptCorrectOutput: return Reason::OutputMismatch;
    case AttackBehavior::SwapCircuit: return Reason::CircuitMismatch;
    case AttackBehavior::MalformedDbEntry: return Reason::WellFormednessViolation;
    case AttackBehavior::WrongCommitment: return Reason::CommitmentMismatch;
    case AttackBehavior::RecommitModifiedSet: return Reason::CommitmentMismatch;
    case AttackBehavior::ReplayTranscript: return Reason::BadQuote;
    case AttackBehavior::ForgeSignature: return Reason::UntrustedEndorsement;
    case AttackBehavior::DropInput: return Reason::InputMismatch;
    case AttackBehavior::ReorderInputs: return Reason::InputMismatch;
  }
  return Reason::ProtocolViolation;
}

std::string BenchReport::csv_header() {
  return "app,batch,setup_ms,preprocess_ms,per_query_ms,attest_ms,attest_per_query_ms,"
         "signatures,wire_bytes";
}

std::string BenchReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%zu,%.3f,%.3f,%.3f,%.3f,%.3f,%llu,%llu", to_string(app),
                batch, setup_ms, preprocess_ms, per_query_ms, attest_ms, attest_per_query_ms,
                static_cast<unsigned long long>(signatures),
                static_cast<unsigned long long>(wire_bytes));
  return buf;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr std::size_t kVfheArity = 4;  // server elements touched by the demo circuit

// ---------------------------------------------------------------------------
// Attack building blocks.

Bytes flip_last_byte(Bytes b) {
  if (!b.empty()) b.back() ^= 0x01;
  return b;
}

// Fresh, well-formed encryptions of zero under the client's own key, one per
// ciphertext in the honest response. They would decrypt cleanly; only the
// transcript comparison can tell they never went through the enclave.
Bytes reencrypt_all(const fhe::Params& p, const fhe::PublicKey& pk, ByteView honest, Rng& rng) {
  std::vector<fhe::Ciphertext> cts = scheme::parse_ct_list(p, honest);
  std::vector<fhe::Ciphertext> fresh;
  fresh.reserve(cts.size());
  fhe::Plaintext zero = fhe::encode_scalar(p, 0);
  for (std::size_t i = 0; i < cts.size(); ++i) fresh.push_back(fhe::encrypt(p, pk, zero, rng));
  return scheme::serialize_ct_list(fresh);
}

// Routing state for DropInput and ReorderInputs across a batch.
struct Routing {
  AttackBehavior attack = AttackBehavior::None;
  std::size_t expected = 1;
  std::size_t seen = 0;
  std::vector<Bytes> stash;
};

// Decides, per request, what runs inside the enclave and what runs beside
// it. `inside` transcribes; `outside` computes the identical bytes without
// leaving a trace. Both evaluations are deterministic, so every response the
// client sees is byte-for-byte honest; only the transcript differs.
template <class Inside, class Outside>
Outcome<Bytes> route_request(Routing& st, Inside inside, Outside outside, ByteView request) {
  const std::size_t i = st.seen++;
  switch (st.attack) {
    case AttackBehavior::DropInput:
      return i == 0 ? outside(request) : inside(request);
    case AttackBehavior::ReorderInputs: {
      st.stash.emplace_back(request.begin(), request.end());
      if (i + 1 < st.expected) return outside(request);
      Outcome<Bytes> last = inside(st.stash.back());
      if (!last.ok()) return last;
      for (std::size_t j = st.stash.size() - 1; j-- > 0;) {
        Outcome<Bytes> r = inside(st.stash[j]);
        if (!r.ok()) return r;
      }
      return last;
    }
    default:
      return inside(request);
  }
}

// ---------------------------------------------------------------------------
// Server actors: the full server half of one session, one frame at a time.
// Honest behavior plus exactly one deviation selected by the config.

class Actor {
 public:
  virtual ~Actor() = default;

  wire::Frame handle(const wire::Frame& f) {
    switch (f.type) {
      case wire::FrameType::Hello: return on_hello(f.payload);
      case wire::FrameType::Request: return on_request(f.payload);
      case wire::FrameType::Done: return on_done(f.payload);
      default: return wire::refusal(Reason::ProtocolViolation);
    }
  }

  virtual tpm::Tpm& tpm() = 0;
  // Time spent packing data and building commitments, separated from boot.
  double preprocess_ms() const { return preprocess_ms_; }

 protected:
  explicit Actor(const SessionConfig& cfg, Rng attack_rng)
      : cfg_(cfg), attack_rng_(std::move(attack_rng)) {}

  AttackBehavior attack() const { return cfg_.attack; }
  bool attacking(AttackBehavior b) const { return cfg_.attack == b; }

  virtual wire::Frame on_hello(ByteView payload) = 0;
  virtual wire::Frame on_request(ByteView payload) = 0;
  virtual wire::Frame on_done(ByteView payload) = 0;

  // Shared hello plumbing: parameter check and capture of the client's
  // encryption key for the re-encryption behavior.
  std::optional<Reason> check_hello(ByteView payload, std::uint8_t app_tag) {
    auto hello = wire::decode_hello(payload);
    if (!hello.ok()) return hello.reason();
    if (hello.value().app != app_tag || hello.value().params_id != cfg_.params.id())
      return Reason::Refused;
    try {
      client_pk_ = fhe::PublicKey::parse(cfg_.params, hello.value().client_pk);
    } catch (const MalformedMessage&) {
      return Reason::MalformedMessage;
    }
    return std::nullopt;
  }

  // Tamper / re-encrypt transforms, applied to an honest response.
  Bytes transform_response(Bytes resp) {
    if (attacking(AttackBehavior::TamperOutputCiphertext)) return flip_last_byte(std::move(resp));
    if (attacking(AttackBehavior::ReencryptCorrectOutput) && client_pk_)
      return reencrypt_all(cfg_.params, *client_pk_, resp, attack_rng_);
    return resp;
  }

  static std::optional<tpm::Nonce> parse_nonce(ByteView payload) {
    if (payload.size() != 32) return std::nullopt;
    tpm::Nonce n;
    std::copy(payload.begin(), payload.end(), n.begin());
    return n;
  }

  wire::Frame transcript_or_replay(monitor::AttestedTranscript at) {
    if (attacking(AttackBehavior::ReplayTranscript)) {
      return wire::Frame{wire::FrameType::Transcript, replay_wire_};
    }
    return wire::Frame{wire::FrameType::Transcript, at.serialize()};
  }

  SessionConfig cfg_;
  Rng attack_rng_;
  std::optional<fhe::PublicKey> client_pk_;
  Routing routing_;
  Bytes replay_wire_;  // a past session's attested transcript
  double preprocess_ms_ = 0;
};

// vFHE and PIR share the ciphertext-batch shape; they differ in how the
// database is installed and which wrapper owns the scheme server.
class VfheActor : public Actor {
 public:
  VfheActor(const SessionConfig& cfg, const crypto::SecretKey& boot_sk, Rng& server_rng,
            Rng attack_rng, std::vector<std::uint64_t> server_scalars)
      : Actor(cfg, std::move(attack_rng)),
        server_(cfg.params, scheme::Platform::boot(boot_sk, server_rng)) {
    server_.platform().tpm->set_quote_latency_micros(cfg.latency_micros);
    routing_ = Routing{cfg.attack, cfg.batch, 0, {}};

    circuit_ = scheme::Circuit::server_inner_product(kVfheArity);
    measurement_ = server_.register_circuit(circuit_);
    if (attacking(AttackBehavior::SwapCircuit)) {
      scheme::Circuit swapped = circuit_;
      swapped.ops.push_back({scheme::Circuit::OpCode::AddConst, 0});
      swapped_measurement_ = server_.register_circuit(swapped);
    }

    auto tp = Clock::now();
    std::vector<fhe::Plaintext> w;
    w.reserve(server_scalars.size());
    for (std::uint64_t v : server_scalars) w.push_back(fhe::encode_scalar(cfg.params, v));
    if (attacking(AttackBehavior::MalformedDbEntry)) w[0].c[0] = cfg.params.t;
    server_.set_server_input(std::move(w));
    published_root_ = server_.committed_root();
    preprocess_ms_ = ms_since(tp);

    if (attacking(AttackBehavior::ReplayTranscript)) {
      auto s = server_.open_session(measurement_);
      replay_wire_ = s.value().finish(tpm::Nonce{}).serialize();
    }
  }

  const crypto::Digest& published_root() const { return published_root_; }
  tpm::Tpm& tpm() override { return *server_.platform().tpm; }

 protected:
  wire::Frame on_hello(ByteView payload) override {
    if (auto r = check_hello(payload, static_cast<std::uint8_t>(App::Vfhe)))
      return wire::refusal(*r);
    if (attacking(AttackBehavior::RecommitModifiedSet))
      server_.mutable_server_input()[0] = fhe::encode_scalar(cfg_.params, 1);
    std::optional<crypto::Digest> override_root;
    if (attacking(AttackBehavior::WrongCommitment))
      override_root = crypto::sha256(to_bytes("not the served data"));
    const crypto::Digest& m =
        attacking(AttackBehavior::SwapCircuit) ? swapped_measurement_ : measurement_;
    auto s = server_.open_session(m, override_root);
    if (!s.ok()) return wire::refusal(s.reason());
    session_.emplace(s.take());
    return wire::Frame{wire::FrameType::Hello, {static_cast<std::uint8_t>(App::Vfhe)}};
  }

  wire::Frame on_request(ByteView payload) override {
    if (!session_) return wire::refusal(Reason::ProtocolViolation);
    auto inside = [&](ByteView req) { return session_->answer(req); };
    auto outside = [&](ByteView req) {
      return scheme::evaluate_request(cfg_.params, circuit_, server_.server_input(), req);
    };
    Outcome<Bytes> r = route_request(routing_, inside, outside, payload);
    if (!r.ok()) return wire::refusal(r.reason());
    return wire::Frame{wire::FrameType::Response, transform_response(r.take())};
  }

  wire::Frame on_done(ByteView payload) override {
    auto nonce = parse_nonce(payload);
    if (!nonce || !session_) return wire::refusal(Reason::ProtocolViolation);
    return transcript_or_replay(session_->finish(*nonce));
  }

 private:
  scheme::Server server_;
  scheme::Circuit circuit_;
  crypto::Digest measurement_{};
  crypto::Digest swapped_measurement_{};
  crypto::Digest published_root_{};
  std::optional<scheme::EvalSession> session_;
};

class PirActor : public Actor {
 public:
  PirActor(const SessionConfig& cfg, const crypto::SecretKey& boot_sk, Rng& server_rng,
           Rng attack_rng, const std::vector<Bytes>& entries)
      : Actor(cfg, std::move(attack_rng)),
        server_(cfg.params, scheme::Platform::boot(boot_sk, server_rng), cfg.entry_size) {
    server_.core().platform().tpm->set_quote_latency_micros(cfg.latency_micros);
    routing_ = Routing{cfg.attack, cfg.batch, 0, {}};
    circuit_ = scheme::Circuit::server_inner_product(entries.size());

    auto tp = Clock::now();
    if (attacking(AttackBehavior::MalformedDbEntry)) {
      std::vector<fhe::Plaintext> packed;
      packed.reserve(entries.size());
      for (const Bytes& e : entries) packed.push_back(pir::pack_entry(cfg.params, e, cfg.entry_size));
      packed[0].c[0] = cfg.params.t;
      init_reason_ = server_.init_packed(std::move(packed)).reason();
      preprocess_ms_ = ms_since(tp);
      return;
    }
    published_root_ = server_.init(entries).value();
    preprocess_ms_ = ms_since(tp);

    if (attacking(AttackBehavior::SwapCircuit)) {
      scheme::Circuit swapped = circuit_;
      swapped.ops.push_back({scheme::Circuit::OpCode::AddConst, 0});
      swapped_measurement_ = server_.core().register_circuit(swapped);
    }
    if (attacking(AttackBehavior::ReplayTranscript)) {
      auto s = server_.open_batch();
      replay_wire_ = s.value().finish(tpm::Nonce{}).serialize();
    }
  }

  const crypto::Digest& published_root() const { return published_root_; }
  bool serving() const { return !init_reason_.has_value(); }
  Reason init_reason() const { return init_reason_.value_or(Reason::Accepted); }
  tpm::Tpm& tpm() override { return *server_.core().platform().tpm; }

 protected:
  wire::Frame on_hello(ByteView payload) override {
    if (auto r = check_hello(payload, static_cast<std::uint8_t>(App::Pir)))
      return wire::refusal(*r);
    if (init_reason_) return wire::refusal(*init_reason_);
    if (attacking(AttackBehavior::RecommitModifiedSet))
      server_.update_entry(0, Bytes(cfg_.entry_size, 0xee));

    Outcome<scheme::EvalSession> s = Reason::Refused;
    if (attacking(AttackBehavior::WrongCommitment)) {
      s = server_.core().open_session(server_.measurement(),
                                      crypto::sha256(to_bytes("not the served data")));
    } else if (attacking(AttackBehavior::SwapCircuit)) {
      s = server_.core().open_session(swapped_measurement_);
    } else {
      s = server_.open_batch();
    }
    if (!s.ok()) return wire::refusal(s.reason());
    session_.emplace(s.take());
    return wire::Frame{wire::FrameType::Hello, {static_cast<std::uint8_t>(App::Pir)}};
  }

  wire::Frame on_request(ByteView payload) override {
    if (!session_) return wire::refusal(Reason::ProtocolViolation);
    auto inside = [&](ByteView req) { return session_->answer(req); };
    auto outside = [&](ByteView req) {
      return scheme::evaluate_request(cfg_.params, circuit_, server_.core().server_input(), req);
    };
    Outcome<Bytes> r = route_request(routing_, inside, outside, payload);
    if (!r.ok()) return wire::refusal(r.reason());
    return wire::Frame{wire::FrameType::Response, transform_response(r.take())};
  }

  wire::Frame on_done(ByteView payload) override {
    auto nonce = parse_nonce(payload);
    if (!nonce || !session_) return wire::refusal(Reason::ProtocolViolation);
    return transcript_or_replay(session_->finish(*nonce));
  }

 private:
  pir::PirServer server_;
  scheme::Circuit circuit_;
  crypto::Digest swapped_measurement_{};
  crypto::Digest published_root_{};
  std::optional<Reason> init_reason_;
  std::optional<scheme::EvalSession> session_;
};

class PsiActor : public Actor {
 public:
  PsiActor(const SessionConfig& cfg, const crypto::SecretKey& boot_sk, Rng& server_rng,
           Rng attack_rng, const std::vector<Bytes>& items)
      : Actor(cfg, std::move(attack_rng)) {
    // PSI has two transcribed inputs per session: the OPRF round and the
    // query round.
    routing_ = Routing{cfg.attack, 2, 0, {}};

    honest_ = make_server(cfg, boot_sk, server_rng, items, psi::default_binning(items.size()),
                          attacking(AttackBehavior::MalformedDbEntry));
    if (!honest_->serving()) {
      init_reason_ = init_failure_;
      return;
    }
    info_ = honest_->info();

    if (attacking(AttackBehavior::SwapCircuit)) {
      psi::Binning b = info_.binning;
      b.bins += 1;
      swapped_ = make_server(cfg, boot_sk, server_rng, items, b, false);
    }
    if (attacking(AttackBehavior::ReplayTranscript)) {
      auto s = serving_server().open_session();
      replay_wire_ = s.value().finish(tpm::Nonce{}).serialize();
    }
  }

  bool serving() const { return honest_ && honest_->serving(); }
  Reason init_reason() const { return init_reason_.value_or(Reason::Accepted); }
  const psi::PsiServerInfo& info() const { return info_; }
  tpm::Tpm& tpm() override { return *serving_server().platform().tpm; }

 protected:
  wire::Frame on_hello(ByteView payload) override {
    if (auto r = check_hello(payload, static_cast<std::uint8_t>(App::Psi)))
      return wire::refusal(*r);
    if (init_reason_) return wire::refusal(*init_reason_);
    if (attacking(AttackBehavior::RecommitModifiedSet)) honest_->mutable_items()[0][0] ^= 0x01;

    std::optional<crypto::Digest> override_root;
    if (attacking(AttackBehavior::WrongCommitment))
      override_root = crypto::sha256(to_bytes("not the served data"));
    auto s = serving_server().open_session(override_root);
    if (!s.ok()) return wire::refusal(s.reason());
    session_.emplace(s.take());
    return wire::Frame{wire::FrameType::Hello, {static_cast<std::uint8_t>(App::Psi)}};
  }

  wire::Frame on_request(ByteView payload) override {
    if (!session_) return wire::refusal(Reason::ProtocolViolation);
    auto inside = [&](ByteView req) { return session_->answer(req); };
    auto outside = [&](ByteView req) { return oprf_outside(req); };
    Outcome<Bytes> r = route_request(routing_, inside, outside, payload);
    if (!r.ok()) return wire::refusal(r.reason());
    Bytes resp = r.take();
    // Ciphertext transforms only make sense on the ciphertext round.
    if (!payload.empty() && payload[0] == psi::kQueryRoundTag) resp = transform_response(resp);
    return wire::Frame{wire::FrameType::Response, std::move(resp)};
  }

  wire::Frame on_done(ByteView payload) override {
    auto nonce = parse_nonce(payload);
    if (!nonce || !session_) return wire::refusal(Reason::ProtocolViolation);
    return transcript_or_replay(session_->finish(*nonce));
  }

 private:
  psi::PsiServer& serving_server() { return swapped_ ? *swapped_ : *honest_; }

  // Builds a server over the items, widening the bin table on the rare
  // overflow. A deliberately malformed set skips the retry: the refusal is
  // the point.
  std::optional<psi::PsiServer> make_server(const SessionConfig& cfg,
                                            const crypto::SecretKey& boot_sk, Rng& server_rng,
                                            std::vector<Bytes> items, psi::Binning binning,
                                            bool poison) {
    if (poison) items[0] = Bytes{};
    for (int tries = 0; tries < 5; ++tries) {
      psi::PsiServer s(cfg.params, scheme::Platform::boot(boot_sk, server_rng), binning);
      s.platform().tpm->set_quote_latency_micros(cfg.latency_micros);
      auto tp = Clock::now();
      auto r = s.init(items, server_rng);
      preprocess_ms_ += ms_since(tp);
      init_failure_ = r.reason();
      if (r.ok() || r.reason() != Reason::BinOverflow) return s;
      binning.bins *= 2;
    }
    throw std::runtime_error("bin overflow persisted across retries");
  }

  // The same bytes the enclave's OPRF round produces, computed outside it.
  Outcome<Bytes> oprf_outside(ByteView req) {
    try {
      ByteReader r(req);
      if (r.u8() != psi::kOprfRoundTag) return Reason::MalformedMessage;
      std::uint16_t count = r.u16();
      ByteWriter w(2 + 32 * count);
      w.u16(count);
      for (std::uint16_t i = 0; i < count; ++i) {
        crypto::GroupElement e;
        auto raw = r.take_array<32>();
        std::copy(raw.begin(), raw.end(), e.bytes.begin());
        w.raw(crypto::oprf_evaluate(serving_server().oprf_key(), e).bytes);
      }
      r.done();
      return w.take();
    } catch (const MalformedMessage&) {
      return Reason::MalformedMessage;
    } catch (const std::invalid_argument&) {
      return Reason::ProtocolViolation;
    }
  }

  std::optional<psi::PsiServer> honest_;
  std::optional<psi::PsiServer> swapped_;
  psi::PsiServerInfo info_{};
  Reason init_failure_ = Reason::Refused;
  std::optional<Reason> init_reason_;
  std::optional<psi::PsiSession> session_;
};

// ---------------------------------------------------------------------------
// Client drivers.

// Frame exchange with byte accounting and uniform error mapping.
struct Exchange {
  wire::Channel& ch;
  std::uint64_t bytes = 0;
  Bytes responses;  // concatenated response payloads

  // Returns the response payload of the expected type, or the reason the
  // exchange failed (server refusal, transport loss, protocol confusion).
  Outcome<Bytes> ask(wire::FrameType send, Bytes payload, wire::FrameType expect) {
    wire::Frame f{send, std::move(payload)};
    bytes += wire::encode(f).size();
    Outcome<wire::Frame> r = ch.round_trip(f);
    if (!r.ok()) return r.reason();
    bytes += wire::encode(r.value()).size();
    if (r.value().type == wire::FrameType::Refusal)
      return wire::refusal_reason(r.value().payload);
    if (r.value().type != expect) return Reason::ProtocolViolation;
    if (expect == wire::FrameType::Response) {
      responses.insert(responses.end(), r.value().payload.begin(), r.value().payload.end());
    }
    return r.take().payload;
  }
};

SessionResult reject(SessionResult res, Reason r) {
  res.accepted = false;
  res.reason = r;
  return res;
}

Bytes be64(std::uint64_t v) {
  ByteWriter w(8);
  w.u64(v);
  return w.take();
}

SessionResult drive_vfhe(const SessionConfig& cfg, Exchange& ex,
                         const scheme::TrustAnchors& anchors, const crypto::Digest& root,
                         const std::vector<std::uint64_t>& server_scalars, Rng client_rng) {
  SessionResult res;
  Rng query_rng = client_rng.fork("queries");
  auto t0 = Clock::now();
  scheme::Client client(cfg.params, anchors, std::move(client_rng));
  res.bench.setup_ms += ms_since(t0);

  wire::Hello hello{static_cast<std::uint8_t>(App::Vfhe), cfg.params.id(),
                    static_cast<std::uint16_t>(cfg.batch), client.public_key_bytes()};
  auto ack = ex.ask(wire::FrameType::Hello, wire::encode_hello(hello), wire::FrameType::Hello);
  if (!ack.ok()) return reject(std::move(res), ack.reason());

  scheme::Circuit circuit = scheme::Circuit::server_inner_product(kVfheArity);
  monitor::EnclaveImage image = scheme::image_for(circuit);
  scheme::VerifySpec spec;
  spec.enclave_binary_digest = image.binary_digest();
  spec.init_digest = image.init_digest();
  spec.commitment_root = root;

  std::vector<std::vector<std::uint64_t>> queries;
  auto tq = Clock::now();
  for (std::size_t i = 0; i < cfg.batch; ++i) {
    std::vector<std::uint64_t> vals(kVfheArity);
    for (auto& v : vals) v = query_rng.uniform_below(cfg.params.t);
    queries.push_back(vals);
    Bytes req = client.encrypt_request(vals);
    spec.sent.push_back(req);
    auto resp = ex.ask(wire::FrameType::Request, std::move(req), wire::FrameType::Response);
    if (!resp.ok()) return reject(std::move(res), resp.reason());
    spec.received.push_back(resp.take());
  }
  res.bench.per_query_ms = ms_since(tq) / static_cast<double>(cfg.batch);

  spec.nonce = client.fresh_nonce();
  auto tr = ex.ask(wire::FrameType::Done, Bytes(spec.nonce.begin(), spec.nonce.end()),
                   wire::FrameType::Transcript);
  if (!tr.ok()) return reject(std::move(res), tr.reason());
  res.transcript_wire = tr.take();

  auto outs = client.verify_wire(res.transcript_wire, spec);
  res.decrypted = client.decrypt_count();
  if (!outs.ok()) return reject(std::move(res), outs.reason());

  res.accepted = true;
  res.outputs_match = true;
  for (std::size_t i = 0; i < cfg.batch; ++i) {
    std::uint64_t got = client.decrypt_scalar(outs.value()[i], 0);
    unsigned __int128 want = 0;
    for (std::size_t j = 0; j < kVfheArity; ++j)
      want += static_cast<unsigned __int128>(queries[i][j]) * server_scalars[j];
    res.outputs_match &= got == static_cast<std::uint64_t>(want % cfg.params.t);
    res.outputs.push_back(be64(got));
  }
  res.decrypted = client.decrypt_count();
  return res;
}

SessionResult drive_pir(const SessionConfig& cfg, Exchange& ex,
                        const scheme::TrustAnchors& anchors, const crypto::Digest& root,
                        const std::vector<Bytes>& db, Rng client_rng) {
  SessionResult res;
  Rng query_rng = client_rng.fork("queries");
  auto t0 = Clock::now();
  pir::PirClient client(cfg.params, anchors, std::move(client_rng), cfg.entry_size);
  res.bench.setup_ms += ms_since(t0);

  wire::Hello hello{static_cast<std::uint8_t>(App::Pir), cfg.params.id(),
                    static_cast<std::uint16_t>(cfg.batch), client.core().public_key_bytes()};
  auto ack = ex.ask(wire::FrameType::Hello, wire::encode_hello(hello), wire::FrameType::Hello);
  if (!ack.ok()) {
    res.decryption_failures = client.decryption_failures();
    return reject(std::move(res), ack.reason());
  }

  client.begin_batch(db.size(), root);
  std::vector<std::size_t> indices;
  auto tq = Clock::now();
  for (std::size_t i = 0; i < cfg.batch; ++i) {
    std::size_t idx = static_cast<std::size_t>(query_rng.uniform_below(db.size()));
    indices.push_back(idx);
    auto resp =
        ex.ask(wire::FrameType::Request, client.build_query(idx), wire::FrameType::Response);
    if (!resp.ok()) return reject(std::move(res), resp.reason());
    client.record_response(resp.take());
  }
  res.bench.per_query_ms = ms_since(tq) / static_cast<double>(cfg.batch);

  const tpm::Nonce& nonce = client.nonce();
  auto tr =
      ex.ask(wire::FrameType::Done, Bytes(nonce.begin(), nonce.end()), wire::FrameType::Transcript);
  if (!tr.ok()) return reject(std::move(res), tr.reason());
  res.transcript_wire = tr.take();

  auto got = client.finish_batch_wire(res.transcript_wire);
  res.decrypted = client.core().decrypt_count();
  res.decryption_failures = client.decryption_failures();
  if (!got.ok()) return reject(std::move(res), got.reason());

  res.accepted = true;
  res.outputs_match = true;
  res.outputs = got.take();
  for (std::size_t i = 0; i < cfg.batch; ++i)
    res.outputs_match &= res.outputs[i] == db[indices[i]];
  return res;
}

SessionResult drive_psi(const SessionConfig& cfg, Exchange& ex,
                        const scheme::TrustAnchors& anchors, const psi::PsiServerInfo& info,
                        const std::vector<Bytes>& client_items,
                        const std::vector<Bytes>& server_items, Rng client_rng) {
  SessionResult res;
  auto t0 = Clock::now();
  psi::PsiClient client(cfg.params, anchors, std::move(client_rng));
  res.bench.setup_ms += ms_since(t0);

  wire::Hello hello{static_cast<std::uint8_t>(App::Psi), cfg.params.id(),
                    static_cast<std::uint16_t>(client_items.size()),
                    client.core().public_key_bytes()};
  auto ack = ex.ask(wire::FrameType::Hello, wire::encode_hello(hello), wire::FrameType::Hello);
  if (!ack.ok()) return reject(std::move(res), ack.reason());

  client.begin(client_items, info);
  auto tq = Clock::now();
  auto r1 = ex.ask(wire::FrameType::Request, client.oprf_request(), wire::FrameType::Response);
  if (!r1.ok()) return reject(std::move(res), r1.reason());
  client.oprf_response(r1.take());

  auto r2 = ex.ask(wire::FrameType::Request, client.query_request(), wire::FrameType::Response);
  if (!r2.ok()) return reject(std::move(res), r2.reason());
  client.query_response(r2.take());
  res.bench.per_query_ms =
      ms_since(tq) / static_cast<double>(std::max<std::size_t>(1, client_items.size()));

  const tpm::Nonce& nonce = client.nonce();
  auto tr =
      ex.ask(wire::FrameType::Done, Bytes(nonce.begin(), nonce.end()), wire::FrameType::Transcript);
  if (!tr.ok()) return reject(std::move(res), tr.reason());
  res.transcript_wire = tr.take();

  auto got = client.finish_wire(res.transcript_wire);
  res.decrypted = client.core().decrypt_count();
  if (!got.ok()) return reject(std::move(res), got.reason());

  res.accepted = true;
  res.outputs = got.take();
  std::set<Bytes> server_set(server_items.begin(), server_items.end());
  std::vector<Bytes> oracle;
  for (const Bytes& c : client_items)
    if (server_set.count(c)) oracle.push_back(c);
  res.outputs_match = res.outputs == oracle;
  return res;
}

}  // namespace

SessionResult run_session(const SessionConfig& raw_cfg) {
  SessionConfig cfg = raw_cfg;
  cfg.batch = std::max<std::size_t>(1, cfg.batch);
  // Dropping or reordering needs at least two requests to be visible.
  if (cfg.app != App::Psi &&
      (cfg.attack == AttackBehavior::DropInput || cfg.attack == AttackBehavior::ReorderInputs)) {
    cfg.batch = std::max<std::size_t>(2, cfg.batch);
  }

  Rng master = Rng::from_seed(cfg.seed);
  crypto::SigKeyPair root_keys = crypto::SigKeyPair::generate(master);
  crypto::SigKeyPair rogue_keys = crypto::SigKeyPair::generate(master);
  scheme::TrustAnchors anchors = scheme::default_anchors(root_keys.pk);
  const crypto::SecretKey& boot_sk =
      cfg.attack == AttackBehavior::ForgeSignature ? rogue_keys.sk : root_keys.sk;

  Rng server_rng = master.fork("server");
  Rng client_rng = master.fork("client");
  Rng data_rng = master.fork("data");
  Rng attack_rng = master.fork("attack");

  SessionResult res;
  std::unique_ptr<Actor> actor;
  crypto::Digest root{};
  std::vector<std::uint64_t> server_scalars;
  std::vector<Bytes> db;
  std::vector<Bytes> server_items, client_items;
  psi::PsiServerInfo psi_info{};

  auto t0 = Clock::now();
  switch (cfg.app) {
    case App::Vfhe: {
      server_scalars.resize(kVfheArity);
      for (auto& v : server_scalars) v = data_rng.uniform_below(cfg.params.t);
      auto a = std::make_unique<VfheActor>(cfg, boot_sk, server_rng, std::move(attack_rng),
                                           server_scalars);
      root = a->published_root();
      actor = std::move(a);
      break;
    }
    case App::Pir: {
      db.assign(cfg.db_entries, Bytes(cfg.entry_size));
      for (Bytes& e : db) data_rng.fill(e);
      auto a = std::make_unique<PirActor>(cfg, boot_sk, server_rng, std::move(attack_rng), db);
      root = a->published_root();
      actor = std::move(a);
      break;
    }
    case App::Psi: {
      server_items.assign(cfg.set_size, Bytes(16));
      for (Bytes& s : server_items) data_rng.fill(s);
      client_items.resize(cfg.batch);
      for (std::size_t i = 0; i < client_items.size(); ++i) {
        if (i % 2 == 0) {
          client_items[i] = server_items[(i * 7 + 3) % server_items.size()];
        } else {
          client_items[i] = Bytes(16);
          data_rng.fill(client_items[i]);
        }
      }
      auto a = std::make_unique<PsiActor>(cfg, boot_sk, server_rng, std::move(attack_rng),
                                          server_items);
      if (a->serving()) psi_info = a->info();
      actor = std::move(a);
      break;
    }
  }
  // The actor constructor covers platform boot, key material, data packing,
  // and commitment; the actor reports which slice was preprocessing.
  res.bench.preprocess_ms = actor->preprocess_ms();
  res.bench.setup_ms = ms_since(t0) - res.bench.preprocess_ms;

  const std::uint64_t sig_base = actor->tpm().signature_count();
  const std::uint64_t clock_base = actor->tpm().clock_micros();

  wire::Handler handler = [&actor](const wire::Frame& f) { return actor->handle(f); };
  std::optional<wire::TcpServer> tcp;
  std::unique_ptr<wire::Channel> channel;
  if (cfg.over_tcp) {
    tcp.emplace(handler);
    auto ch = wire::TcpChannel::connect(tcp->port());
    if (!ch) {
      res.reason = Reason::TransportError;
      return res;
    }
    channel = std::move(ch);
  } else {
    channel = std::make_unique<wire::LocalChannel>(std::move(handler));
  }

  Exchange ex{*channel, 0, {}};
  SessionResult driven;
  BenchReport bench_seed = res.bench;
  switch (cfg.app) {
    case App::Vfhe:
      driven = drive_vfhe(cfg, ex, anchors, root, server_scalars, std::move(client_rng));
      break;
    case App::Pir:
      driven = drive_pir(cfg, ex, anchors, root, db, std::move(client_rng));
      break;
    case App::Psi:
      driven = drive_psi(cfg, ex, anchors, psi_info, client_items, server_items,
                         std::move(client_rng));
      break;
  }
  driven.bench.setup_ms += bench_seed.setup_ms;
  driven.bench.preprocess_ms = bench_seed.preprocess_ms;
  driven.bench.app = cfg.app;
  driven.bench.batch = cfg.batch;
  driven.bench.signatures = actor->tpm().signature_count() - sig_base;
  driven.bench.attest_ms =
      static_cast<double>(actor->tpm().clock_micros() - clock_base) / 1000.0;
  driven.bench.attest_per_query_ms = driven.bench.attest_ms / static_cast<double>(cfg.batch);
  driven.bench.wire_bytes = ex.bytes;
  driven.response_digest = crypto::sha256(ex.responses);
  return driven;
}

std::vector<BenchReport> run_bench(App app, std::span<const std::size_t> batches,
                                   std::uint64_t latency_micros, bool over_tcp) {
  std::vector<BenchReport> out;
  for (std::size_t k : batches) {
    SessionConfig cfg;
    cfg.app = app;
    cfg.seed = 9000 + k;
    cfg.batch = k;
    cfg.over_tcp = over_tcp;
    cfg.latency_micros = latency_micros;
    cfg.db_entries = 64;
    cfg.entry_size = 128;
    cfg.set_size = 64;
    SessionResult r = run_session(cfg);
    if (!r.accepted) throw std::runtime_error("bench session rejected unexpectedly");
    out.push_back(r.bench);
  }
  return out;
}

struct ServerEndpoint::Impl {
  std::unique_ptr<Actor> actor;
  crypto::Digest root{};
  psi::Binning binning{0, 0};
  bool serving = false;
  Reason init_reason = Reason::Accepted;
};

ServerEndpoint::ServerEndpoint(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ServerEndpoint::~ServerEndpoint() = default;
ServerEndpoint::ServerEndpoint(ServerEndpoint&&) noexcept = default;
ServerEndpoint& ServerEndpoint::operator=(ServerEndpoint&&) noexcept = default;

bool ServerEndpoint::serving() const { return impl_->serving; }
Reason ServerEndpoint::init_reason() const { return impl_->init_reason; }
const crypto::Digest& ServerEndpoint::root() const { return impl_->root; }
psi::Binning ServerEndpoint::binning() const { return impl_->binning; }

wire::Handler ServerEndpoint::handler() {
  Actor* a = impl_->actor.get();
  return [a](const wire::Frame& f) { return a->handle(f); };
}

ServerEndpoint ServerEndpoint::pir(SessionConfig cfg, const crypto::SecretKey& endorsement_sk,
                                   std::vector<Bytes> entries) {
  cfg.app = App::Pir;
  cfg.attack = AttackBehavior::None;
  cfg.db_entries = entries.size();
  Rng master = Rng::from_seed(cfg.seed);
  Rng server_rng = master.fork("server");
  auto impl = std::make_unique<Impl>();
  auto actor =
      std::make_unique<PirActor>(cfg, endorsement_sk, server_rng, master.fork("attack"), entries);
  impl->serving = actor->serving();
  impl->init_reason = actor->init_reason();
  impl->root = actor->published_root();
  impl->actor = std::move(actor);
  return ServerEndpoint(std::move(impl));
}

ServerEndpoint ServerEndpoint::psi(SessionConfig cfg, const crypto::SecretKey& endorsement_sk,
                                   std::vector<Bytes> items) {
  cfg.app = App::Psi;
  cfg.attack = AttackBehavior::None;
  cfg.set_size = items.size();
  Rng master = Rng::from_seed(cfg.seed);
  Rng server_rng = master.fork("server");
  auto impl = std::make_unique<Impl>();
  auto actor =
      std::make_unique<PsiActor>(cfg, endorsement_sk, server_rng, master.fork("attack"), items);
  impl->serving = actor->serving();
  impl->init_reason = actor->init_reason();
  if (actor->serving()) {
    impl->root = actor->info().root;
    impl->binning = actor->info().binning;
  }
  impl->actor = std::move(actor);
  return ServerEndpoint(std::move(impl));
}

Outcome<std::vector<Bytes>> pir_query(wire::Channel& ch, const fhe::Params& params,
                                      const scheme::TrustAnchors& anchors, Rng rng,
                                      std::size_t entry_count, std::size_t entry_size,
                                      const crypto::Digest& reference_root,
                                      std::span<const std::size_t> indices,
                                      Bytes* transcript_wire) {
  Exchange ex{ch, 0, {}};
  pir::PirClient client(params, anchors, std::move(rng), entry_size);

  wire::Hello hello{static_cast<std::uint8_t>(App::Pir), params.id(),
                    static_cast<std::uint16_t>(indices.size()),
                    client.core().public_key_bytes()};
  auto ack = ex.ask(wire::FrameType::Hello, wire::encode_hello(hello), wire::FrameType::Hello);
  if (!ack.ok()) return ack.reason();

  client.begin_batch(entry_count, reference_root);
  try {
    for (std::size_t idx : indices) {
      auto resp =
          ex.ask(wire::FrameType::Request, client.build_query(idx), wire::FrameType::Response);
      if (!resp.ok()) return resp.reason();
      client.record_response(resp.take());
    }

    const tpm::Nonce& nonce = client.nonce();
    auto tr = ex.ask(wire::FrameType::Done, Bytes(nonce.begin(), nonce.end()),
                     wire::FrameType::Transcript);
    if (!tr.ok()) return tr.reason();
    if (transcript_wire) *transcript_wire = tr.value();
    return client.finish_batch_wire(tr.value());
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
}

Outcome<std::vector<Bytes>> psi_intersect(wire::Channel& ch, const fhe::Params& params,
                                          const scheme::TrustAnchors& anchors, Rng rng,
                                          std::vector<Bytes> items, const psi::PsiServerInfo& info,
                                          Bytes* transcript_wire) {
  Exchange ex{ch, 0, {}};
  psi::PsiClient client(params, anchors, std::move(rng));

  wire::Hello hello{static_cast<std::uint8_t>(App::Psi), params.id(),
                    static_cast<std::uint16_t>(items.size()),
                    client.core().public_key_bytes()};
  auto ack = ex.ask(wire::FrameType::Hello, wire::encode_hello(hello), wire::FrameType::Hello);
  if (!ack.ok()) return ack.reason();

  client.begin(std::move(items), info);
  try {
    auto r1 = ex.ask(wire::FrameType::Request, client.oprf_request(), wire::FrameType::Response);
    if (!r1.ok()) return r1.reason();
    client.oprf_response(r1.take());

    auto r2 = ex.ask(wire::FrameType::Request, client.query_request(), wire::FrameType::Response);
    if (!r2.ok()) return r2.reason();
    client.query_response(r2.take());

    const tpm::Nonce& nonce = client.nonce();
    auto tr = ex.ask(wire::FrameType::Done, Bytes(nonce.begin(), nonce.end()),
                     wire::FrameType::Transcript);
    if (!tr.ok()) return tr.reason();
    if (transcript_wire) *transcript_wire = tr.value();
    return client.finish_wire(tr.value());
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
}

}  // namespace vfhe::harness
