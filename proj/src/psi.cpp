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

#include "vfhe/psi.hpp"

#include <memory>
#include <stdexcept>

namespace vfhe::psi {

namespace {

constexpr std::uint8_t kOprfRound = kOprfRoundTag;
constexpr std::uint8_t kQueryRound = kQueryRoundTag;

std::uint64_t first_u64(const crypto::Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = v << 8 | d.bytes[i];
  return v;
}

// Masks and bins one committed set. Fails with the out-of-band reasons the
// callers report; never partially fills.
Outcome<std::vector<std::vector<std::uint64_t>>> build_bins(const fhe::Params& p,
                                                            const Binning& binning,
                                                            const crypto::GroupScalar& key,
                                                            const std::vector<Bytes>& items) {
  std::vector<std::vector<std::uint64_t>> roots(binning.bins);
  for (const Bytes& item : items) {
    std::uint64_t y = mask_value(crypto::oprf_full(key, item), p.t);
    std::vector<std::uint64_t>& bin = roots[bin_of(item, binning.bins)];
    if (bin.size() == binning.degree) return Reason::BinOverflow;
    bin.push_back(y);
  }
  std::vector<std::vector<std::uint64_t>> polys;
  polys.reserve(binning.bins);
  for (const auto& r : roots) polys.push_back(bin_polynomial(r, binning.degree, p.t));
  return polys;
}

Outcome<Bytes> answer_oprf(const crypto::GroupScalar& key, ByteReader& r) {
  std::uint16_t count = r.u16();
  ByteWriter w(2 + 32 * count);
  w.u16(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    crypto::GroupElement e;
    auto raw = r.take_array<32>();
    std::copy(raw.begin(), raw.end(), e.bytes.begin());
    try {
      w.raw(crypto::oprf_evaluate(key, e).bytes);
    } catch (const std::invalid_argument&) {
      return Reason::ProtocolViolation;
    }
  }
  r.done();
  return w.take();
}

Outcome<Bytes> answer_query(const fhe::Params& p, const Binning& binning,
                            const std::vector<std::vector<std::uint64_t>>& polys,
                            ByteReader& r) {
  std::uint16_t count = r.u16();
  std::vector<fhe::Ciphertext> responses;
  responses.reserve(count);
  for (std::uint16_t j = 0; j < count; ++j) {
    std::uint32_t bin = r.u32();
    if (bin >= binning.bins) return Reason::MalformedMessage;
    std::uint32_t len = r.u32();
    std::vector<fhe::Ciphertext> powers = scheme::parse_ct_list(p, r.take(len));
    if (powers.size() != binning.degree) return Reason::MalformedMessage;

    const std::vector<std::uint64_t>& a = polys[bin];
    fhe::Ciphertext acc = fhe::Ciphertext::zero(p);
    for (std::size_t i = 1; i <= binning.degree; ++i) {
      if (a[i] == 0) continue;
      acc = fhe::add(p, acc, fhe::mul_plain(p, powers[i - 1], fhe::encode_scalar(p, a[i])));
    }
    acc = fhe::add_plain(p, acc, fhe::encode_scalar(p, a[0]));
    responses.push_back(std::move(acc));
  }
  r.done();
  return scheme::serialize_ct_list(responses);
}

}  // namespace

Binning default_binning(std::size_t item_count) {
  return Binning{std::max<std::size_t>(1, item_count), 8};
}

std::uint64_t mask_value(const crypto::GroupElement& e, std::uint64_t t) {
  return first_u64(crypto::sha256(e.bytes)) % (t - 1);
}

std::uint64_t padding_sentinel(std::uint64_t t) { return t - 1; }

std::size_t bin_of(ByteView item, std::size_t bins) {
  crypto::Digest d = crypto::sha256_cat({to_bytes("bin"), item});
  return static_cast<std::size_t>(first_u64(d) % bins);
}

std::vector<std::uint64_t> bin_polynomial(std::span<const std::uint64_t> roots,
                                          std::size_t degree, std::uint64_t t) {
  if (roots.size() > degree) throw std::invalid_argument("bin overflows its polynomial degree");
  std::vector<std::uint64_t> all(roots.begin(), roots.end());
  all.resize(degree, padding_sentinel(t));

  std::vector<std::uint64_t> coeffs{1};  // the empty product
  coeffs.reserve(degree + 1);
  for (std::uint64_t root : all) {
    std::vector<std::uint64_t> next(coeffs.size() + 1, 0);
    std::uint64_t neg = (t - root % t) % t;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i + 1] = (next[i + 1] + coeffs[i]) % t;
      next[i] = (next[i] + static_cast<unsigned __int128>(coeffs[i]) * neg % t) % t;
    }
    coeffs = std::move(next);
  }
  return coeffs;
}

bool item_well_formed(ByteView item) {
  return !item.empty() && item.size() <= kMaxItemBytes;
}

monitor::EnclaveImage psi_image(const fhe::Params& p, const Binning& b) {
  ByteWriter w;
  w.raw(to_bytes("psi-eval-v1"));
  w.u16(static_cast<std::uint16_t>(b.degree));
  w.u32(static_cast<std::uint32_t>(b.bins));
  w.u32(p.id());
  return monitor::EnclaveImage{w.take(), monitor::InitState{}};
}

Outcome<Bytes> PsiSession::answer(ByteView request) { return mon_->run(id_, request); }

monitor::AttestedTranscript PsiSession::finish(const tpm::Nonce& nonce) {
  return mon_->attest(id_, nonce);
}

PsiServer::PsiServer(const fhe::Params& p, scheme::Platform platform, Binning binning)
    : params_(p), platform_(std::move(platform)), binning_(binning) {
  params_.validate();
  if (binning.bins == 0 || binning.degree == 0)
    throw std::invalid_argument("binning shape must be nonzero");
}

Outcome<crypto::Digest> PsiServer::init(std::vector<Bytes> items, Rng& rng) {
  if (items.empty()) throw std::invalid_argument("server set must be nonempty");
  serving_ = false;

  for (const Bytes& item : items)
    if (!item_well_formed(item)) return Reason::WellFormednessViolation;

  // A fresh key per init also serves as the overflow retry knob: new masks,
  // new binning.
  crypto::GroupScalar key = crypto::random_scalar(rng);
  auto bins = build_bins(params_, binning_, key, items);
  if (!bins.ok()) return bins.reason();

  crypto::MerkleTree tree = crypto::MerkleTree::build(items, true, &rng);
  items_ = std::move(items);
  salts_ = tree.salts();
  key_ = key;
  root_ = tree.root();
  serving_ = true;
  return root_;
}

const crypto::Digest& PsiServer::published_root() const {
  if (!serving_) throw std::logic_error("server is not serving");
  return root_;
}

PsiServerInfo PsiServer::info() const { return PsiServerInfo{published_root(), binning_}; }

Outcome<PsiSession> PsiServer::open_session(std::optional<crypto::Digest> commitment_override) {
  if (!serving_) return Reason::Refused;

  // The enclave derives everything it serves from the snapshot it loads:
  // the transcribed root, the masked values, and the bin polynomials. A set
  // swapped in behind the published commitment shows up as a different
  // transcribed root, not as silently different answers.
  std::vector<Bytes> items = items_;
  std::vector<crypto::LeafSalt> salts = salts_;
  crypto::Digest root =
      commitment_override ? *commitment_override : crypto::merkle_root(items, &salts);
  auto polys = build_bins(params_, binning_, key_, items);
  if (!polys.ok()) return polys.reason();

  auto shared =
      std::make_shared<const std::vector<std::vector<std::uint64_t>>>(polys.take());
  monitor::EnclaveId id = platform_.monitor.create_enclave(
      psi_image(params_, binning_),
      [p = params_, binning = binning_, key = key_, shared](ByteView request) -> Outcome<Bytes> {
        try {
          ByteReader r(request);
          switch (r.u8()) {
            case kOprfRound:
              return answer_oprf(key, r);
            case kQueryRound:
              return answer_query(p, binning, *shared, r);
            default:
              return Reason::MalformedMessage;
          }
        } catch (const MalformedMessage&) {
          return Reason::MalformedMessage;
        }
      });
  platform_.monitor.commit_server_input(id, root);
  return PsiSession(platform_.monitor, id);
}

PsiClient::PsiClient(const fhe::Params& p, const scheme::TrustAnchors& anchors, Rng rng)
    : rng_(rng.fork("psi-blind")), core_(p, anchors, std::move(rng)) {}

void PsiClient::begin(std::vector<Bytes> items, const PsiServerInfo& info) {
  if (items.size() > 0xffff) throw std::invalid_argument("too many items for one session");
  items_ = std::move(items);
  info_ = info;
  monitor::EnclaveImage image = psi_image(core_.params(), info.binning);
  spec_ = scheme::VerifySpec{};
  spec_.enclave_binary_digest = image.binary_digest();
  spec_.init_digest = image.init_digest();
  spec_.commitment_root = info.root;
  spec_.nonce = core_.fresh_nonce();
  blinds_.clear();
  masked_.clear();
  response_budgets_.clear();
  stage_ = Stage::Idle;
  begun_ = true;
}

Bytes PsiClient::oprf_request() {
  if (stage_ != Stage::Idle) throw std::logic_error("oprf round already started");
  ByteWriter w(3 + 32 * items_.size());
  w.u8(kOprfRound);
  w.u16(static_cast<std::uint16_t>(items_.size()));
  blinds_.reserve(items_.size());
  for (const Bytes& item : items_) {
    crypto::Blinded b = crypto::oprf_blind(item, rng_);
    blinds_.push_back(b.blind);
    w.raw(b.element.bytes);
  }
  Bytes req = w.take();
  spec_.sent.push_back(req);
  stage_ = Stage::Blinded;
  return req;
}

void PsiClient::oprf_response(const Bytes& response) {
  if (stage_ != Stage::Blinded) throw std::logic_error("no oprf round in flight");
  ByteReader r(response);
  std::uint16_t count = r.u16();
  if (count != items_.size()) throw MalformedMessage("oprf response count mismatch");
  masked_.reserve(count);
  for (std::uint16_t j = 0; j < count; ++j) {
    crypto::GroupElement e;
    auto raw = r.take_array<32>();
    std::copy(raw.begin(), raw.end(), e.bytes.begin());
    masked_.push_back(mask_value(crypto::oprf_unblind(e, blinds_[j]), core_.params().t));
  }
  r.done();
  spec_.received.push_back(response);
  stage_ = Stage::Masked;
}

Bytes PsiClient::query_request() {
  if (stage_ != Stage::Masked) throw std::logic_error("oprf round not finished");
  const std::uint64_t t = core_.params().t;
  ByteWriter w;
  w.u8(kQueryRound);
  w.u16(static_cast<std::uint16_t>(items_.size()));
  for (std::size_t idx = 0; idx < items_.size(); ++idx) {
    const std::uint64_t y = masked_[idx];
    std::vector<std::uint64_t> powers(info_.binning.degree);
    std::uint64_t acc = 1;
    for (std::size_t i = 0; i < powers.size(); ++i) {
      acc = static_cast<unsigned __int128>(acc) * y % t;
      powers[i] = acc;
    }
    Bytes cts = core_.encrypt_request(powers);
    w.u32(static_cast<std::uint32_t>(bin_of(items_[idx], info_.binning.bins)));
    w.u32(static_cast<std::uint32_t>(cts.size()));
    w.raw(cts);
  }
  Bytes req = w.take();
  spec_.sent.push_back(req);
  stage_ = Stage::Queried;
  return req;
}

void PsiClient::query_response(Bytes response) {
  if (stage_ != Stage::Queried) throw std::logic_error("no query in flight");
  spec_.received.push_back(std::move(response));
  stage_ = Stage::Answered;
}

const tpm::Nonce& PsiClient::nonce() const {
  if (!begun_) throw std::logic_error("no session begun");
  return spec_.nonce;
}

Outcome<std::vector<Bytes>> PsiClient::finish(const monitor::AttestedTranscript& at) {
  if (stage_ != Stage::Answered) throw std::logic_error("session rounds incomplete");
  stage_ = Stage::Idle;
  auto outs = core_.verify(at, spec_);
  if (!outs.ok()) return outs.reason();
  return intersect(outs.take());
}

Outcome<std::vector<Bytes>> PsiClient::finish_wire(ByteView attested_transcript) {
  if (stage_ != Stage::Answered) throw std::logic_error("session rounds incomplete");
  stage_ = Stage::Idle;
  auto outs = core_.verify_wire(attested_transcript, spec_);
  if (!outs.ok()) return outs.reason();
  return intersect(outs.take());
}

Outcome<std::vector<Bytes>> PsiClient::intersect(std::vector<scheme::VerifiedOutput> outs) {
  // outs[0] vouches for the OPRF response; outs[1] holds the ciphertexts.
  std::vector<fhe::Ciphertext> cts;
  try {
    cts = outs.at(1).ciphertexts();
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
  if (cts.size() != items_.size()) return Reason::MalformedMessage;

  std::vector<Bytes> members;
  for (std::size_t j = 0; j < items_.size(); ++j) {
    response_budgets_.push_back(core_.response_noise_budget(outs[1], j));
    fhe::Plaintext value = core_.decrypt(outs[1], j);
    bool zero = true;
    for (std::uint64_t c : value.c) zero = zero && c == 0;
    if (zero) members.push_back(items_[j]);
  }
  return members;
}

}  // namespace vfhe::psi
