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

// Authenticated private set intersection. The server's items are masked
// through a Diffie-Hellman OPRF, binned by masked value, and each bin is
// summarized by the monic polynomial whose roots are the bin's masks. A
// client learns membership by sending encrypted powers of its own masked
// value and decrypting the homomorphic polynomial evaluation: zero means
// member. Both protocol rounds run inside one attested enclave, and the
// server's raw set is bound by a salted (hiding) commitment.

#ifndef VFHE_PSI_HPP
#define VFHE_PSI_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "vfhe/monitor.hpp"
#include "vfhe/scheme.hpp"

namespace vfhe::psi {

struct Binning {
  std::size_t bins;    // B
  std::size_t degree;  // d: max roots per bin, and the degree of every bin polynomial
};

// One bin per expected item keeps the per-init overflow probability around
// half a percent at 4096 items with degree 8; init reports BinOverflow and
// the caller retries with a wider table.
Binning default_binning(std::size_t item_count);

// Masked value of a group element: first eight bytes of its hash, reduced
// into [0, t-1). The top value t-1 never occurs and pads short bins, so
// padding roots cannot collide with any real mask.
std::uint64_t mask_value(const crypto::GroupElement& e, std::uint64_t t);
std::uint64_t padding_sentinel(std::uint64_t t);

// Bins are assigned by a hash of the raw item, not of its mask. Both sides
// can compute the bin for their own items, and a stray mask collision only
// matters if the colliding items also share a bin, which keeps the
// false-positive rate at the per-bin degree/t instead of |S|/t.
std::size_t bin_of(ByteView item, std::size_t bins);

// Coefficients a_0..a_degree of the monic product over the given roots,
// sentinel-padded to exactly `degree` factors. Fails the caller loudly if
// the roots overflow the degree.
std::vector<std::uint64_t> bin_polynomial(std::span<const std::uint64_t> roots,
                                          std::size_t degree, std::uint64_t t);

// Items are opaque byte strings; the type check the enclave applies to the
// committed set before serving anything.
constexpr std::size_t kMaxItemBytes = 256;
bool item_well_formed(ByteView item);

// First byte of every request, selecting the protocol round.
inline constexpr std::uint8_t kOprfRoundTag = 0x01;
inline constexpr std::uint8_t kQueryRoundTag = 0x02;

// The program identity both sides derive: evaluator version, binning shape,
// and parameter set.
monitor::EnclaveImage psi_image(const fhe::Params& p, const Binning& b);

// What a client must learn out-of-band: the published hiding root and the
// server's table shape.
struct PsiServerInfo {
  crypto::Digest root;
  Binning binning;
};

// One protocol session = one enclave lifetime = one quote covering both the
// OPRF round and the query round.
class PsiSession {
 public:
  Outcome<Bytes> answer(ByteView request);
  monitor::AttestedTranscript finish(const tpm::Nonce& nonce);

 private:
  friend class PsiServer;
  PsiSession(monitor::Monitor& mon, monitor::EnclaveId id) : mon_(&mon), id_(id) {}
  monitor::Monitor* mon_;
  monitor::EnclaveId id_;
};

class PsiServer {
 public:
  PsiServer(const fhe::Params& p, scheme::Platform platform, Binning binning);

  // Samples the OPRF key, masks and bins the set, and publishes the salted
  // commitment root. Refuses malformed items (WellFormednessViolation) and
  // overfull bins (BinOverflow; retry with a wider Binning).
  Outcome<crypto::Digest> init(std::vector<Bytes> items, Rng& rng);

  // `commitment_override` lets a dishonest operator transcribe an arbitrary
  // root in place of the one recomputed from the served snapshot.
  Outcome<PsiSession> open_session(std::optional<crypto::Digest> commitment_override = {});

  bool serving() const { return serving_; }
  const crypto::Digest& published_root() const;
  PsiServerInfo info() const;
  const Binning& binning() const { return binning_; }
  std::size_t item_count() const { return items_.size(); }
  scheme::Platform& platform() { return platform_; }
  // Staged set and OPRF key, reachable so tests and the attack harness can
  // model a server that departs from its commitment.
  std::vector<Bytes>& mutable_items() { return items_; }
  const crypto::GroupScalar& oprf_key() const { return key_; }

 private:
  fhe::Params params_;
  scheme::Platform platform_;
  Binning binning_;
  bool serving_ = false;
  std::vector<Bytes> items_;
  std::vector<crypto::LeafSalt> salts_;
  crypto::GroupScalar key_{};
  crypto::Digest root_{};
};

class PsiClient {
 public:
  PsiClient(const fhe::Params& p, const scheme::TrustAnchors& anchors, Rng rng);

  // Starts a session for the given items against a published server info.
  void begin(std::vector<Bytes> items, const PsiServerInfo& info);

  // Round one: blinded group elements out, evaluated elements back.
  Bytes oprf_request();
  void oprf_response(const Bytes& response);

  // Round two: per item, the bin index and encrypted powers of the mask.
  Bytes query_request();
  void query_response(Bytes response);

  const tpm::Nonce& nonce() const;

  // Verifies the whole two-round transcript, then decrypts each response;
  // zero polynomial value means the item is in the server's set.
  Outcome<std::vector<Bytes>> finish(const monitor::AttestedTranscript& at);
  Outcome<std::vector<Bytes>> finish_wire(ByteView attested_transcript);

  const std::vector<std::int64_t>& response_budgets() const { return response_budgets_; }
  scheme::Client& core() { return core_; }

 private:
  enum class Stage { Idle, Blinded, Masked, Queried, Answered };

  Outcome<std::vector<Bytes>> intersect(std::vector<scheme::VerifiedOutput> outs);

  Rng rng_;
  scheme::Client core_;
  Stage stage_ = Stage::Idle;
  bool begun_ = false;
  PsiServerInfo info_{};
  std::vector<Bytes> items_;
  std::vector<crypto::GroupScalar> blinds_;
  std::vector<std::uint64_t> masked_;
  scheme::VerifySpec spec_;
  std::vector<std::int64_t> response_budgets_;
};

}  // namespace vfhe::psi

#endif  // VFHE_PSI_HPP
