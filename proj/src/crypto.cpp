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

#include "vfhe/crypto.hpp"

#include <sodium.h>

#include <bit>
#include <stdexcept>

namespace vfhe::crypto {

namespace {

void ensure_sodium() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
}

constexpr std::uint8_t kLeafTag = 0x00;
constexpr std::uint8_t kInteriorTag = 0x01;
constexpr std::uint8_t kPaddingTag = 0x02;

Digest padding_content() {
  static const Digest d = [] {
    std::array<std::uint8_t, 33> buf{};
    buf[0] = kPaddingTag;
    return sha256(buf);
  }();
  return d;
}

Digest leaf_node(const Digest& content) {
  return sha256_cat({ByteView(&kLeafTag, 1), ByteView(content.bytes)});
}

Digest interior_node(const Digest& l, const Digest& r) {
  return sha256_cat({ByteView(&kInteriorTag, 1), ByteView(l.bytes), ByteView(r.bytes)});
}

}  // namespace

namespace {
const unsigned char* nonnull(ByteView v) {
  static const unsigned char zero = 0;
  return v.empty() ? &zero : v.data();
}
}  // namespace

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), nonnull(data), data.size());
  return d;
}

Digest sha256_cat(std::initializer_list<ByteView> parts) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (ByteView p : parts) crypto_hash_sha256_update(&st, nonnull(p), p.size());
  Digest d;
  crypto_hash_sha256_final(&st, d.bytes.data());
  return d;
}

SigKeyPair SigKeyPair::generate(Rng& rng) {
  ensure_sodium();
  std::array<std::uint8_t, 32> seed;
  rng.fill(seed);
  SigKeyPair kp;
  crypto_sign_seed_keypair(kp.pk.bytes.data(), kp.sk.bytes.data(), seed.data());
  return kp;
}

Signature sign(const SecretKey& sk, ByteView msg) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), sk.bytes.data());
  return sig;
}

bool verify(const PublicKey& pk, ByteView msg, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(), pk.bytes.data()) == 0;
}

Bytes MerkleProof::serialize() const {
  ByteWriter w(6 + siblings.size() * 32);
  w.u32(index);
  w.u16(static_cast<std::uint16_t>(siblings.size()));
  for (const Digest& d : siblings) w.raw(d.bytes);
  return w.take();
}

MerkleProof MerkleProof::parse(ByteView v) {
  ByteReader r(v);
  MerkleProof p;
  p.index = r.u32();
  std::uint16_t n = r.u16();
  p.siblings.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) p.siblings.push_back(Digest::from(r.take(32)));
  r.done();
  return p;
}

Digest MerkleTree::content_digest(std::size_t index, ByteView leaf) const {
  if (!hiding_) return sha256(leaf);
  return sha256_cat({ByteView(salts_[index]), leaf});
}

MerkleTree MerkleTree::build(const std::vector<Bytes>& leaves, bool hiding, Rng* rng) {
  if (leaves.empty()) throw std::invalid_argument("merkle: no leaves");
  if (hiding && rng == nullptr) throw std::invalid_argument("merkle: hiding mode needs randomness");

  MerkleTree t;
  t.leaf_count_ = leaves.size();
  t.width_ = std::bit_ceil(leaves.size());
  t.hiding_ = hiding;
  if (hiding) {
    t.salts_.resize(leaves.size());
    for (auto& s : t.salts_) rng->fill(s);
  }
  t.nodes_.resize(2 * t.width_);
  for (std::size_t i = 0; i < t.width_; ++i) {
    Digest content = i < leaves.size() ? t.content_digest(i, leaves[i]) : padding_content();
    t.nodes_[t.width_ + i] = leaf_node(content);
  }
  for (std::size_t i = t.width_ - 1; i >= 1; --i)
    t.nodes_[i] = interior_node(t.nodes_[2 * i], t.nodes_[2 * i + 1]);
  return t;
}

MerkleProof MerkleTree::prove(std::size_t index) const {
  if (index >= leaf_count_) throw std::out_of_range("merkle: proof index");
  MerkleProof p;
  p.index = static_cast<std::uint32_t>(index);
  for (std::size_t i = width_ + index; i > 1; i >>= 1) p.siblings.push_back(nodes_[i ^ 1]);
  return p;
}

void MerkleTree::update_leaf(std::size_t index, ByteView leaf) {
  if (index >= leaf_count_) throw std::out_of_range("merkle: update index");
  std::size_t i = width_ + index;
  nodes_[i] = leaf_node(content_digest(index, leaf));
  for (i >>= 1; i >= 1; i >>= 1) {
    nodes_[i] = interior_node(nodes_[2 * i], nodes_[2 * i + 1]);
    ++interior_recomputes_;
  }
}

const LeafSalt& MerkleTree::salt(std::size_t index) const {
  if (!hiding_) throw std::logic_error("merkle: salts exist only in hiding mode");
  return salts_.at(index);
}

bool merkle_verify(const Digest& root, ByteView leaf, const MerkleProof& proof,
                   std::size_t leaf_count, const LeafSalt* salt) {
  if (leaf_count == 0 || proof.index >= leaf_count) return false;
  std::size_t width = std::bit_ceil(leaf_count);
  if (proof.siblings.size() != static_cast<std::size_t>(std::bit_width(width) - 1)) return false;

  Digest content = salt ? sha256_cat({ByteView(*salt), leaf}) : sha256(leaf);
  Digest node = leaf_node(content);
  std::size_t idx = proof.index;
  for (const Digest& sib : proof.siblings) {
    node = (idx & 1) ? interior_node(sib, node) : interior_node(node, sib);
    idx >>= 1;
  }
  return node == root;
}

Digest merkle_root(const std::vector<Bytes>& leaves, const std::vector<LeafSalt>* salts) {
  if (leaves.empty()) throw std::invalid_argument("merkle: no leaves");
  if (salts && salts->size() != leaves.size())
    throw std::invalid_argument("merkle: salt count mismatch");

  std::size_t width = std::bit_ceil(leaves.size());
  std::vector<Digest> nodes(width);
  for (std::size_t i = 0; i < width; ++i) {
    Digest content;
    if (i >= leaves.size()) {
      content = padding_content();
    } else if (salts) {
      content = sha256_cat({ByteView((*salts)[i]), ByteView(leaves[i])});
    } else {
      content = sha256(leaves[i]);
    }
    nodes[i] = leaf_node(content);
  }
  for (std::size_t level = width; level > 1; level >>= 1)
    for (std::size_t i = 0; i < level / 2; ++i)
      nodes[i] = interior_node(nodes[2 * i], nodes[2 * i + 1]);
  return nodes[0];
}

GroupScalar random_scalar(Rng& rng) {
  ensure_sodium();
  GroupScalar s;
  std::array<std::uint8_t, 64> wide;
  for (;;) {
    rng.fill(wide);
    crypto_core_ristretto255_scalar_reduce(s.bytes.data(), wide.data());
    if (!sodium_is_zero(s.bytes.data(), s.bytes.size())) return s;
  }
}

GroupElement hash_to_group(ByteView input) {
  ensure_sodium();
  std::array<std::uint8_t, 64> h;
  crypto_hash_sha512(h.data(), input.data(), input.size());
  GroupElement e;
  crypto_core_ristretto255_from_hash(e.bytes.data(), h.data());
  return e;
}

Blinded oprf_blind(ByteView input, Rng& rng) {
  Blinded b;
  b.blind = random_scalar(rng);
  GroupElement base = hash_to_group(input);
  if (crypto_scalarmult_ristretto255(b.element.bytes.data(), b.blind.bytes.data(), base.bytes.data()) != 0)
    throw std::invalid_argument("oprf: degenerate blinded element");
  return b;
}

GroupElement oprf_evaluate(const GroupScalar& key, const GroupElement& e) {
  ensure_sodium();
  GroupElement out;
  if (crypto_scalarmult_ristretto255(out.bytes.data(), key.bytes.data(), e.bytes.data()) != 0)
    throw std::invalid_argument("oprf: degenerate evaluation");
  return out;
}

GroupElement oprf_unblind(const GroupElement& evaluated, const GroupScalar& blind) {
  ensure_sodium();
  GroupScalar inv;
  if (crypto_core_ristretto255_scalar_invert(inv.bytes.data(), blind.bytes.data()) != 0)
    throw std::invalid_argument("oprf: blind not invertible");
  GroupElement out;
  if (crypto_scalarmult_ristretto255(out.bytes.data(), inv.bytes.data(), evaluated.bytes.data()) != 0)
    throw std::invalid_argument("oprf: degenerate unblind");
  return out;
}

GroupElement oprf_full(const GroupScalar& key, ByteView input) {
  return oprf_evaluate(key, hash_to_group(input));
}

}  // namespace vfhe::crypto
