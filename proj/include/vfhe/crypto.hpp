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

// Primitive layer: SHA-256 digests, Ed25519 signatures, Merkle commitments
// with inclusion proofs and O(log n) single-leaf updates, and the
// prime-order-group operations backing the OPRF. Hash, signature, and group
// arithmetic are delegated to libsodium; everything above them is local.

#ifndef VFHE_CRYPTO_HPP
#define VFHE_CRYPTO_HPP

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <vector>

#include "vfhe/bytes.hpp"
#include "vfhe/rng.hpp"

namespace vfhe::crypto {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  bool operator==(const Digest&) const = default;
  std::string hex() const { return to_hex(bytes); }
  static Digest from(ByteView v) {
    if (v.size() != 32) throw MalformedMessage("digest must be 32 bytes");
    Digest d;
    std::memcpy(d.bytes.data(), v.data(), 32);
    return d;
  }
};

Digest sha256(ByteView data);
// Digest of the concatenation, without materializing it.
Digest sha256_cat(std::initializer_list<ByteView> parts);

struct PublicKey {
  std::array<std::uint8_t, 32> bytes{};
  bool operator==(const PublicKey&) const = default;
};

struct SecretKey {
  std::array<std::uint8_t, 64> bytes{};
};

struct Signature {
  std::array<std::uint8_t, 64> bytes{};
  bool operator==(const Signature&) const = default;
};

struct SigKeyPair {
  PublicKey pk;
  SecretKey sk;
  // Deterministic keypair from the given stream.
  static SigKeyPair generate(Rng& rng);
};

Signature sign(const SecretKey& sk, ByteView msg);
bool verify(const PublicKey& pk, ByteView msg, const Signature& sig);

// --- Merkle commitments -----------------------------------------------------
//
// Node derivation, with domain separation between levels:
//   content  = H(leaf)              binding mode
//   content  = H(salt || leaf)      hiding mode (16-byte salt per leaf)
//   leaf node       = H(0x00 || content)
//   interior node   = H(0x01 || left || right)
//   padding content = H(0x02 || 0^32)   (trees are padded to a power of two)
// A tree over one leaf L therefore has root H(0x00 || H(L)).

struct MerkleProof {
  std::uint32_t index = 0;
  std::vector<Digest> siblings;

  Bytes serialize() const;
  static MerkleProof parse(ByteView v);
};

using LeafSalt = std::array<std::uint8_t, 16>;

class MerkleTree {
 public:
  // Builds over the given leaves. In hiding mode every leaf content digest
  // is salted with fresh randomness from `rng` so the root reveals nothing
  // about leaf values; `rng` must be non-null in that case.
  static MerkleTree build(const std::vector<Bytes>& leaves, bool hiding = false, Rng* rng = nullptr);

  const Digest& root() const { return nodes_[1]; }
  std::size_t leaf_count() const { return leaf_count_; }

  MerkleProof prove(std::size_t index) const;

  // Replaces one leaf and recomputes only the path to the root.
  void update_leaf(std::size_t index, ByteView leaf);
  // Number of interior-node recomputations performed by update_leaf calls;
  // grows by ceil(log2(width)) per update, not by the tree size.
  std::uint64_t interior_recomputes() const { return interior_recomputes_; }

  bool hiding() const { return hiding_; }
  const LeafSalt& salt(std::size_t index) const;
  std::vector<LeafSalt> salts() const { return salts_; }

 private:
  MerkleTree() = default;
  Digest content_digest(std::size_t index, ByteView leaf) const;

  std::size_t leaf_count_ = 0;
  std::size_t width_ = 0;  // padded power-of-two leaf slots
  bool hiding_ = false;
  std::vector<Digest> nodes_;  // heap layout, nodes_[1] is the root
  std::vector<LeafSalt> salts_;
  std::uint64_t interior_recomputes_ = 0;
};

// Recomputes the root implied by (leaf, proof) and compares. `salt` must be
// supplied when the tree was built in hiding mode.
bool merkle_verify(const Digest& root, ByteView leaf, const MerkleProof& proof,
                   std::size_t leaf_count, const LeafSalt* salt = nullptr);

// The pure function behind MerkleTree::build: the root these leaves commit
// to, salted per leaf when `salts` is given. Recomputing a published root
// from first principles goes through here.
Digest merkle_root(const std::vector<Bytes>& leaves, const std::vector<LeafSalt>* salts = nullptr);

// --- OPRF group --------------------------------------------------------------
//
// Diffie-Hellman OPRF over ristretto255: F_k(x) = H2G(x)^k, queried blind as
// (H2G(x)^r)^k and unblinded with r^-1.

struct GroupElement {
  std::array<std::uint8_t, 32> bytes{};
  bool operator==(const GroupElement&) const = default;
};

struct GroupScalar {
  std::array<std::uint8_t, 32> bytes{};
};

GroupScalar random_scalar(Rng& rng);  // uniform, nonzero
GroupElement hash_to_group(ByteView input);

struct Blinded {
  GroupElement element;
  GroupScalar blind;
};

Blinded oprf_blind(ByteView input, Rng& rng);
GroupElement oprf_evaluate(const GroupScalar& key, const GroupElement& e);
GroupElement oprf_unblind(const GroupElement& evaluated, const GroupScalar& blind);
// Direct evaluation on a raw input, used by the key holder on its own data.
GroupElement oprf_full(const GroupScalar& key, ByteView input);

}  // namespace vfhe::crypto

#endif  // VFHE_CRYPTO_HPP
