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
#include <set>

#include "vfhe/crypto.hpp"

using namespace vfhe;
using namespace vfhe::crypto;

TEST_CASE("sha256 matches the FIPS 180-4 empty-input vector") {
  CHECK(sha256({}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256(to_bytes("abc")).hex() ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256 is collision-free over a 10^4 corpus of distinct inputs") {
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(i));
    auto [it, fresh] = seen.insert(sha256(w.view()).hex());
    CHECK(fresh);
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("sha256_cat equals sha256 of the concatenation") {
  Bytes a = to_bytes("hello "), b = to_bytes("world");
  Bytes ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  CHECK(sha256_cat({ByteView(a), ByteView(b)}) == sha256(ab));
}

TEST_CASE("signatures verify, reject tampering, and are deterministic") {
  Rng rng = Rng::from_seed(7);
  SigKeyPair kp = SigKeyPair::generate(rng);
  Bytes msg = to_bytes("attested message");

  Signature sig = sign(kp.sk, msg);
  CHECK(verify(kp.pk, msg, sig));
  CHECK(sign(kp.sk, msg) == sig);

  Signature bad = sig;
  bad.bytes[5] ^= 0x01;
  CHECK_FALSE(verify(kp.pk, msg, bad));

  Bytes other = msg;
  other[0] ^= 0x01;
  CHECK_FALSE(verify(kp.pk, other, sig));

  SigKeyPair kp2 = SigKeyPair::generate(rng);
  CHECK_FALSE(verify(kp2.pk, msg, sig));
  CHECK_FALSE(std::equal(kp.pk.bytes.begin(), kp.pk.bytes.end(), kp2.pk.bytes.begin()));
}

namespace {

// Independent recursive root computation used as the oracle for MerkleTree.
Digest oracle_node(const std::vector<Digest>& level, std::size_t lo, std::size_t width) {
  if (width == 1) {
    std::uint8_t tag = 0x00;
    return sha256_cat({ByteView(&tag, 1), ByteView(level[lo].bytes)});
  }
  Digest l = oracle_node(level, lo, width / 2);
  Digest r = oracle_node(level, lo + width / 2, width / 2);
  std::uint8_t tag = 0x01;
  return sha256_cat({ByteView(&tag, 1), ByteView(l.bytes), ByteView(r.bytes)});
}

Digest oracle_root(const std::vector<Bytes>& leaves) {
  std::size_t width = 1;
  while (width < leaves.size()) width *= 2;
  std::vector<Digest> contents(width);
  for (std::size_t i = 0; i < width; ++i) {
    if (i < leaves.size()) {
      contents[i] = sha256(leaves[i]);
    } else {
      std::array<std::uint8_t, 33> pad{};
      pad[0] = 0x02;
      contents[i] = sha256(pad);
    }
  }
  return oracle_node(contents, 0, width);
}

std::vector<Bytes> numbered_leaves(int n) {
  std::vector<Bytes> leaves;
  for (int i = 0; i < n; ++i) leaves.push_back(to_bytes("leaf-" + std::to_string(i)));
  return leaves;
}

}  // namespace

TEST_CASE("merkle single-leaf root is H(0x00 || H(L))") {
  Bytes leaf = to_bytes("L");
  MerkleTree t = MerkleTree::build({leaf});
  Digest content = sha256(leaf);
  std::uint8_t tag = 0x00;
  CHECK(t.root() == sha256_cat({ByteView(&tag, 1), ByteView(content.bytes)}));
  CHECK(t.prove(0).siblings.empty());
  CHECK(merkle_verify(t.root(), leaf, t.prove(0), 1));
}

TEST_CASE("merkle roots match the independent oracle for 1..17 leaves") {
  for (int n = 1; n <= 17; ++n) {
    auto leaves = numbered_leaves(n);
    MerkleTree t = MerkleTree::build(leaves);
    CHECK(t.root() == oracle_root(leaves));
  }
}

TEST_CASE("merkle inclusion proofs verify exhaustively and reject mismatches") {
  auto leaves = numbered_leaves(8);
  MerkleTree t = MerkleTree::build(leaves);
  for (std::size_t i = 0; i < 8; ++i) {
    MerkleProof p = t.prove(i);
    CHECK(merkle_verify(t.root(), leaves[i], p, 8));
    CHECK_FALSE(merkle_verify(t.root(), to_bytes("not-a-leaf"), p, 8));
    MerkleProof wrong = p;
    wrong.index = static_cast<std::uint32_t>((i + 1) % 8);
    CHECK_FALSE(merkle_verify(t.root(), leaves[i], wrong, 8));
  }
  Digest other = sha256(to_bytes("other root"));
  CHECK_FALSE(merkle_verify(other, leaves[0], t.prove(0), 8));
}

TEST_CASE("merkle proof serialization round-trips and rejects trailing bytes") {
  auto leaves = numbered_leaves(5);
  MerkleTree t = MerkleTree::build(leaves);
  Bytes wire = t.prove(3).serialize();
  MerkleProof p = MerkleProof::parse(wire);
  CHECK(p.index == 3);
  CHECK(merkle_verify(t.root(), leaves[3], p, 5));
  wire.push_back(0x00);
  CHECK_THROWS_AS(MerkleProof::parse(wire), MalformedMessage);
}

TEST_CASE("merkle single-leaf update recomputes only the path to the root") {
  auto leaves = numbered_leaves(64);
  MerkleTree t = MerkleTree::build(leaves);
  CHECK(t.interior_recomputes() == 0);

  leaves[17] = to_bytes("replacement");
  t.update_leaf(17, leaves[17]);
  CHECK(t.interior_recomputes() == 6);  // log2(64) interior levels
  CHECK(t.root() == MerkleTree::build(leaves).root());
  CHECK(merkle_verify(t.root(), leaves[17], t.prove(17), 64));

  leaves[0] = to_bytes("again");
  t.update_leaf(0, leaves[0]);
  CHECK(t.interior_recomputes() == 12);
  CHECK(t.root() == MerkleTree::build(leaves).root());
}

TEST_CASE("merkle roots are deterministic and leaf-sensitive") {
  auto leaves = numbered_leaves(16);
  CHECK(MerkleTree::build(leaves).root() == MerkleTree::build(leaves).root());
  auto mutated = leaves;
  mutated[9][0] ^= 0x01;
  CHECK_FALSE(MerkleTree::build(leaves).root() == MerkleTree::build(mutated).root());
}

TEST_CASE("hiding commitments over equal sets differ across salt draws") {
  auto leaves = numbered_leaves(4);
  std::set<std::string> roots;
  Rng rng = Rng::from_seed(99);
  for (int i = 0; i < 100; ++i) roots.insert(MerkleTree::build(leaves, true, &rng).root().hex());
  CHECK(roots.size() == 100);

  // Same salt stream reproduces the same root; proofs need the leaf salt.
  Rng r1 = Rng::from_seed(5), r2 = Rng::from_seed(5);
  MerkleTree a = MerkleTree::build(leaves, true, &r1);
  MerkleTree b = MerkleTree::build(leaves, true, &r2);
  CHECK(a.root() == b.root());
  LeafSalt salt = a.salt(2);
  CHECK(merkle_verify(a.root(), leaves[2], a.prove(2), 4, &salt));
  CHECK_FALSE(merkle_verify(a.root(), leaves[2], a.prove(2), 4));
}

TEST_CASE("oprf blind-evaluate-unblind commutes with direct evaluation") {
  Rng rng = Rng::from_seed(123);
  for (int i = 0; i < 100; ++i) {
    GroupScalar key = random_scalar(rng);
    Bytes input = to_bytes("item-" + std::to_string(i));
    Blinded b = oprf_blind(input, rng);
    GroupElement unblinded = oprf_unblind(oprf_evaluate(key, b.element), b.blind);
    CHECK(unblinded == oprf_full(key, input));
  }
}

TEST_CASE("oprf outputs separate keys and inputs") {
  Rng rng = Rng::from_seed(321);
  GroupScalar k1 = random_scalar(rng), k2 = random_scalar(rng);
  Bytes x = to_bytes("x");
  CHECK_FALSE(oprf_full(k1, x) == oprf_full(k2, x));
  CHECK_FALSE(oprf_full(k1, x) == oprf_full(k1, to_bytes("y")));
  CHECK(oprf_full(k1, x) == oprf_full(k1, x));
}

TEST_CASE("rng streams are deterministic, forkable, and bounded") {
  Rng a = Rng::from_seed(42), b = Rng::from_seed(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::from_seed(43);
  CHECK_FALSE(Rng::from_seed(42).next_u64() == c.next_u64());

  Rng base = Rng::from_seed(1);
  Rng f1 = base.fork("client");
  Rng f2 = base.fork("server");
  CHECK_FALSE(f1.next_u64() == f2.next_u64());

  Rng d = Rng::from_seed(77);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = d.uniform_below(17);
    CHECK(v < 17);
  }
}

TEST_CASE("standalone root computation matches the tree builder") {
  Rng rng = Rng::from_seed(88);
  for (std::size_t count : {1, 2, 3, 5, 8, 16, 17}) {
    std::vector<Bytes> leaves(count);
    for (Bytes& l : leaves) {
      l.resize(1 + rng.uniform_below(40));
      rng.fill(l);
    }
    CHECK(crypto::merkle_root(leaves) == crypto::MerkleTree::build(leaves).root());

    crypto::MerkleTree hidden = crypto::MerkleTree::build(leaves, true, &rng);
    std::vector<crypto::LeafSalt> salts = hidden.salts();
    CHECK(crypto::merkle_root(leaves, &salts) == hidden.root());

    // A different salt vector gives a different root.
    salts[0][0] ^= 1;
    CHECK_FALSE(crypto::merkle_root(leaves, &salts) == hidden.root());
  }
  CHECK_THROWS_AS(crypto::merkle_root({}), std::invalid_argument);
}
