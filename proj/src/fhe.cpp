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

#include "vfhe/fhe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "vfhe/crypto.hpp"

namespace vfhe::fhe {

namespace {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

inline u64 add_mod(u64 a, u64 b, u64 q) {
  u64 s = a + b;  // q < 2^62, no overflow
  return s >= q ? s - q : s;
}

inline u64 sub_mod(u64 a, u64 b, u64 q) { return a >= b ? a - b : a + q - b; }

inline u64 neg_mod(u64 a, u64 q) { return a == 0 ? 0 : q - a; }

// Signed error value into [0, q).
inline u64 lift(i64 e, u64 q) { return e >= 0 ? static_cast<u64>(e) : q - static_cast<u64>(-e); }

// --- samplers ---------------------------------------------------------------

Poly sample_uniform(const Params& p, Rng& rng) {
  Poly out;
  out.c.resize(p.n);
  // q is a 52-bit modulus in every profile; mask-and-reject from the next
  // power of two keeps the draw uniform.
  int bits = 64 - std::countl_zero(p.q);
  u64 mask = bits >= 64 ? ~u64{0} : (u64{1} << bits) - 1;
  for (auto& c : out.c) {
    u64 v;
    do {
      v = rng.next_u64() & mask;
    } while (v >= p.q);
    c = v;
  }
  return out;
}

struct Ternary {
  Poly poly;
  std::vector<std::uint32_t> plus, minus;
};

Ternary sample_ternary(const Params& p, Rng& rng) {
  Ternary t;
  t.poly.c.assign(p.n, 0);
  for (std::uint32_t i = 0; i < p.n; ++i) {
    std::uint8_t b;
    do {
      b = rng.next_u8();
    } while (b >= 255);  // 255 = 3 * 85, exact uniformity over {0,1,2}
    switch (b % 3) {
      case 0: break;
      case 1:
        t.poly.c[i] = 1;
        t.plus.push_back(i);
        break;
      case 2:
        t.poly.c[i] = p.q - 1;
        t.minus.push_back(i);
        break;
    }
  }
  return t;
}

// Discrete Gaussian over [-B, B], B = floor(6*sigma), by inversion of a
// precomputed cumulative table against one 64-bit draw per coefficient.
const std::vector<u64>& gaussian_cutoffs(double sigma) {
  thread_local std::map<int, std::vector<u64>> cache;
  int key = static_cast<int>(std::lround(sigma * 1000));
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  int bound = static_cast<int>(6.0 * sigma);
  std::vector<long double> w(2 * bound + 1);
  long double total = 0.0L;
  for (int x = -bound; x <= bound; ++x) {
    w[x + bound] = std::exp((long double)(-(x * (long double)x) / (2.0L * sigma * sigma)));
    total += w[x + bound];
  }
  std::vector<u64> cutoffs(w.size());
  long double cum = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cum += w[i] / total;
    long double scaled = cum * 18446744073709551615.0L;
    cutoffs[i] = scaled >= 18446744073709551615.0L ? ~u64{0} : static_cast<u64>(scaled);
  }
  cutoffs.back() = ~u64{0};
  return cache.emplace(key, std::move(cutoffs)).first->second;
}

std::vector<i64> sample_gaussian(const Params& p, Rng& rng) {
  const auto& cutoffs = gaussian_cutoffs(p.sigma);
  int bound = static_cast<int>(cutoffs.size() / 2);
  std::vector<i64> out(p.n);
  for (auto& e : out) {
    u64 v = rng.next_u64();
    std::size_t i = 0;
    while (cutoffs[i] < v) ++i;
    e = static_cast<i64>(i) - bound;
  }
  return out;
}

// --- negacyclic kernels ------------------------------------------------------

bool fits_i64(const Params& p) { return p.q <= static_cast<u64>(std::numeric_limits<i64>::max()) / p.n; }

// x * ternary, where the ternary operand is given by its +1/-1 positions.
// For X^i * x over X^n + 1: coefficient k receives x[k-i] for k >= i and
// -x[n-i+k] for k < i.
Poly mul_ternary(const Params& p, const Poly& x, const std::vector<std::uint32_t>& plus,
                 const std::vector<std::uint32_t>& minus) {
  const std::size_t n = p.n;
  Poly out;
  out.c.resize(n);
  if (fits_i64(p)) {
    // |acc| <= nnz * q <= n * q < 2^63.
    std::vector<i64> acc(n, 0);
    for (std::uint32_t i : plus) {
      for (std::size_t k = i; k < n; ++k) acc[k] += static_cast<i64>(x.c[k - i]);
      for (std::size_t k = 0; k < i; ++k) acc[k] -= static_cast<i64>(x.c[n - i + k]);
    }
    for (std::uint32_t i : minus) {
      for (std::size_t k = i; k < n; ++k) acc[k] -= static_cast<i64>(x.c[k - i]);
      for (std::size_t k = 0; k < i; ++k) acc[k] += static_cast<i64>(x.c[n - i + k]);
    }
    for (std::size_t k = 0; k < n; ++k) {
      i64 r = acc[k] % static_cast<i64>(p.q);
      out.c[k] = r < 0 ? static_cast<u64>(r + static_cast<i64>(p.q)) : static_cast<u64>(r);
    }
  } else {
    // Wide-accumulator path for large rings: subtraction becomes adding q - x.
    std::vector<u128> acc(n, 0);
    for (std::uint32_t i : plus) {
      for (std::size_t k = i; k < n; ++k) acc[k] += x.c[k - i];
      for (std::size_t k = 0; k < i; ++k) acc[k] += p.q - x.c[n - i + k];
    }
    for (std::uint32_t i : minus) {
      for (std::size_t k = i; k < n; ++k) acc[k] += p.q - x.c[k - i];
      for (std::size_t k = 0; k < i; ++k) acc[k] += x.c[n - i + k];
    }
    for (std::size_t k = 0; k < n; ++k) out.c[k] = static_cast<u64>(acc[k] % p.q);
  }
  return out;
}

// x * m with m in the plaintext space; iterates only over the nonzero
// coefficients of m, so scalar plaintexts cost O(n).
Poly mul_plain_poly(const Params& p, const Poly& x, const Plaintext& m) {
  const std::size_t n = p.n;
  std::vector<u128> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    u64 w = m.c[i];
    if (w == 0) continue;
    for (std::size_t k = i; k < n; ++k) acc[k] += static_cast<u128>(x.c[k - i]) * w;
    for (std::size_t k = 0; k < i; ++k) acc[k] += static_cast<u128>(p.q - x.c[n - i + k]) * w;
  }
  Poly out;
  out.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.c[k] = static_cast<u64>(acc[k] % p.q);
  return out;
}

Poly add_poly(const Params& p, const Poly& x, const Poly& y) {
  Poly out;
  out.c.resize(p.n);
  for (std::size_t k = 0; k < p.n; ++k) out.c[k] = add_mod(x.c[k], y.c[k], p.q);
  return out;
}

Poly zero_poly(const Params& p) {
  Poly out;
  out.c.assign(p.n, 0);
  return out;
}

double fresh_noise_bound(const Params& p, std::size_t u_weight) {
  double e = static_cast<double>(p.error_bound());
  // |e0 - e*u + e1*s| <= emax * (1 + |u|_1 + |s|_1); |s|_1 is bounded by n.
  return e * (1.0 + static_cast<double>(u_weight) + static_cast<double>(p.n));
}

long double threshold_log2(const Params& p) {
  return std::log2((long double)p.q / (2.0L * (long double)p.t));
}

void require_same(const Params& p, std::uint32_t id, const char* what) {
  if (id != p.id()) throw std::invalid_argument(std::string("params mismatch in ") + what);
}

}  // namespace

Params Params::desk() { return Params{1024, 4503599626321921ull, 65537, 3.2}; }

Params Params::desk_ring(std::uint32_t n) {
  Params p = desk();
  p.n = n;
  p.validate();
  return p;
}

Params Params::tiny() { return Params{16, 1073741789ull, 17, 3.2}; }

std::uint64_t Params::error_bound() const { return static_cast<std::uint64_t>(6.0 * sigma); }

std::uint32_t Params::id() const {
  ByteWriter w;
  w.raw(to_bytes("fhe-params-v1"));
  w.u32(n);
  w.u64(q);
  w.u64(t);
  w.u32(static_cast<std::uint32_t>(std::lround(sigma * 1000)));
  crypto::Digest d = crypto::sha256(w.view());
  return static_cast<std::uint32_t>(d.bytes[0]) << 24 | static_cast<std::uint32_t>(d.bytes[1]) << 16 |
         static_cast<std::uint32_t>(d.bytes[2]) << 8 | d.bytes[3];
}

void Params::validate() const {
  if (n < 4 || (n & (n - 1)) != 0) throw std::invalid_argument("ring degree must be a power of two >= 4");
  if (q == 0 || q >= (std::uint64_t{1} << 62)) throw std::invalid_argument("modulus out of range");
  if (t < 2 || t >= q / (4 * t)) throw std::invalid_argument("plaintext modulus leaves no noise room");
  if (sigma <= 0.0 || sigma > 64.0) throw std::invalid_argument("implausible error width");
}

Bytes PublicKey::serialize() const {
  ByteWriter w(4 + 16 * b.c.size());
  w.u32(params_id);
  for (u64 c : b.c) w.u64(c);
  for (u64 c : a.c) w.u64(c);
  return w.take();
}

PublicKey PublicKey::parse(const Params& p, ByteView v) {
  ByteReader r(v);
  PublicKey pk;
  pk.params_id = r.u32();
  if (pk.params_id != p.id()) throw MalformedMessage("public key for different parameters");
  pk.b.c.resize(p.n);
  pk.a.c.resize(p.n);
  for (auto& c : pk.b.c) c = r.u64();
  for (auto& c : pk.a.c) c = r.u64();
  r.done();
  for (u64 c : pk.b.c)
    if (c >= p.q) throw MalformedMessage("public key coefficient out of range");
  for (u64 c : pk.a.c)
    if (c >= p.q) throw MalformedMessage("public key coefficient out of range");
  return pk;
}

Ciphertext Ciphertext::zero(const Params& p) {
  Ciphertext ct;
  ct.params_id = p.id();
  ct.polys = {zero_poly(p), zero_poly(p)};
  ct.noise_bound = 0.0;
  return ct;
}

Bytes Ciphertext::serialize() const {
  ByteWriter w(6 + polys.size() * polys[0].c.size() * 8);
  w.u32(params_id);
  w.u16(static_cast<std::uint16_t>(polys.size()));
  for (const Poly& poly : polys)
    for (u64 c : poly.c) w.u64(c);
  return w.take();
}

Ciphertext Ciphertext::parse(const Params& p, ByteView v) {
  ByteReader r(v);
  Ciphertext ct;
  ct.params_id = r.u32();
  if (ct.params_id != p.id()) throw MalformedMessage("ciphertext for different parameters");
  std::uint16_t k = r.u16();
  if (k < 2) throw MalformedMessage("ciphertext must have at least two components");
  if (r.remaining() != static_cast<std::size_t>(k) * p.n * 8)
    throw MalformedMessage("ciphertext length mismatch");
  ct.polys.resize(k);
  for (auto& poly : ct.polys) {
    poly.c.resize(p.n);
    for (auto& c : poly.c) {
      c = r.u64();
      if (c >= p.q) throw MalformedMessage("ciphertext coefficient out of range");
    }
  }
  r.done();
  ct.noise_bound = fresh_noise_bound(p, p.n);
  return ct;
}

KeyPair gen(const Params& p, Rng& rng) {
  p.validate();
  Ternary s = sample_ternary(p, rng);
  Poly a = sample_uniform(p, rng);
  std::vector<i64> e = sample_gaussian(p, rng);

  Poly as = mul_ternary(p, a, s.plus, s.minus);
  Poly b;
  b.c.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i)
    b.c[i] = neg_mod(add_mod(as.c[i], lift(e[i], p.q), p.q), p.q);

  KeyPair kp;
  kp.pk = PublicKey{p.id(), std::move(b), std::move(a)};
  kp.sk = SecretKey{p.id(), std::move(s.poly), std::move(s.plus), std::move(s.minus)};
  return kp;
}

Plaintext encode_vector(const Params& p, std::span<const std::uint64_t> values) {
  if (values.size() > p.n) throw std::invalid_argument("too many values for the ring degree");
  Plaintext pt;
  pt.c.assign(p.n, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= p.t) throw PlaintextSpaceViolation("encode: value outside plaintext space");
    pt.c[i] = values[i];
  }
  return pt;
}

std::vector<std::uint64_t> decode_vector(const Params& p, const Plaintext& pt) {
  if (pt.c.size() != p.n) throw std::invalid_argument("plaintext size mismatch");
  return pt.c;
}

Plaintext encode_scalar(const Params& p, std::uint64_t value) {
  return encode_vector(p, std::span<const std::uint64_t>(&value, 1));
}

Ciphertext encrypt(const Params& p, const PublicKey& pk, const Plaintext& pt, Rng& rng) {
  require_same(p, pk.params_id, "encrypt");
  if (!in_plaintext_space(p, pt)) throw PlaintextSpaceViolation("encrypt: coefficient outside plaintext space");

  Ternary u = sample_ternary(p, rng);
  std::vector<i64> e0 = sample_gaussian(p, rng);
  std::vector<i64> e1 = sample_gaussian(p, rng);

  Poly c0 = mul_ternary(p, pk.b, u.plus, u.minus);
  Poly c1 = mul_ternary(p, pk.a, u.plus, u.minus);
  const u64 delta = p.delta();
  for (std::size_t i = 0; i < p.n; ++i) {
    c0.c[i] = add_mod(c0.c[i], lift(e0[i], p.q), p.q);
    c0.c[i] = add_mod(c0.c[i], delta * pt.c[i] % p.q, p.q);
    c1.c[i] = add_mod(c1.c[i], lift(e1[i], p.q), p.q);
  }

  Ciphertext ct;
  ct.params_id = p.id();
  ct.polys = {std::move(c0), std::move(c1)};
  ct.noise_bound = fresh_noise_bound(p, u.plus.size() + u.minus.size());
  return ct;
}

namespace {

// c0 + c1*s + c2*s^2 + ...; everything past c1 goes through the generic
// product (it never occurs under the supported operator set).
Poly inner_phase(const Params& p, const SecretKey& sk, const Ciphertext& ct) {
  Poly w = add_poly(p, ct.polys[0], mul_ternary(p, ct.polys[1], sk.plus_idx, sk.minus_idx));
  if (ct.polys.size() > 2) {
    Poly s_pow = sk.s;
    for (std::size_t i = 2; i < ct.polys.size(); ++i) {
      s_pow = detail::negacyclic_mul(p, s_pow, sk.s);
      w = add_poly(p, w, detail::negacyclic_mul(p, ct.polys[i], s_pow));
    }
  }
  return w;
}

}  // namespace

Plaintext decrypt(const Params& p, const SecretKey& sk, const Ciphertext& ct) {
  require_same(p, sk.params_id, "decrypt");
  require_same(p, ct.params_id, "decrypt");
  Poly w = inner_phase(p, sk, ct);
  Plaintext pt;
  pt.c.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    u128 scaled = (static_cast<u128>(w.c[i]) * p.t + p.q / 2) / p.q;
    pt.c[i] = static_cast<u64>(scaled % p.t);
  }
  return pt;
}

Ciphertext add(const Params& p, const Ciphertext& x, const Ciphertext& y) {
  require_same(p, x.params_id, "add");
  require_same(p, y.params_id, "add");
  Ciphertext out;
  out.params_id = p.id();
  std::size_t k = std::max(x.polys.size(), y.polys.size());
  out.polys.reserve(k);
  const Poly zero = zero_poly(p);  // pads the shorter ciphertext
  for (std::size_t i = 0; i < k; ++i) {
    const Poly& xi = i < x.polys.size() ? x.polys[i] : zero;
    const Poly& yi = i < y.polys.size() ? y.polys[i] : zero;
    out.polys.push_back(add_poly(p, xi, yi));
  }
  out.noise_bound = x.noise_bound + y.noise_bound;
  return out;
}

Ciphertext add_plain(const Params& p, const Ciphertext& x, const Plaintext& m) {
  require_same(p, x.params_id, "add_plain");
  if (!in_plaintext_space(p, m)) throw PlaintextSpaceViolation("add_plain: coefficient outside plaintext space");
  Ciphertext out = x;
  const u64 delta = p.delta();
  for (std::size_t i = 0; i < p.n; ++i)
    out.polys[0].c[i] = add_mod(out.polys[0].c[i], delta * m.c[i] % p.q, p.q);
  // Scaling m by floor(q/t) instead of q/t shifts the phase by at most 1.
  out.noise_bound = x.noise_bound + 1.0;
  return out;
}

Ciphertext mul_plain(const Params& p, const Ciphertext& x, const Plaintext& m) {
  require_same(p, x.params_id, "mul_plain");
  if (!in_plaintext_space(p, m)) throw PlaintextSpaceViolation("mul_plain: coefficient outside plaintext space");
  Ciphertext out;
  out.params_id = p.id();
  out.polys.reserve(x.polys.size());
  for (const Poly& poly : x.polys) out.polys.push_back(mul_plain_poly(p, poly, m));

  double l1 = 0.0;
  for (u64 c : m.c) l1 += static_cast<double>(c);
  // v' = v*m - (q mod t)*kappa, kappa <= n*t; never let the bound shrink.
  double wrap = static_cast<double>(p.q % p.t) * static_cast<double>(p.n) * static_cast<double>(p.t);
  out.noise_bound = std::max(x.noise_bound, x.noise_bound * l1 + wrap);
  return out;
}

std::int64_t noise_budget(const Params& p, const SecretKey& sk, const Ciphertext& ct) {
  require_same(p, sk.params_id, "noise_budget");
  require_same(p, ct.params_id, "noise_budget");
  Poly w = inner_phase(p, sk, ct);
  Plaintext m = decrypt(p, sk, ct);
  const u64 delta = p.delta();
  u64 max_noise = 0;
  for (std::size_t i = 0; i < p.n; ++i) {
    u64 v = sub_mod(w.c[i], delta * m.c[i] % p.q, p.q);
    // Center into (-q/2, q/2].
    u64 mag = v > p.q / 2 ? p.q - v : v;
    max_noise = std::max(max_noise, mag);
  }
  long double used = max_noise == 0 ? 0.0L : std::log2((long double)max_noise);
  return static_cast<std::int64_t>(std::floor(threshold_log2(p) - used));
}

std::int64_t budget_estimate(const Params& p, const Ciphertext& ct) {
  require_same(p, ct.params_id, "budget_estimate");
  long double used = ct.noise_bound <= 1.0 ? 0.0L : std::log2((long double)ct.noise_bound);
  return static_cast<std::int64_t>(std::floor(threshold_log2(p) - used));
}

bool in_plaintext_space(const Params& p, const Plaintext& pt) {
  if (pt.c.size() != p.n) return false;
  return std::all_of(pt.c.begin(), pt.c.end(), [&](u64 c) { return c < p.t; });
}

namespace detail {

Poly negacyclic_mul(const Params& p, const Poly& x, const Poly& y) {
  const std::size_t n = p.n;
  std::vector<u128> acc(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    u64 yi = y.c[i];
    if (yi == 0) continue;
    u64 yr = yi % p.q;
    for (std::size_t k = i; k < n; ++k)
      acc[k] = (acc[k] + static_cast<u128>(x.c[k - i]) * yr) % p.q;
    for (std::size_t k = 0; k < i; ++k)
      acc[k] = (acc[k] + static_cast<u128>(p.q - x.c[n - i + k]) * yr) % p.q;
  }
  Poly out;
  out.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.c[k] = static_cast<u64>(acc[k]);
  return out;
}

}  // namespace detail

}  // namespace vfhe::fhe
