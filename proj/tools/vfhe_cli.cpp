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

// Operator entry points, each a thin shell over the library: endorsement
// key generation, PIR/PSI servers and clients over TCP loopback, the
// malicious-server demos, the amortization benchmark, and offline
// transcript inspection.
//
// Exit codes: 0 on honest success, 1 when a session or transcript is
// rejected (the reason is printed), 64 on usage errors.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vfhe/harness.hpp"
#include "vfhe/pir.hpp"
#include "vfhe/scheme.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRejected = 1;
constexpr int kUsage = 64;

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

using vfhe::Bytes;
using vfhe::Reason;
namespace crypto = vfhe::crypto;
namespace fhe = vfhe::fhe;
namespace harness = vfhe::harness;
namespace pir = vfhe::pir;
namespace psi = vfhe::psi;
namespace scheme = vfhe::scheme;
namespace wire = vfhe::wire;

// Operator mistakes (missing files, bad hex, bad geometry) distinct from
// protocol rejections.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, vfhe::ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw UsageError("short write to " + path);
}

// Set files: one hex-encoded item per line; blank lines ignored.
std::vector<Bytes> read_hex_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<Bytes> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    try {
      items.push_back(vfhe::from_hex(line));
    } catch (const vfhe::MalformedMessage&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": not a hex string");
    }
  }
  return items;
}

crypto::Digest parse_digest(const std::string& hex) {
  try {
    return crypto::Digest::from(vfhe::from_hex(hex));
  } catch (const vfhe::MalformedMessage&) {
    throw UsageError("expected 64 hex characters, got \"" + hex + "\"");
  }
}

std::string trimmed_line(const std::string& path) {
  Bytes raw = read_file(path);
  std::string s(raw.begin(), raw.end());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

crypto::SecretKey load_root_sk(const std::string& key_dir) {
  Bytes raw = vfhe::from_hex(trimmed_line(key_dir + "/root_sk.hex"));
  if (raw.size() != 64) throw UsageError("root_sk.hex must decode to 64 bytes");
  crypto::SecretKey sk;
  std::copy(raw.begin(), raw.end(), sk.bytes.begin());
  return sk;
}

crypto::PublicKey load_root_pk(const std::string& key_dir) {
  Bytes raw = vfhe::from_hex(trimmed_line(key_dir + "/root_pk.hex"));
  if (raw.size() != 32) throw UsageError("root_pk.hex must decode to 32 bytes");
  crypto::PublicKey pk;
  std::copy(raw.begin(), raw.end(), pk.bytes.begin());
  return pk;
}

fhe::Params params_by_name(const std::string& name) {
  if (name == "desk") return fhe::Params::desk();
  if (name == "desk-4096") return fhe::Params::desk_ring(4096);
  if (name == "desk-8192") return fhe::Params::desk_ring(8192);
  throw UsageError("unknown parameter preset " + name);
}

// Shared knobs resolved by CLI11 with flag > environment > config file.
struct Globals {
  std::uint64_t seed = 1;
  std::uint64_t latency_us = vfhe::tpm::kDefaultQuoteLatencyMicros;
  std::string params_name = "desk";
  std::string key_dir = "keys";
};

int cmd_keygen(const Globals& g, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  vfhe::Rng rng = vfhe::Rng::from_seed(g.seed);
  crypto::SigKeyPair kp = crypto::SigKeyPair::generate(rng);
  write_file(out_dir + "/root_sk.hex", vfhe::to_bytes(vfhe::to_hex(kp.sk.bytes) + "\n"));
  write_file(out_dir + "/root_pk.hex", vfhe::to_bytes(vfhe::to_hex(kp.pk.bytes) + "\n"));
  std::cout << "root_pk=" << vfhe::to_hex(kp.pk.bytes) << "\n"
            << "wrote " << out_dir << "/root_sk.hex and " << out_dir << "/root_pk.hex\n";
  return kOk;
}

// Blocks until SIGINT/SIGTERM, serving sessions one connection at a time.
int serve_until_signal(wire::TcpServer& srv) {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  srv.stop();
  return kOk;
}

int cmd_pir_serve(const Globals& g, const std::string& db_path, std::size_t n,
                  std::size_t entry_size, std::uint16_t port) {
  fhe::Params params = params_by_name(g.params_name);
  if (n == 0 || (n & (n - 1)) != 0) throw UsageError("--n must be a power of two");
  if (entry_size == 0 || entry_size % 2 != 0) throw UsageError("--entry-size must be even");
  if (pir::packed_coeff_count(entry_size) > params.n)
    throw UsageError("entries too large for the " + g.params_name + " ring");

  Bytes raw = read_file(db_path);
  if (raw.size() != n * entry_size)
    throw UsageError(db_path + " holds " + std::to_string(raw.size()) + " bytes, expected n*entry_size = " +
                     std::to_string(n * entry_size));
  std::vector<Bytes> entries(n);
  for (std::size_t i = 0; i < n; ++i)
    entries[i].assign(raw.begin() + static_cast<std::ptrdiff_t>(i * entry_size),
                      raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * entry_size));

  harness::SessionConfig cfg;
  cfg.seed = g.seed;
  cfg.latency_micros = g.latency_us;
  cfg.params = params;
  cfg.entry_size = entry_size;
  harness::ServerEndpoint ep =
      harness::ServerEndpoint::pir(cfg, load_root_sk(g.key_dir), std::move(entries));
  if (!ep.serving()) {
    std::cout << "refused: " << to_string(ep.init_reason()) << "\n";
    return kRejected;
  }

  wire::TcpServer srv(ep.handler(), port);
  std::cout << "port=" << srv.port() << "\n"
            << "root=" << ep.root().hex() << "\n"
            << "entries=" << n << "\n"
            << "entry_size=" << entry_size << "\n"
            << std::flush;
  return serve_until_signal(srv);
}

int cmd_pir_query(const Globals& g, std::uint16_t port, std::size_t n, std::size_t entry_size,
                  const std::string& root_hex, const std::vector<std::size_t>& indices,
                  const std::string& transcript_path) {
  fhe::Params params = params_by_name(g.params_name);
  for (std::size_t idx : indices)
    if (idx >= n) throw UsageError("--index " + std::to_string(idx) + " outside 0.." + std::to_string(n - 1));

  scheme::TrustAnchors anchors = scheme::default_anchors(load_root_pk(g.key_dir));
  auto ch = wire::TcpChannel::connect(port);
  if (!ch) {
    std::cout << "rejected: " << to_string(Reason::TransportError) << "\n";
    return kRejected;
  }

  Bytes transcript;
  auto got = harness::pir_query(*ch, params, anchors, vfhe::Rng::from_seed(g.seed).fork("client"),
                                n, entry_size, parse_digest(root_hex), indices, &transcript);
  if (!got.ok()) {
    std::cout << "rejected: " << to_string(got.reason()) << "\n";
    return kRejected;
  }
  if (!transcript_path.empty()) write_file(transcript_path, transcript);
  for (std::size_t i = 0; i < indices.size(); ++i)
    std::cout << indices[i] << " " << vfhe::to_hex(got.value()[i]) << "\n";
  return kOk;
}

int cmd_psi_serve(const Globals& g, const std::string& set_path, std::uint16_t port) {
  std::vector<Bytes> items = read_hex_lines(set_path);
  if (items.empty()) throw UsageError(set_path + " holds no items");

  harness::SessionConfig cfg;
  cfg.seed = g.seed;
  cfg.latency_micros = g.latency_us;
  cfg.params = params_by_name(g.params_name);
  harness::ServerEndpoint ep =
      harness::ServerEndpoint::psi(cfg, load_root_sk(g.key_dir), std::move(items));
  if (!ep.serving()) {
    std::cout << "refused: " << to_string(ep.init_reason()) << "\n";
    return kRejected;
  }

  wire::TcpServer srv(ep.handler(), port);
  std::cout << "port=" << srv.port() << "\n"
            << "root=" << ep.root().hex() << "\n"
            << "bins=" << ep.binning().bins << "\n"
            << "degree=" << ep.binning().degree << "\n"
            << std::flush;
  return serve_until_signal(srv);
}

int cmd_psi_intersect(const Globals& g, std::uint16_t port, const std::string& items_path,
                      const std::string& root_hex, std::size_t bins, std::size_t degree,
                      const std::string& transcript_path) {
  std::vector<Bytes> items = read_hex_lines(items_path);
  if (items.size() > 0xffff) throw UsageError("at most 65535 items per session");

  psi::PsiServerInfo info{parse_digest(root_hex), psi::Binning{bins, degree}};
  scheme::TrustAnchors anchors = scheme::default_anchors(load_root_pk(g.key_dir));
  auto ch = wire::TcpChannel::connect(port);
  if (!ch) {
    std::cout << "rejected: " << to_string(Reason::TransportError) << "\n";
    return kRejected;
  }

  Bytes transcript;
  auto got = harness::psi_intersect(*ch, params_by_name(g.params_name), anchors,
                                    vfhe::Rng::from_seed(g.seed).fork("client"), std::move(items),
                                    info, &transcript);
  if (!got.ok()) {
    std::cout << "rejected: " << to_string(got.reason()) << "\n";
    return kRejected;
  }
  if (!transcript_path.empty()) write_file(transcript_path, transcript);
  for (const Bytes& member : got.value()) std::cout << vfhe::to_hex(member) << "\n";
  return kOk;
}

int cmd_attack(const Globals& g, const std::string& behavior, const std::string& app_name,
               std::size_t batch, bool over_tcp) {
  auto b = harness::attack_from_string(behavior);
  auto a = harness::app_from_string(app_name);
  if (!b) throw UsageError("unknown behavior " + behavior);
  if (!a) throw UsageError("unknown app " + app_name);

  harness::SessionConfig cfg;
  cfg.app = *a;
  cfg.attack = *b;
  cfg.seed = g.seed;
  cfg.batch = batch;
  cfg.over_tcp = over_tcp;
  cfg.latency_micros = g.latency_us;
  cfg.params = params_by_name(g.params_name);
  harness::SessionResult r = harness::run_session(cfg);

  std::cout << "client_decryptions=" << r.decrypted << "\n";
  if (r.accepted) {
    std::cout << "accepted\n";
    return kOk;
  }
  std::cout << "rejected: " << to_string(r.reason) << "\n";
  return kRejected;
}

int cmd_bench(const Globals& g, const std::string& app_name, const std::vector<std::size_t>& batches,
              bool over_tcp) {
  auto a = harness::app_from_string(app_name);
  if (!a) throw UsageError("unknown app " + app_name);
  auto reports = harness::run_bench(*a, batches, g.latency_us, over_tcp);
  std::cout << harness::BenchReport::csv_header() << "\n";
  for (const auto& r : reports) std::cout << r.csv_row() << "\n";
  return kOk;
}

int cmd_verify_transcript(const Globals& g, const std::string& path, const std::string& root_key_hex) {
  crypto::PublicKey pk;
  if (!root_key_hex.empty()) {
    Bytes raw = vfhe::from_hex(root_key_hex);
    if (raw.size() != 32) throw UsageError("--root-key must decode to 32 bytes");
    std::copy(raw.begin(), raw.end(), pk.bytes.begin());
  } else {
    pk = load_root_pk(g.key_dir);
  }

  auto r = scheme::inspect_transcript(read_file(path), scheme::default_anchors(pk));
  if (!r.ok()) {
    std::cout << "rejected: " << to_string(r.reason()) << "\n";
    return kRejected;
  }
  std::cout << "valid: " << r.value().transcript.entries.size() << " entries, quote ok\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verifiable computation over attested enclaves: key setup, PIR/PSI over TCP "
               "loopback, malicious-server demos, attestation benchmarks"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value defaults for the global options");

  Globals g;
  app.add_option("--seed", g.seed, "deterministic seed for keys and randomness")
      ->envname("VFHE_SEED")
      ->capture_default_str();
  app.add_option("--latency-us", g.latency_us, "virtual TPM quote latency in microseconds")
      ->capture_default_str();
  app.add_option("--params", g.params_name, "FHE parameter preset")
      ->check(CLI::IsMember({"desk", "desk-4096", "desk-8192"}))
      ->capture_default_str();
  app.add_option("--keys", g.key_dir, "directory holding root_sk.hex / root_pk.hex")
      ->capture_default_str();

  auto* keygen = app.add_subcommand("keygen", "generate the endorsement root keypair");
  keygen->fallthrough();
  std::string keygen_out = "keys";
  keygen->add_option("--out", keygen_out, "output directory")->capture_default_str();

  auto* pir_cmd = app.add_subcommand("pir", "authenticated private information retrieval");
  pir_cmd->require_subcommand(1);
  pir_cmd->fallthrough();

  auto* pir_serve = pir_cmd->add_subcommand("serve", "serve a database of fixed-size entries");
  pir_serve->fallthrough();
  std::string pir_db;
  std::size_t pir_n = 1024, pir_entry_size = 128;
  std::uint16_t pir_serve_port = 7107;
  pir_serve->add_option("--db", pir_db, "raw concatenated fixed-size entries")
      ->required()
      ->check(CLI::ExistingFile);
  pir_serve->add_option("--n", pir_n, "entry count (power of two)")->capture_default_str();
  pir_serve->add_option("--entry-size", pir_entry_size, "bytes per entry")->capture_default_str();
  pir_serve->add_option("--port", pir_serve_port, "listening port, 0 for ephemeral")
      ->capture_default_str();

  auto* pir_query = pir_cmd->add_subcommand("query", "retrieve entries by index");
  pir_query->fallthrough();
  std::vector<std::size_t> pir_indices;
  std::string pir_root, pir_transcript;
  std::size_t pir_q_n = 1024, pir_q_entry_size = 128;
  std::uint16_t pir_query_port = 7107;
  pir_query->add_option("--index", pir_indices, "entry indices to fetch")
      ->required()
      ->delimiter(',');
  pir_query->add_option("--root", pir_root, "published commitment root (hex)")->required();
  pir_query->add_option("--n", pir_q_n, "served entry count")->capture_default_str();
  pir_query->add_option("--entry-size", pir_q_entry_size, "bytes per entry")->capture_default_str();
  pir_query->add_option("--port", pir_query_port, "server port")->capture_default_str();
  pir_query->add_option("--save-transcript", pir_transcript, "write the attested transcript here");

  auto* psi_cmd = app.add_subcommand("psi", "authenticated private set intersection");
  psi_cmd->require_subcommand(1);
  psi_cmd->fallthrough();

  auto* psi_serve = psi_cmd->add_subcommand("serve", "serve a set for intersection");
  psi_serve->fallthrough();
  std::string psi_set;
  std::uint16_t psi_serve_port = 7108;
  psi_serve->add_option("--set", psi_set, "newline-delimited hex items")
      ->required()
      ->check(CLI::ExistingFile);
  psi_serve->add_option("--port", psi_serve_port, "listening port, 0 for ephemeral")
      ->capture_default_str();

  auto* psi_int = psi_cmd->add_subcommand("intersect", "intersect local items with the served set");
  psi_int->fallthrough();
  std::string psi_items, psi_root, psi_transcript;
  std::size_t psi_bins = 0, psi_degree = 8;
  std::uint16_t psi_int_port = 7108;
  psi_int->add_option("--items", psi_items, "newline-delimited hex items")
      ->required()
      ->check(CLI::ExistingFile);
  psi_int->add_option("--root", psi_root, "published commitment root (hex)")->required();
  psi_int->add_option("--bins", psi_bins, "published bin count")->required();
  psi_int->add_option("--degree", psi_degree, "published bin polynomial degree")
      ->capture_default_str();
  psi_int->add_option("--port", psi_int_port, "server port")->capture_default_str();
  psi_int->add_option("--save-transcript", psi_transcript, "write the attested transcript here");

  auto* attack_cmd =
      app.add_subcommand("attack", "run one malicious-server behavior against a fresh client");
  attack_cmd->fallthrough();
  std::vector<std::string> behavior_names;
  for (auto b : harness::all_attacks()) behavior_names.push_back(harness::to_string(b));
  behavior_names.push_back("None");
  std::string attack_behavior, attack_app;
  std::size_t attack_batch = 2;
  bool attack_tcp = false;
  attack_cmd->add_option("behavior", attack_behavior, "server behavior")
      ->required()
      ->check(CLI::IsMember(behavior_names));
  attack_cmd->add_option("--app", attack_app, "application under attack")
      ->required()
      ->check(CLI::IsMember({"vfhe", "pir", "psi"}));
  attack_cmd->add_option("--batch", attack_batch, "queries per batch")->capture_default_str();
  attack_cmd->add_flag("--tcp", attack_tcp, "run over TCP loopback instead of in-process");

  auto* bench_cmd = app.add_subcommand("bench", "amortized attestation benchmark, CSV on stdout");
  bench_cmd->fallthrough();
  std::string bench_app = "pir";
  std::vector<std::size_t> bench_batches = {1, 2, 5, 10, 50};
  bool bench_tcp = false;
  bench_cmd->add_option("--app", bench_app, "application to drive")
      ->check(CLI::IsMember({"vfhe", "pir", "psi"}))
      ->capture_default_str();
  bench_cmd->add_option("--batches", bench_batches, "batch sizes to sweep")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_flag("--tcp", bench_tcp, "run over TCP loopback");

  auto* vt_cmd =
      app.add_subcommand("verify-transcript", "offline platform checks over a saved transcript");
  vt_cmd->fallthrough();
  std::string vt_path, vt_root_key;
  vt_cmd->add_option("file", vt_path, "serialized attested transcript")
      ->required()
      ->check(CLI::ExistingFile);
  vt_cmd->add_option("--root-key", vt_root_key, "endorsement root public key (hex)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (keygen->parsed()) return cmd_keygen(g, keygen_out);
    if (pir_serve->parsed()) return cmd_pir_serve(g, pir_db, pir_n, pir_entry_size, pir_serve_port);
    if (pir_query->parsed())
      return cmd_pir_query(g, pir_query_port, pir_q_n, pir_q_entry_size, pir_root, pir_indices,
                           pir_transcript);
    if (psi_serve->parsed()) return cmd_psi_serve(g, psi_set, psi_serve_port);
    if (psi_int->parsed())
      return cmd_psi_intersect(g, psi_int_port, psi_items, psi_root, psi_bins, psi_degree,
                               psi_transcript);
    if (attack_cmd->parsed())
      return cmd_attack(g, attack_behavior, attack_app, attack_batch, attack_tcp);
    if (bench_cmd->parsed()) return cmd_bench(g, bench_app, bench_batches, bench_tcp);
    if (vt_cmd->parsed()) return cmd_verify_transcript(g, vt_path, vt_root_key);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
