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

// Length-prefixed framing and the two transports sessions run over: an
// in-process callback channel and a TCP loopback. Both move the same bytes;
// a session's transcript is identical either way.

#ifndef VFHE_WIRE_HPP
#define VFHE_WIRE_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "vfhe/bytes.hpp"
#include "vfhe/reason.hpp"

namespace vfhe::wire {

// Frames larger than this are rejected before allocation. Generous: the
// largest legitimate payload is a batch of big-ring ciphertexts.
inline constexpr std::size_t kMaxFrameBytes = 64ull << 20;

enum class FrameType : std::uint8_t {
  Hello = 0x01,       // client: app / params / batch / public key; server: ack
  Request = 0x02,     // application request payload
  Response = 0x03,    // application response payload
  Done = 0x04,        // client nonce; asks for the attested transcript
  Transcript = 0x05,  // serialized attested transcript
  Refusal = 0x06,     // one reason byte; terminates the session
};

struct Frame {
  FrameType type;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

// length (4, big-endian) || type (1) || payload; length = payload size + 1.
Bytes encode(const Frame& f);
// Whole-buffer decode: rejects bad lengths, unknown type tags, and trailing
// bytes.
Outcome<Frame> decode(ByteView wire);

// Client hello payload: app tag, parameter-set id, intended batch size, and
// the client's encryption key (the server needs it to encrypt nothing, but a
// dishonest one uses it to forge plausible ciphertexts; carrying it keeps
// that attack surface honest).
struct Hello {
  std::uint8_t app = 0;
  std::uint32_t params_id = 0;
  std::uint16_t batch = 0;
  Bytes client_pk;
};

Bytes encode_hello(const Hello& h);
Outcome<Hello> decode_hello(ByteView payload);

Frame refusal(Reason r);
// Reads the reason out of a refusal payload; malformed payloads collapse to
// MalformedMessage.
Reason refusal_reason(ByteView payload);

// One request/response exchange. Implementations return TransportError for
// channel failures; application-level refusals still arrive as frames.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual Outcome<Frame> round_trip(const Frame& f) = 0;
};

// The server side of a session: one frame in, one frame out.
using Handler = std::function<Frame(const Frame&)>;

class LocalChannel : public Channel {
 public:
  explicit LocalChannel(Handler h) : handler_(std::move(h)) {}
  Outcome<Frame> round_trip(const Frame& f) override { return handler_(f); }

 private:
  Handler handler_;
};

// Blocking file-descriptor I/O shared by both TCP ends; exposed for the
// framing tests. A short read or oversized length is a TransportError /
// MalformedMessage respectively.
Outcome<Frame> read_frame(int fd);
bool write_frame(int fd, const Frame& f);

// Loopback listener running the handler on its own thread. Connections are
// served one at a time: read a frame, answer it, repeat until the peer
// closes. Port 0 picks an ephemeral port, readable via port().
class TcpServer {
 public:
  TcpServer(Handler h, std::uint16_t port = 0);
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void serve();

  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<int> conn_fd_{-1};
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

class TcpChannel : public Channel {
 public:
  // Connects to 127.0.0.1:port.
  static std::unique_ptr<TcpChannel> connect(std::uint16_t port);
  ~TcpChannel() override;

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  Outcome<Frame> round_trip(const Frame& f) override;

 private:
  explicit TcpChannel(int fd) : fd_(fd) {}
  int fd_ = -1;
};

}  // namespace vfhe::wire

#endif  // VFHE_WIRE_HPP
