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

#include "vfhe/wire.hpp"

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace vfhe::wire {

namespace {

bool valid_type(std::uint8_t t) {
  return t >= static_cast<std::uint8_t>(FrameType::Hello) &&
         t <= static_cast<std::uint8_t>(FrameType::Refusal);
}

// Reads exactly n bytes; false on EOF or error, including mid-message EOF.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::read(fd, buf + got, n - got);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_exact(int fd, const std::uint8_t* buf, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    ssize_t w = ::write(fd, buf + sent, n - sent);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    sent += static_cast<std::size_t>(w);
  }
  return true;
}

}  // namespace

Bytes encode(const Frame& f) {
  ByteWriter w(5 + f.payload.size());
  w.u32(static_cast<std::uint32_t>(f.payload.size() + 1));
  w.u8(static_cast<std::uint8_t>(f.type));
  w.raw(f.payload);
  return w.take();
}

Outcome<Frame> decode(ByteView wire) {
  try {
    ByteReader r(wire);
    std::uint32_t length = r.u32();
    if (length == 0 || length > kMaxFrameBytes) throw MalformedMessage("bad frame length");
    std::uint8_t type = r.u8();
    if (!valid_type(type)) throw MalformedMessage("unknown frame type");
    Bytes payload = r.take_bytes(length - 1);
    r.done();
    return Frame{static_cast<FrameType>(type), std::move(payload)};
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
}

Bytes encode_hello(const Hello& h) {
  ByteWriter w(11 + h.client_pk.size());
  w.u8(h.app);
  w.u32(h.params_id);
  w.u16(h.batch);
  w.u32(static_cast<std::uint32_t>(h.client_pk.size()));
  w.raw(h.client_pk);
  return w.take();
}

Outcome<Hello> decode_hello(ByteView payload) {
  try {
    ByteReader r(payload);
    Hello h;
    h.app = r.u8();
    h.params_id = r.u32();
    h.batch = r.u16();
    h.client_pk = r.take_bytes(r.u32());
    r.done();
    return h;
  } catch (const MalformedMessage&) {
    return Reason::MalformedMessage;
  }
}

Frame refusal(Reason r) {
  return Frame{FrameType::Refusal, Bytes{static_cast<std::uint8_t>(r)}};
}

Reason refusal_reason(ByteView payload) {
  if (payload.size() != 1 || payload[0] > static_cast<std::uint8_t>(Reason::RebootRequired) ||
      payload[0] == static_cast<std::uint8_t>(Reason::Accepted)) {
    return Reason::MalformedMessage;
  }
  return static_cast<Reason>(payload[0]);
}

Outcome<Frame> read_frame(int fd) {
  std::uint8_t head[4];
  if (!read_exact(fd, head, 4)) return Reason::TransportError;
  std::uint32_t length = 0;
  for (int i = 0; i < 4; ++i) length = length << 8 | head[i];
  if (length == 0 || length > kMaxFrameBytes) return Reason::MalformedMessage;

  Bytes body(length);
  if (!read_exact(fd, body.data(), body.size())) return Reason::TransportError;
  if (!valid_type(body[0])) return Reason::MalformedMessage;
  return Frame{static_cast<FrameType>(body[0]), Bytes(body.begin() + 1, body.end())};
}

bool write_frame(int fd, const Frame& f) {
  Bytes wire = encode(f);
  return write_exact(fd, wire.data(), wire.size());
}

TcpServer::TcpServer(Handler h, std::uint16_t port) : handler_(std::move(h)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 8) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind/listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  thread_ = std::thread([this] { serve(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  int conn = conn_fd_.exchange(-1);
  if (conn >= 0) ::shutdown(conn, SHUT_RDWR);
  if (thread_.joinable()) thread_.join();
}

void TcpServer::serve() {
  while (!stopping_) {
    int conn = ::accept(listen_fd_, nullptr, nullptr);
    if (conn < 0) break;  // listener closed
    conn_fd_ = conn;
    for (;;) {
      Outcome<Frame> in = read_frame(conn);
      if (!in.ok()) break;  // peer closed or sent garbage
      if (!write_frame(conn, handler_(in.value()))) break;
    }
    conn_fd_ = -1;
    ::close(conn);
  }
}

std::unique_ptr<TcpChannel> TcpChannel::connect(std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return nullptr;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd);
    return nullptr;
  }
  return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

Outcome<Frame> TcpChannel::round_trip(const Frame& f) {
  if (fd_ < 0 || !write_frame(fd_, f)) return Reason::TransportError;
  return read_frame(fd_);
}

}  // namespace vfhe::wire
