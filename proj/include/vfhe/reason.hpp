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

// Rejections are values. Anything a remote party can cause (bad signature,
// tampered transcript, malformed frame) is reported as a Reason, never as an
// exception; exceptions are reserved for local misuse.

#ifndef VFHE_REASON_HPP
#define VFHE_REASON_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <variant>

namespace vfhe {

enum class Reason : std::uint8_t {
  Accepted = 0,
  // Attestation checks, in the order verification applies them.
  UntrustedEndorsement,   // attestation key not certified by the trusted root
  BadQuote,               // quote signature, nonce, or PCR selection wrong
  MonitorMismatch,        // monitor measurements differ from the expected ones
  TranscriptMismatch,     // running digest or PCR folding does not add up
  CircuitMismatch,        // evaluated program is not the expected one
  InputMismatch,          // transcribed inputs differ from what was sent
  OutputMismatch,         // transcribed outputs differ from what was received
  CommitmentMismatch,     // server data commitment differs from the reference
  // Evaluation-side failures.
  WellFormednessViolation,  // server-side data failed the plaintext-space check
  PlaintextSpaceViolation,  // operand coefficient outside the plaintext space
  BinOverflow,              // a hash bin exceeded its capacity
  EvalAborted,              // enclave function signalled an abort
  UnknownCircuit,           // no registered program under that measurement
  DecryptionFailure,        // verified payload failed its integrity checksum
  // Transport and session plumbing.
  MalformedMessage,
  TransportError,
  Refused,            // peer refused the session
  ProtocolViolation,  // frame arrived out of order for the session state
  RebootRequired,     // measured boot attempted on a dirty platform
};

const char* to_string(Reason r);

// Minimal result type: either a value or a Reason explaining the rejection.
template <class T>
class Outcome {
 public:
  Outcome(T value) : v_(std::move(value)) {}
  Outcome(Reason r) : v_(r) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  Reason reason() const { return ok() ? Reason::Accepted : std::get<Reason>(v_); }

  T& value() {
    if (!ok()) throw std::logic_error("Outcome::value on rejection");
    return std::get<T>(v_);
  }
  const T& value() const {
    if (!ok()) throw std::logic_error("Outcome::value on rejection");
    return std::get<T>(v_);
  }
  // Moves the value out; for move-only payloads.
  T take() {
    if (!ok()) throw std::logic_error("Outcome::take on rejection");
    return std::move(std::get<T>(v_));
  }

 private:
  std::variant<T, Reason> v_;
};

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::Accepted: return "Accepted";
    case Reason::UntrustedEndorsement: return "UntrustedEndorsement";
    case Reason::BadQuote: return "BadQuote";
    case Reason::MonitorMismatch: return "MonitorMismatch";
    case Reason::TranscriptMismatch: return "TranscriptMismatch";
    case Reason::CircuitMismatch: return "CircuitMismatch";
    case Reason::InputMismatch: return "InputMismatch";
    case Reason::OutputMismatch: return "OutputMismatch";
    case Reason::CommitmentMismatch: return "CommitmentMismatch";
    case Reason::WellFormednessViolation: return "WellFormednessViolation";
    case Reason::PlaintextSpaceViolation: return "PlaintextSpaceViolation";
    case Reason::BinOverflow: return "BinOverflow";
    case Reason::EvalAborted: return "EvalAborted";
    case Reason::UnknownCircuit: return "UnknownCircuit";
    case Reason::DecryptionFailure: return "DecryptionFailure";
    case Reason::MalformedMessage: return "MalformedMessage";
    case Reason::TransportError: return "TransportError";
    case Reason::Refused: return "Refused";
    case Reason::ProtocolViolation: return "ProtocolViolation";
    case Reason::RebootRequired: return "RebootRequired";
  }
  return "Unknown";
}

}  // namespace vfhe

#endif  // VFHE_REASON_HPP
