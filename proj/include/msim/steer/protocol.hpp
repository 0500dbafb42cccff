#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msim/commands.hpp"
#include "msim/energy.hpp"

namespace msim::steer {

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
  using Error::Error;
};

struct Hello {
  int version = kProtocolVersion;
  bool operator==(const Hello&) const = default;
};

struct SnapshotPoint {
  Index id = 0;
  Vec3d position = Vec3d::Zero();
  bool operator==(const SnapshotPoint&) const = default;
};

struct Snapshot {
  double t = 0;
  std::uint64_t n = 0;
  std::vector<SnapshotPoint> positions;  ///< every Dth mass by id
  Energies<double> energies;
  double throughput = 0;  ///< springs * steps / s over the last interval
};

struct CommandMessage {
  Command command;
};

struct ErrorMessage {
  std::string text;
  bool operator==(const ErrorMessage&) const = default;
};

struct FullStateRequest {
  bool operator==(const FullStateRequest&) const = default;
};

struct FullState {
  double t = 0;
  std::uint64_t n = 0;
  std::vector<Vec3d> positions;
  std::vector<Vec3d> velocities;
  bool operator==(const FullState&) const = default;
};

using Message = std::variant<Hello, Snapshot, CommandMessage, ErrorMessage, FullStateRequest, FullState>;

/// One JSON object, no trailing newline. Doubles are written in shortest
/// round-trip form, so decode(encode(m)) reproduces m bit-exactly.
std::string encode(const Message& message);

/// Parses one line. Throws ProtocolError on malformed JSON, a missing or
/// unknown `type`, or ill-typed fields.
Message decode(std::string_view line);

/// Version gate for a received hello; empty when accepted, otherwise the
/// refusal text naming both versions.
std::string check_hello(const Hello& hello);

std::string_view type_name(const Message& message);

bool operator==(const Snapshot& a, const Snapshot& b);
bool operator==(const CommandMessage& a, const CommandMessage& b);

}  // namespace msim::steer
