#include "msim/steer/protocol.hpp"

#include <json.hpp>

namespace msim::steer {

using nlohmann::json;

namespace {

json vec(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3d to_vec(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3) throw ProtocolError(std::string(field) + ": expected [x, y, z]");
  Vec3d v;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number()) throw ProtocolError(std::string(field) + ": expected numbers");
    v[a] = j[a].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + name + "'");
  return *it;
}

double number(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw ProtocolError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

std::uint64_t count(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_unsigned()) throw ProtocolError(std::string("field '") + name + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string text(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw ProtocolError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

std::vector<Vec3d> vec_list(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) throw ProtocolError(std::string("field '") + name + "' must be an array");
  std::vector<Vec3d> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(to_vec(e, name));
  return out;
}

json encode_command(const Command& command) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, cmd::Pause>) return {{"command", "pause"}};
        else if constexpr (std::is_same_v<T, cmd::Resume>) return {{"command", "resume"}};
        else if constexpr (std::is_same_v<T, cmd::Reset>) return {{"command", "reset"}};
        else if constexpr (std::is_same_v<T, cmd::SetDamping>) return {{"command", "set_damping"}, {"value", c.value}};
        else if constexpr (std::is_same_v<T, cmd::ApplyForce>)
          return {{"command", "apply_force"}, {"ids", c.ids}, {"force", vec(c.force)}};
        else if constexpr (std::is_same_v<T, cmd::ClearForces>) return {{"command", "clear_forces"}};
        else if constexpr (std::is_same_v<T, cmd::SetActuation>)
          return {{"command", "set_actuation"}, {"group", c.group}, {"amplitude", c.amplitude}, {"frequency", c.frequency}};
        else
          return {{"command", "set_integrator"}, {"integrator", std::string(to_string(c.integrator))}};
      },
      command);
}

Command decode_command(const json& j) {
  const std::string name = text(j, "command");
  if (name == "pause") return cmd::Pause{};
  if (name == "resume") return cmd::Resume{};
  if (name == "reset") return cmd::Reset{};
  if (name == "clear_forces") return cmd::ClearForces{};
  if (name == "set_damping") {
    const double value = number(j, "value");
    if (!(value >= 0 && value < 1)) throw ProtocolError("set_damping: value must be in [0, 1)");
    return cmd::SetDamping{value};
  }
  if (name == "apply_force") {
    cmd::ApplyForce c;
    const json& ids = field(j, "ids");
    if (!ids.is_array()) throw ProtocolError("apply_force: ids must be an array");
    for (const auto& id : ids) {
      if (!id.is_number_unsigned()) throw ProtocolError("apply_force: ids must be non-negative integers");
      c.ids.push_back(id.get<Index>());
    }
    c.force = to_vec(field(j, "force"), "force");
    if (!c.force.allFinite()) throw ProtocolError("apply_force: force must be finite");
    return c;
  }
  if (name == "set_actuation") {
    cmd::SetActuation c{text(j, "group"), number(j, "amplitude"), number(j, "frequency")};
    if (!(c.frequency >= 0)) throw ProtocolError("set_actuation: frequency must be >= 0");
    return c;
  }
  if (name == "set_integrator") {
    const std::string value = text(j, "integrator");
    const auto integrator = parse_integrator(value);
    if (!integrator) throw ProtocolError("set_integrator: unknown integrator '" + value + "' (euler, verlet, rk4)");
    return cmd::SetIntegrator{*integrator};
  }
  throw ProtocolError("unknown command '" + name + "'");
}

}  // namespace

std::string encode(const Message& message) {
  json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          return {{"type", "hello"}, {"version", m.version}};
        } else if constexpr (std::is_same_v<T, Snapshot>) {
          json points = json::array();
          for (const auto& p : m.positions) points.push_back({p.id, p.position.x(), p.position.y(), p.position.z()});
          return {{"type", "snapshot"},
                  {"t", m.t},
                  {"n", m.n},
                  {"positions", std::move(points)},
                  {"energies",
                   {{"epe", m.energies.elastic}, {"gpe", m.energies.gravitational}, {"ke", m.energies.kinetic},
                    {"total", m.energies.total}}},
                  {"throughput", m.throughput}};
        } else if constexpr (std::is_same_v<T, CommandMessage>) {
          json c = encode_command(m.command);
          c["type"] = "command";
          return c;
        } else if constexpr (std::is_same_v<T, ErrorMessage>) {
          return {{"type", "error"}, {"text", m.text}};
        } else if constexpr (std::is_same_v<T, FullStateRequest>) {
          return {{"type", "full_state_request"}};
        } else {
          json x = json::array(), v = json::array();
          for (const auto& p : m.positions) x.push_back(vec(p));
          for (const auto& p : m.velocities) v.push_back(vec(p));
          return {{"type", "full_state"}, {"t", m.t}, {"n", m.n}, {"positions", std::move(x)}, {"velocities", std::move(v)}};
        }
      },
      message);
  return j.dump();
}

Message decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be an object");
  if (!j.contains("type")) throw ProtocolError("message has no 'type'");
  const std::string type = text(j, "type");
  if (type == "hello") {
    const json& v = field(j, "version");
    if (!v.is_number_integer()) throw ProtocolError("field 'version' must be an integer");
    return Hello{v.get<int>()};
  }
  if (type == "snapshot") {
    Snapshot s;
    s.t = number(j, "t");
    s.n = count(j, "n");
    const json& points = field(j, "positions");
    if (!points.is_array()) throw ProtocolError("field 'positions' must be an array");
    for (const auto& p : points) {
      if (!p.is_array() || p.size() != 4 || !p[0].is_number_unsigned())
        throw ProtocolError("positions: expected [id, x, y, z]");
      s.positions.push_back({p[0].get<Index>(), to_vec(json::array({p[1], p[2], p[3]}), "positions")});
    }
    const json& e = field(j, "energies");
    s.energies = {number(e, "epe"), number(e, "gpe"), number(e, "ke"), number(e, "total")};
    s.throughput = number(j, "throughput");
    return s;
  }
  if (type == "command") return CommandMessage{decode_command(j)};
  if (type == "error") return ErrorMessage{text(j, "text")};
  if (type == "full_state_request") return FullStateRequest{};
  if (type == "full_state") {
    FullState s;
    s.t = number(j, "t");
    s.n = count(j, "n");
    s.positions = vec_list(j, "positions");
    s.velocities = vec_list(j, "velocities");
    return s;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

std::string check_hello(const Hello& hello) {
  if (hello.version == kProtocolVersion) return {};
  return "protocol version mismatch: client speaks " + std::to_string(hello.version) + ", server speaks " +
         std::to_string(kProtocolVersion);
}

std::string_view type_name(const Message& message) {
  static constexpr std::string_view names[] = {"hello", "snapshot", "command", "error", "full_state_request",
                                               "full_state"};
  return names[message.index()];
}

bool operator==(const Snapshot& a, const Snapshot& b) {
  const auto same = [](const Energies<double>& x, const Energies<double>& y) {
    return x.elastic == y.elastic && x.gravitational == y.gravitational && x.kinetic == y.kinetic &&
           x.total == y.total;
  };
  return a.t == b.t && a.n == b.n && a.positions == b.positions && same(a.energies, b.energies) &&
         a.throughput == b.throughput;
}

bool operator==(const CommandMessage& a, const CommandMessage& b) { return encode(a) == encode(b); }

}  // namespace msim::steer
