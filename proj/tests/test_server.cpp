#include <doctest.h>

#include <chrono>
#include <thread>

#include "fixtures.hpp"
#include "msim/beam.hpp"
#include "msim/signal.hpp"
#include "msim/steer/server.hpp"

using namespace msim;
using namespace msim::steer;

namespace {

Scene small_beam_scene() { return build_beam(BeamSpec{}).scene; }

/// After a pause: the first snapshot seen twice in a row.
Snapshot frozen(Client& client) {
  Snapshot previous = client.receive_as<Snapshot>();
  for (;;) {
    Snapshot s = client.receive_as<Snapshot>();
    if (s.n == previous.n) return s;
    previous = std::move(s);
  }
}

}  // namespace

TEST_CASE("hello and version refusal") {
  Server server(fixtures::cube(), {});
  server.start();
  Client client("127.0.0.1", server.port());
  CHECK(client.receive_as<Hello>().version == kProtocolVersion);
  client.send(Hello{kProtocolVersion + 1});
  const auto error = client.receive_as<ErrorMessage>();
  CHECK(error.text.find(std::to_string(kProtocolVersion)) != std::string::npos);
  CHECK(error.text.find(std::to_string(kProtocolVersion + 1)) != std::string::npos);
  CHECK_THROWS_AS(
      [&] {
        for (;;) client.receive();
      }(),
      IoError);
}

TEST_CASE("port in use is a startup error") {
  Server first(fixtures::cube(), {});
  ServerOptions o;
  o.port = first.port();
  CHECK_THROWS_AS(Server(fixtures::cube(), o), IoError);
}

TEST_CASE("malformed input reaches only its sender") {
  ServerOptions o;
  o.rate = 100;
  Server server(fixtures::cube(), o);
  server.start();
  Client bad("127.0.0.1", server.port()), good("127.0.0.1", server.port());
  bad.receive_as<Hello>();
  good.receive_as<Hello>();
  bad.send_raw(R"({"command":"pause"})");
  CHECK(bad.receive_as<ErrorMessage>().text.find("type") != std::string::npos);
  bad.send(CommandMessage{cmd::ApplyForce{{999}, Vec3d(1, 0, 0)}});
  CHECK(bad.receive_as<ErrorMessage>().text.find("999") != std::string::npos);
  // the other client only ever sees snapshots, and the simulation keeps going
  std::uint64_t last = 0;
  for (int k = 0; k < 10; ++k) {
    const Message m = good.receive();
    REQUIRE(std::holds_alternative<Snapshot>(m));
    last = std::get<Snapshot>(m).n;
  }
  CHECK(last > 0);
}

TEST_CASE("pause freezes snapshots") {
  ServerOptions o;
  o.rate = 400;
  Server server(small_beam_scene(), o);
  server.start();
  Client client("127.0.0.1", server.port());
  client.receive_as<Snapshot>();
  client.send(CommandMessage{cmd::Pause{}});
  const Snapshot first = frozen(client);
  CHECK(first.n > 0);
  for (int k = 0; k < 100; ++k) {
    const Snapshot s = client.receive_as<Snapshot>();
    CHECK(s.t == first.t);
    CHECK(s.n == first.n);
    CHECK(s.positions == first.positions);
  }
  client.send(CommandMessage{cmd::Resume{}});
  Snapshot moved = client.receive_as<Snapshot>();
  while (moved.n == first.n) moved = client.receive_as<Snapshot>();
  CHECK(moved.n > first.n);
}

TEST_CASE("two viewers receive identical snapshots") {
  ServerOptions o;
  o.rate = 200;
  o.decimate = 7;
  Server server(small_beam_scene(), o);
  server.start();
  Client a("127.0.0.1", server.port()), b("127.0.0.1", server.port());
  while (server.clients() < 2) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  a.receive_as<Hello>();
  b.receive_as<Hello>();
  const Snapshot sa = a.receive_as<Snapshot>();
  Snapshot sb = b.receive_as<Snapshot>();
  while (sb.n < sa.n) sb = b.receive_as<Snapshot>();
  CHECK(sa == sb);
  for (const auto& p : sa.positions) CHECK(p.id % 7 == 0);
  CHECK(sa.positions.size() == (small_beam_scene().masses.size() + 6) / 7);
}

TEST_CASE("snapshot energies match the full state") {
  ServerOptions o;
  o.rate = 100;
  o.engine.integrator = Integrator::Euler;
  Scene scene = fixtures::oscillator(1e4, 0.1);
  Server server(scene, o);
  server.start();
  Client client("127.0.0.1", server.port());
  client.send(CommandMessage{cmd::Pause{}});
  const Snapshot s = frozen(client);
  client.send(FullStateRequest{});
  const FullState full = client.receive_as<FullState>();
  REQUIRE(full.n == s.n);
  const auto e = energies(scene, full.positions, full.velocities, full.t, gpe_datum(scene));
  CHECK(e.total == s.energies.total);
  CHECK(e.kinetic == s.energies.kinetic);
}

TEST_CASE("heavy damping drains kinetic energy") {
  ServerOptions o;
  o.rate = 500;
  Server server(fixtures::oscillator(1e4, 0.1), o);
  server.start();
  Client client("127.0.0.1", server.port());
  // pause near a velocity peak so the reference is a sizeable KE
  Snapshot before;
  do {
    client.send(CommandMessage{cmd::Resume{}});
    client.receive_as<Snapshot>();
    client.send(CommandMessage{cmd::Pause{}});
    before = frozen(client);
  } while (before.energies.kinetic < 0.5 * before.energies.total);
  client.send(CommandMessage{cmd::SetDamping{0.5}});
  client.send(CommandMessage{cmd::Resume{}});
  const double reference = before.energies.kinetic;
  double previous = reference;
  bool drained = false;
  for (int k = 0; k < 100000 && !drained; ++k) {
    const Snapshot s = client.receive_as<Snapshot>();
    if (s.n == before.n) continue;
    CHECK(s.energies.kinetic < previous);
    previous = s.energies.kinetic;
    drained = s.energies.kinetic < 1e-9 * reference;
  }
  CHECK(drained);
}

TEST_CASE("an idle client does not change the trajectory") {
  Scene scene = fixtures::block(6, 5, 4, 0.1);
  fixtures::perturb(scene, 0.01, 0.1);
  const std::uint64_t steps = 1500;
  EngineOptions eo;
  eo.mode = ExecMode::ParallelDeterministic;
  eo.threads = 4;
  Engine headless(scene, eo);
  headless.run(steps);

  ServerOptions o;
  o.engine = eo;
  o.rate = 1000;
  o.start_paused = true;
  o.max_steps = steps;
  Server server(scene, o);
  server.start();
  Client client("127.0.0.1", server.port());
  client.receive_as<Hello>();
  client.send(CommandMessage{cmd::Resume{}});
  while (client.receive_as<Snapshot>().n < steps) {
  }
  client.send(FullStateRequest{});
  const FullState full = client.receive_as<FullState>();
  REQUIRE(full.n == steps);
  CHECK(full.positions == headless.state().positions);
  CHECK(full.velocities == headless.state().velocities);
}

TEST_CASE("steered release matches the offline beam frequency") {
  const BeamSpec spec{};
  BeamExperimentOptions offline_options{};
  offline_options.trace_time = 2.0;
  const BeamMeasurement offline = run_beam_experiment(spec, {}, offline_options);

  const BeamScene beam = build_beam(spec);
  ServerOptions o;
  o.rate = 400;
  o.start_paused = true;
  Server server(beam.scene, o);
  server.start();
  Client client("127.0.0.1", server.port());
  client.receive_as<Hello>();
  client.send(CommandMessage{cmd::ApplyForce{beam.tip_layer, Vec3d(0, -offline.load_per_mass, 0)}});
  client.send(CommandMessage{cmd::SetDamping{offline_options.damping}});
  client.send(CommandMessage{cmd::Resume{}});
  Snapshot s = client.receive_as<Snapshot>();
  while (s.t < offline_options.relax_time) s = client.receive_as<Snapshot>();
  client.send(CommandMessage{cmd::ClearForces{}});
  client.send(CommandMessage{cmd::SetDamping{0}});
  // queued behind the release, so its step is the release step
  client.send(FullStateRequest{});

  std::vector<Snapshot> seen;
  std::uint64_t released = 0;
  for (;;) {
    Message m = client.receive();
    if (auto* full = std::get_if<FullState>(&m)) {
      released = full->n;
      break;
    }
    if (auto* snap = std::get_if<Snapshot>(&m)) seen.push_back(std::move(*snap));
  }
  std::vector<double> times, ys;
  auto keep = [&](const Snapshot& snap) {
    if (snap.n <= released) return true;
    if (!times.empty() && snap.t - times.front() > 2.0) return false;
    times.push_back(snap.t);
    ys.push_back(snap.positions.at(beam.traced).position.y());
    return true;
  };
  for (const auto& snap : seen) keep(snap);
  while (keep(client.receive_as<Snapshot>())) {
  }
  REQUIRE(times.size() > 50);
  const double steered = zero_cross_frequency(resample_linear(times, ys, (times.back() - times.front()) / double(2 * times.size())), beam.scene.masses[beam.traced].position.y());
  CHECK(std::abs(steered - offline.frequency) / offline.frequency < 0.05);
}
