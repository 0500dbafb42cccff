#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "msim/simulate.hpp"

using namespace msim;

namespace {

Scene single_mass(double m, Vec3d x, Vec3d v, Vec3d g, double dt) {
  SceneBuilder b;
  b.add_mass(m, x);
  Scene scene = std::move(b).build();
  scene.masses[0].velocity = v;
  scene.gravity = g;
  scene.dt = dt;
  return scene;
}

/// Largest position error over [0, T] of the unit harmonic oscillator
/// x(t) = A cos t (global trajectory error).
double oscillator_error(Integrator integrator, double dt, double T) {
  const double amplitude = 1.0;
  Engine engine(fixtures::oscillator(1.0, 1.0, 10.0, amplitude, 0, dt), {integrator});
  const auto steps = static_cast<std::uint64_t>(std::llround(T / dt));
  double worst = 0;
  for (std::uint64_t k = 0; k < steps; ++k) {
    engine.step();
    worst = std::max(worst, std::abs(engine.state().positions[1].x() - amplitude * std::cos(engine.time())));
  }
  return worst;
}

}  // namespace

TEST_CASE("euler: force-free drift") {
  Engine engine(single_mass(1.0, Vec3d::Zero(), Vec3d(1, 0, 0), Vec3d::Zero(), 0.1), {Integrator::Euler});
  engine.step();
  CHECK(engine.state().positions[0].x() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(engine.state().velocities[0].x() == 1.0);
}

TEST_CASE("euler: one step of free fall") {
  Engine engine(single_mass(1.0, Vec3d::Zero(), Vec3d::Zero(), Vec3d(0, -9.81, 0), 0.01), {Integrator::Euler});
  engine.step();
  CHECK(engine.state().velocities[0].y() == doctest::Approx(-0.0981).epsilon(1e-14));
  CHECK(engine.state().positions[0].y() == 0.0);
  CHECK(engine.state().step == 1);
  CHECK(engine.time() == doctest::Approx(0.01));
}

TEST_CASE("fixed masses never move under any integrator") {
  for (auto integrator : {Integrator::Euler, Integrator::Verlet, Integrator::Rk4}) {
    Scene scene = fixtures::cube();
    fixtures::perturb(scene, 0.05, 0.3);
    scene.masses[3].fixed = true;
    scene.masses[3].external_force = Vec3d(100, 200, 300);
    const Vec3d x0 = scene.masses[3].position, v0 = scene.masses[3].velocity;
    Engine engine(scene, {integrator});
    engine.run(200);
    CHECK(engine.state().positions[3] == x0);
    CHECK(engine.state().velocities[3] == v0);
  }
}

TEST_CASE("verlet: bootstrap step") {
  Engine engine(single_mass(1.0, Vec3d::Zero(), Vec3d::Zero(), Vec3d(0, -9.81, 0), 0.01), {Integrator::Verlet});
  CHECK(engine.state().previous_positions.empty());
  engine.step();
  CHECK(engine.state().positions[0].y() == doctest::Approx(-4.905e-4).epsilon(1e-14));
  CHECK(engine.state().previous_positions.size() == 1);
}

TEST_CASE("verlet: position recurrence without force") {
  // bootstrap lands on x1 = 0.9 + 0.1 * 1 = 1.0, the recurrence then gives 2 * 1.0 - 0.9
  Engine engine(single_mass(1.0, Vec3d(0.9, 0, 0), Vec3d(1, 0, 0), Vec3d::Zero(), 0.1), {Integrator::Verlet});
  engine.step();
  CHECK(engine.state().positions[0].x() == doctest::Approx(1.0).epsilon(1e-15));
  engine.step();
  CHECK(engine.state().positions[0].x() == doctest::Approx(1.1).epsilon(1e-15));
  // central-difference velocity (x2 - x0) / (2 dt)
  CHECK(engine.state().velocities[0].x() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("verlet and rk4 are exact for constant acceleration") {
  const Vec3d x0(0.3, 10, -2), v0(1.5, 2, 0.25), g(0, -9.81, 0);
  for (auto integrator : {Integrator::Verlet, Integrator::Rk4}) {
    Engine engine(single_mass(2.0, x0, v0, g, 1e-3), {integrator});
    engine.run(1000);
    const double t = engine.time();
    const Vec3d expected = x0 + v0 * t + 0.5 * g * t * t;
    CHECK((engine.state().positions[0] - expected).norm() < 1e-12 * expected.norm() * 1000);
  }
}

TEST_CASE("rk4: force-free drift") {
  Engine engine(single_mass(1.0, Vec3d::Zero(), Vec3d(1, 0, 0), Vec3d::Zero(), 0.1), {Integrator::Rk4});
  engine.step();
  CHECK(engine.state().positions[0].x() == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("rk4: harmonic oscillator over one period") {
  const double T = 2 * std::numbers::pi;
  const double coarse = oscillator_error(Integrator::Rk4, 0.01, T);
  const double fine = oscillator_error(Integrator::Rk4, 0.005, T);
  CHECK(coarse < 1e-8);
  CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("convergence orders under dt halving") {
  const double T = 2.0;
  const double euler = oscillator_error(Integrator::Euler, 1e-3, T) / oscillator_error(Integrator::Euler, 5e-4, T);
  const double verlet = oscillator_error(Integrator::Verlet, 1e-3, T) / oscillator_error(Integrator::Verlet, 5e-4, T);
  const double rk4 = oscillator_error(Integrator::Rk4, 2e-2, T) / oscillator_error(Integrator::Rk4, 1e-2, T);
  CHECK(euler == doctest::Approx(2.0).epsilon(0.2));
  CHECK(verlet == doctest::Approx(4.0).epsilon(0.2));
  CHECK(rk4 == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("euler conserves linear momentum of an isolated lattice") {
  Scene scene = fixtures::block(3, 2, 2);
  scene.gravity.setZero();
  fixtures::perturb(scene, 0.05, 0.2, 21);
  Engine engine(scene, {Integrator::Euler});
  auto momentum = [&] {
    Vec3d p = Vec3d::Zero();
    for (std::size_t i = 0; i < scene.masses.size(); ++i) p += scene.masses[i].mass * engine.state().velocities[i];
    return p;
  };
  const Vec3d p0 = momentum();
  double scale = 0;
  for (std::size_t i = 0; i < scene.masses.size(); ++i)
    scale += scene.masses[i].mass * engine.state().velocities[i].norm();

  const auto f = engine.forces();
  Vec3d sum = Vec3d::Zero();
  double magnitude = 0;
  for (const auto& fi : f) {
    sum += fi;
    magnitude += fi.norm();
  }
  CHECK(sum.norm() <= 1e-9 * magnitude);

  engine.run(500);
  CHECK((momentum() - p0).norm() <= 1e-9 * scale);
}

TEST_CASE("damping multiplies velocity once per step") {
  Scene scene = single_mass(1.0, Vec3d::Zero(), Vec3d(2, 0, 0), Vec3d::Zero(), 0.01);
  scene.damping = 0.25;
  for (auto integrator : {Integrator::Euler, Integrator::Rk4}) {
    Engine engine(scene, {integrator});
    engine.step();
    CHECK(engine.state().velocities[0].x() == doctest::Approx(1.5));
  }
  Engine verlet(scene, {Integrator::Verlet});
  verlet.step();
  verlet.step();
  // second step drifts by the damped displacement 0.75 * 0.02
  CHECK(verlet.state().positions[0].x() == doctest::Approx(0.02 + 0.015));
}

TEST_CASE("divergence halts with the offending mass and step") {
  Scene scene = fixtures::oscillator(1e12, 1e-3, 1.0, 0.5, 0, 0.1);
  Engine engine(scene, {Integrator::Euler});
  bool thrown = false;
  try {
    engine.run(10000);
  } catch (const DivergenceError& e) {
    thrown = true;
    CHECK(e.mass() == 1);
    CHECK(e.step() == engine.state().step);
    CHECK(e.step() > 1);
  }
  CHECK(thrown);
}

TEST_CASE("invalid scenes are rejected at construction") {
  Scene scene = fixtures::cube();
  scene.dt = -1;
  CHECK_THROWS_AS(Engine(scene, EngineOptions{}), InvalidScene);
}

TEST_CASE("simulate: zero duration leaves the state untouched") {
  const Scene scene = fixtures::cube();
  const auto result = simulate(scene, SimulateOptions{0.0, {}, {0, 7}, 1});
  CHECK(result.final_state.step == 0);
  CHECK(result.traces.size() == 1);
  CHECK(result.traces.times[0] == 0.0);
  CHECK(result.traces.positions[0][1] == scene.masses[7].position);
}

TEST_CASE("simulate: free fall for one second under verlet") {
  const Scene scene = single_mass(0.1, Vec3d::Zero(), Vec3d::Zero(), Vec3d(0, -9.81, 0), 1e-4);
  const auto result = simulate(scene, SimulateOptions{1.0, {Integrator::Verlet}, {0}, 100});
  CHECK(result.final_state.step == 10000);
  CHECK(result.final_state.positions[0].y() == doctest::Approx(-4.905).epsilon(1e-3 / 4.905));
}

TEST_CASE("simulate honors pause and parameter commands") {
  const Scene scene = single_mass(1.0, Vec3d::Zero(), Vec3d(1, 0, 0), Vec3d::Zero(), 1e-3);
  CommandChannel channel;
  channel.push(cmd::SetDamping{0.5});
  // resume is already queued, so the pause drains it without blocking
  channel.push(cmd::Pause{});
  channel.push(cmd::Resume{});
  const auto result = simulate(scene, SimulateOptions{0.1, {Integrator::Euler}, {0}, 1}, &channel);
  CHECK(result.final_state.step == 100);
  CHECK(result.final_state.velocities[0].x() == doctest::Approx(std::pow(0.5, 100)));
}

TEST_CASE("actuated spring oscillates at the drive frequency") {
  SceneBuilder b;
  b.add_mass(0.1, Vec3d::Zero(), true);
  b.add_mass(0.1, Vec3d(1, 0, 0));
  b.connect(0, 1, 1e4, 1.0, "pump");
  Scene scene = std::move(b).build();
  scene.gravity.setZero();
  scene.actuation_groups.push_back({"pump", ActuationMode::ConstantExpansion, 0.1, 0, 0});
  scene.damping = 0.01;
  Engine engine(scene);
  engine.run(20000);
  CHECK(engine.state().positions[1].x() == doctest::Approx(1.1).epsilon(1e-6));
}

TEST_CASE("trace csv layout") {
  const Scene scene = fixtures::cube();
  const auto result = simulate(scene, SimulateOptions{3e-4, {}, {2}, 1});
  std::ostringstream os;
  write_trace_csv(os, result.traces);
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "t,2.x,2.y,2.z,epe,gpe,ke,total");
  int rows = 0;
  while (std::getline(in, row)) {
    ++rows;
    CHECK(std::count(row.begin(), row.end(), ',') == 7);
  }
  CHECK(rows == 4);
}
