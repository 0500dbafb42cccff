#include <doctest.h>

#include <cmath>
#include <sstream>

#include "msim/beam.hpp"
#include "msim/modal.hpp"

using namespace msim;

namespace {

BeamSpec small_beam() {
  BeamSpec b;
  b.length = 0.06;
  b.height = 0.02;
  b.width = 0.02;
  return b;
}

}  // namespace

TEST_CASE("euler-bernoulli scaling") {
  const BeamSpec base;
  const double f = euler_bernoulli_frequency(base);
  BeamSpec longer = base, taller = base, wider = base;
  longer.length *= 2;
  taller.height *= 2;
  wider.width *= 2;
  CHECK(euler_bernoulli_frequency(longer) / f == 0.25);
  CHECK(euler_bernoulli_frequency(taller) / f == 2.0);
  CHECK(euler_bernoulli_frequency(wider) / f == 1.0);
  CHECK(kBeamExponents.length == -2);
  CHECK(kBeamExponents.height == 1);
  CHECK(kBeamExponents.width == 0);

  BeamSpec hand;
  hand.length = 2;
  hand.height = 0.1;
  hand.width = 0.2;
  hand.modulus = 2e9;
  hand.density = 1000;
  hand.mode_constant = 3.516;
  hand.gravity = 9.81;
  const double I = 0.1 * 0.1 * 0.1 * 0.2 / 12, A = 0.02;
  CHECK(euler_bernoulli_frequency(hand) ==
        doctest::Approx(3.516 / (2 * M_PI) * std::sqrt(2e9 * I * 9.81 / (1000 * A * 16))));

  hand.height = 0;
  CHECK_THROWS_AS(euler_bernoulli_frequency(hand), std::invalid_argument);
}

TEST_CASE("beam scene layout") {
  const BeamScene b = build_beam(small_beam());
  CHECK(b.scene.masses.size() == 7 * 3 * 3);
  int fixed = 0;
  for (const auto& m : b.scene.masses) fixed += m.fixed;
  CHECK(fixed == 9);
  CHECK(b.tip_layer.size() == 9);
  const Vec3d tip = b.scene.masses[b.traced].position;
  CHECK(tip.x() == doctest::Approx(0.06));
  CHECK(tip.y() == doctest::Approx(0.01));
  CHECK(tip.z() == doctest::Approx(0.01));
  CHECK(b.scene.gravity == Vec3d::Zero());
  CHECK(validate_scene(b.scene).empty());
}

TEST_CASE("tip load produces the requested static deflection") {
  BeamScene b = build_beam(small_beam());
  const double load = load_for_deflection(b, 1e-4);
  CHECK(load > 0);
  Engine engine(b.scene);
  engine.apply_force(b.tip_layer, Vec3d(0, -load, 0));
  engine.set_damping(5e-3);
  engine.run(20000);
  const double sag = b.scene.masses[b.traced].position.y() - engine.state().positions[b.traced].y();
  CHECK(sag == doctest::Approx(1e-4).epsilon(0.01));
}

TEST_CASE("beam experiment measures the lowest bending mode") {
  const BeamSpec beam = small_beam();
  const auto modal = natural_frequencies(assemble_modal_system(build_beam(beam).scene), 1);
  BeamExperimentOptions options;
  options.trace_time = 2.0;
  options.record_energies = true;
  const BeamMeasurement m = run_beam_experiment(beam, {}, options);
  INFO("modal " << modal[0] << " zc " << m.frequency << " fft " << m.fft_frequency);
  CHECK(m.crossings > 0);
  CHECK(std::abs(m.frequency - modal[0]) <= 1.0 / (2 * options.trace_time) + 0.02 * modal[0]);
  CHECK(m.fft_frequency == doctest::Approx(modal[0]).epsilon(0.02));
  CHECK(m.release_time == doctest::Approx(0.5));
  CHECK(m.times.size() == m.tip_y.size());
  CHECK(m.energies.size() == m.times.size());
  CHECK(m.static_deflection > 0);
  CHECK(m.static_deflection < 2e-4);
}

TEST_CASE("undamped forward euler beam diverges with a hint") {
  BeamExperimentOptions options;
  options.engine.integrator = Integrator::Euler;
  options.trace_time = 0.5;
  CHECK_THROWS_WITH_AS(run_beam_experiment(small_beam(), {}, options), doctest::Contains("reduce dt"),
                       DivergenceError);
}

TEST_CASE("sweep normalizes against the first scale") {
  BeamExperimentOptions options;
  options.relax_time = 0.1;
  options.trace_time = 0.5;
  const auto rows = run_beam_sweep(small_beam(), SweepAxis::Width, {1.0, 2.0}, {}, options);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].measured_normalized == 1.0);
  CHECK(rows[0].predicted_normalized == 1.0);
  CHECK(rows[1].predicted_normalized == 1.0);
  CHECK(rows[1].beam.width == doctest::Approx(0.04));
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  CHECK(csv.str().rfind("axis,scale,length,height,width,predicted_hz", 0) == 0);
  CHECK(csv.str().find("\nwidth,2,") != std::string::npos);
}
