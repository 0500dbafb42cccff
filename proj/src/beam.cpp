#include "msim/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "msim/modal.hpp"
#include "msim/signal.hpp"
#include "msim/simulate.hpp"

namespace msim {

void check_beam(const BeamSpec& b) {
  for (double v : {b.length, b.height, b.width, b.modulus, b.density, b.mode_constant, b.gravity, b.dim})
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("beam parameters must be finite and > 0");
}

double euler_bernoulli_frequency(const BeamSpec& b) {
  check_beam(b);
  const double l2 = b.length * b.length;
  return b.mode_constant / (2 * std::numbers::pi) *
         std::sqrt(b.modulus * b.second_moment() * b.gravity / (b.density * b.area() * l2 * l2));
}

BeamScene build_beam(const BeamSpec& beam, const Material& material) {
  check_beam(beam);
  LatticeSpec spec;
  spec.dim = beam.dim;
  BeamScene out;
  out.scene = build_voxel_lattice(make_box_mesh(Vec3d::Zero(), Vec3d(beam.length, beam.height, beam.width)), spec,
                                  material);
  out.scene.gravity.setZero();
  double x_max = -std::numeric_limits<double>::infinity();
  for (const auto& m : out.scene.masses) x_max = std::max(x_max, m.position.x());
  const double tol = 1e-9 * beam.dim;
  for (auto& m : out.scene.masses) {
    if (std::abs(m.position.x()) <= tol) m.fixed = true;
    if (std::abs(m.position.x() - x_max) <= tol) out.tip_layer.push_back(m.id);
  }
  const Vec3d centroid(x_max, beam.height / 2, beam.width / 2);
  double best = std::numeric_limits<double>::infinity();
  for (Index id : out.tip_layer) {
    const double d = (out.scene.masses[id].position - centroid).norm();
    if (d < best - tol) {
      best = d;
      out.traced = id;
    }
  }
  return out;
}

double load_for_deflection(const BeamScene& beam, double deflection) {
  const ModalSystem system = assemble_modal_system(beam.scene);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(system.size());
  Eigen::Index traced_y = -1;
  for (Eigen::Index k = 0; k < system.size(); ++k) {
    const Dof& dof = system.dofs[k];
    if (dof.axis != 1) continue;
    if (std::find(beam.tip_layer.begin(), beam.tip_layer.end(), dof.mass) != beam.tip_layer.end()) unit[k] = -1;
    if (dof.mass == beam.traced) traced_y = k;
  }
  if (traced_y < 0) throw Error("traced tip mass has no vertical degree of freedom");
  const double per_newton = -solve_static(system, unit)[traced_y];
  if (!(per_newton > 0)) throw Error("tip load does not deflect the traced mass");
  return deflection / per_newton;
}

BeamMeasurement run_beam_experiment(const BeamSpec& beam, const Material& material,
                                    const BeamExperimentOptions& options) {
  BeamScene setup = build_beam(beam, material);
  if (options.gravity) setup.scene.gravity = Vec3d(0, -9.81, 0);
  BeamMeasurement out;
  out.masses = setup.scene.masses.size();
  out.springs = setup.scene.springs.size();
  out.traced = setup.traced;
  out.scene = setup.scene;
  out.load_per_mass = load_for_deflection(setup, options.tip_deflection);

  Engine engine(setup.scene, options.engine);
  const double datum = gpe_datum(engine.scene());
  auto sample = [&] {
    out.times.push_back(engine.time());
    out.tip_y.push_back(engine.state().positions[setup.traced].y());
    if (options.record_energies) out.energies.push_back(energies(engine, std::optional<double>(datum)));
  };
  auto advance = [&](std::uint64_t steps) {
    try {
      for (std::uint64_t s = 0; s < steps; ++s) {
        engine.step();
        sample();
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.mass(), e.step(), "reduce dt or use a stabler integrator");
    }
  };

  // 1-3: load the tip and relax with a little damping
  engine.apply_force(setup.tip_layer, Vec3d(0, -out.load_per_mass, 0));
  engine.set_damping(options.damping);
  sample();
  advance(step_count(options.relax_time, setup.scene.dt));
  out.static_deflection = setup.scene.masses[setup.traced].position.y() - engine.state().positions[setup.traced].y();

  out.relaxed_positions = engine.state().positions;

  // 4: release load and damping, trace the tip
  engine.clear_forces();
  engine.set_damping(0);
  out.release_time = engine.time();
  out.reference = setup.scene.masses[setup.traced].position.y();
  const std::size_t first = out.times.size() - 1;
  advance(step_count(options.trace_time, setup.scene.dt));

  // 5: crossings of the tip's starting height
  const TraceSeries trace(std::vector<double>(out.times.begin() + first, out.times.end()),
                          std::vector<double>(out.tip_y.begin() + first, out.tip_y.end()));
  out.crossings = count_crossings(trace, out.reference);
  out.frequency = zero_cross_frequency(trace, out.reference);
  try {
    out.fft_frequency = fft_dominant_frequency(trace);
  } catch (const Error&) {
    out.fft_frequency = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Length: return "length";
    case SweepAxis::Height: return "height";
    case SweepAxis::Width: return "width";
  }
  return "?";
}

std::vector<SweepRow> run_beam_sweep(const BeamSpec& base, SweepAxis axis, const std::vector<double>& scales,
                                     const Material& material, const BeamExperimentOptions& options) {
  if (scales.empty()) throw std::invalid_argument("sweep needs at least one scale");
  std::vector<SweepRow> rows;
  for (double s : scales) {
    SweepRow row{axis, s, base};
    double& varied = axis == SweepAxis::Length ? row.beam.length
                     : axis == SweepAxis::Height ? row.beam.height
                                                 : row.beam.width;
    varied *= s;
    row.predicted = euler_bernoulli_frequency(row.beam);
    const BeamMeasurement m = run_beam_experiment(row.beam, material, options);
    row.measured = m.frequency;
    row.fft_frequency = m.fft_frequency;
    rows.push_back(row);
  }
  for (auto& row : rows) {
    row.predicted_normalized = row.predicted / rows.front().predicted;
    row.measured_normalized = row.measured / rows.front().measured;
    row.error = std::abs(row.measured_normalized - row.predicted_normalized) / row.predicted_normalized;
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out.precision(10);
  out << "axis,scale,length,height,width,predicted_hz,measured_hz,fft_hz,predicted_norm,measured_norm,error\n";
  for (const auto& r : rows)
    out << to_string(r.axis) << ',' << r.scale << ',' << r.beam.length << ',' << r.beam.height << ','
        << r.beam.width << ',' << r.predicted << ',' << r.measured << ',' << r.fft_frequency << ','
        << r.predicted_normalized << ',' << r.measured_normalized << ',' << r.error << '\n';
}

}  // namespace msim
