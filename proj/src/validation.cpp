#include "msim/validation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "msim/modal.hpp"
#include "msim/signal.hpp"
#include "msim/simulate.hpp"

namespace msim {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0;
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < n; ++k) ma += a[k], mb += b[k];
  ma /= double(n);
  mb /= double(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0;
}

EnergyReport validate_energy(const EnergyValidationOptions& options) {
  EnergyValidationOptions o = options;
  o.experiment.record_energies = true;
  EnergyReport report;
  report.tolerance = o.tolerance;
  report.run = run_beam_experiment(o.beam, {}, o.experiment);
  const auto& times = report.run.times;
  std::size_t first = 0;
  while (first < times.size() && times[first] < report.run.release_time) ++first;
  const double e0 = report.run.energies.at(first).total;
  std::vector<double> kinetic, potential;
  for (std::size_t k = first; k < times.size(); ++k) {
    const auto& e = report.run.energies[k];
    report.drift = std::max(report.drift, std::abs(e.total - e0) / std::abs(e0));
    kinetic.push_back(e.kinetic);
    potential.push_back(e.elastic + e.gravitational);
  }
  report.correlation = correlation(kinetic, potential);
  report.passed = report.drift < report.tolerance && report.correlation < 0;
  return report;
}

void write_energy_csv(std::ostream& out, const EnergyReport& report, std::size_t every) {
  out.precision(12);
  out << "t,epe,gpe,ke,total,released\n";
  const auto& r = report.run;
  for (std::size_t k = 0; k < r.times.size(); k += std::max<std::size_t>(every, 1)) {
    const auto& e = r.energies[k];
    out << r.times[k] << ',' << e.elastic << ',' << e.gravitational << ',' << e.kinetic << ',' << e.total << ','
        << (r.times[k] >= r.release_time ? 1 : 0) << '\n';
  }
}

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

NatFreqRow oscillator_row(const NatFreqValidationOptions& o) {
  NatFreqRow row;
  row.name = "oscillator";
  row.tolerance = o.oscillator_tolerance;
  row.analytic = std::sqrt(o.oscillator_stiffness / o.oscillator_mass) / (2 * std::numbers::pi);

  SceneBuilder b;
  b.add_mass(o.oscillator_mass, Vec3d(0, 1, 0), true);
  b.add_mass(o.oscillator_mass, Vec3d(0, -1e-3, 0));
  b.connect(0, 1, o.oscillator_stiffness, 1.0);
  Scene scene = std::move(b).build();
  scene.gravity.setZero();

  // linearize about equilibrium, where only the axial DOF carries stiffness
  const ModalSystem system = assemble_modal_system(scene, {Vec3d(0, 1, 0), Vec3d::Zero()});
  row.predicted = natural_frequencies(system, 1).at(0);

  SimulateOptions sim;
  sim.duration = o.oscillator_duration;
  sim.engine = o.experiment.engine;
  sim.traces = {1};
  const auto result = simulate(scene, sim);
  row.measured = fft_dominant_frequency(TraceSeries(result.traces.times, result.traces.coordinate(0, 1)));
  row.error = std::max({rel(row.predicted, row.analytic), rel(row.measured, row.analytic),
                        rel(row.measured, row.predicted)});
  row.passed = row.error < row.tolerance;
  return row;
}

NatFreqRow beam_row(const NatFreqValidationOptions& o) {
  NatFreqRow row;
  row.name = "cantilever";
  row.tolerance = o.beam_tolerance;
  row.analytic = std::numeric_limits<double>::quiet_NaN();
  const BeamMeasurement m = run_beam_experiment(o.beam, {}, o.experiment);
  // linearize about the damped-relaxed configuration; the lowest mode that
  // moves the traced mass vertically is the one the trace sees
  const ModalSystem system = assemble_modal_system(m.scene, m.relaxed_positions);
  const ModalResult modes = solve_modes(system, 4);
  Eigen::Index traced_y = -1;
  for (Eigen::Index k = 0; k < system.size(); ++k)
    if (system.dofs[k].mass == m.traced && system.dofs[k].axis == 1) traced_y = k;
  if (traced_y < 0) throw Error("traced mass has no vertical degree of freedom");
  row.predicted = modes.frequencies.front();
  for (std::size_t k = 0; k < modes.frequencies.size(); ++k) {
    const Eigen::VectorXd phi = modes.modes.col(Eigen::Index(k));
    if (std::abs(phi[traced_y]) > 0.5 * phi.cwiseAbs().maxCoeff()) {
      row.predicted = modes.frequencies[k];
      break;
    }
  }
  row.measured = m.fft_frequency;
  row.error = rel(row.measured, row.predicted);
  row.passed = row.error < row.tolerance;
  return row;
}

}  // namespace

std::vector<NatFreqRow> validate_natfreq(const NatFreqValidationOptions& options) {
  std::vector<NatFreqRow> rows{oscillator_row(options)};
  if (options.include_beam) rows.push_back(beam_row(options));
  return rows;
}

void write_natfreq_csv(std::ostream& out, const std::vector<NatFreqRow>& rows) {
  out.precision(10);
  out << "case,analytic_hz,predicted_hz,measured_hz,error,tolerance,pass\n";
  for (const auto& r : rows) {
    out << r.name << ',';
    if (std::isfinite(r.analytic)) out << r.analytic;
    out << ',' << r.predicted << ',' << r.measured << ',' << r.error << ',' << r.tolerance << ','
        << (r.passed ? "yes" : "no") << '\n';
  }
}

BeamValidationOptions beam_validation_defaults(SweepAxis axis) {
  BeamValidationOptions o;
  o.experiment.trace_time = 10.0;
  if (axis == SweepAxis::Height) o.base.length = 2 * BeamSpec{}.length;
  return o;
}

BeamValidation validate_beam(SweepAxis axis, const BeamValidationOptions& options) {
  BeamValidation v;
  v.tolerance = axis == SweepAxis::Length ? options.length_tolerance
                : axis == SweepAxis::Height ? options.height_tolerance
                                            : options.width_tolerance;
  v.rows = run_beam_sweep(options.base, axis, options.scales, {}, options.experiment);
  v.passed = true;
  for (const auto& r : v.rows) v.passed = v.passed && r.error < v.tolerance;
  return v;
}

}  // namespace msim
