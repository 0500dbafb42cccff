#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msim/beam.hpp"

namespace msim {

/// Total-energy bookkeeping across the beam procedure.
struct EnergyReport {
  BeamMeasurement run;
  double drift = 0;        ///< max |E(t) - E(release)| / E(release) after release
  double correlation = 0;  ///< Pearson correlation of KE and EPE + GPE after release
  double tolerance = 0.01;
  bool passed = false;
};

struct EnergyValidationOptions {
  BeamSpec beam{};
  BeamExperimentOptions experiment = [] {
    BeamExperimentOptions o;
    o.trace_time = 10.0;  // 1e5 steps at dt = 1e-4
    o.record_energies = true;
    return o;
  }();
  double tolerance = 0.01;
};

EnergyReport validate_energy(const EnergyValidationOptions& options = {});

/// CSV: t,epe,gpe,ke,total with a released flag column.
void write_energy_csv(std::ostream& out, const EnergyReport& report, std::size_t every = 1);

struct NatFreqRow {
  std::string name;
  double analytic = 0;   ///< NaN when there is no closed form
  double predicted = 0;  ///< generalized eigenproblem, Hz
  double measured = 0;   ///< FFT of the simulated trace, Hz
  double error = 0;      ///< worst relative deviation among the available pairs
  double tolerance = 0;
  bool passed = false;
};

struct NatFreqValidationOptions {
  double oscillator_stiffness = 1e4;
  double oscillator_mass = 0.1;
  double oscillator_tolerance = 0.005;
  double oscillator_duration = 1.0;
  bool include_beam = true;
  BeamSpec beam{};
  BeamExperimentOptions experiment{};
  double beam_tolerance = 0.02;
};

/// One-DOF oscillator (analytic vs predicted vs measured) and the
/// small-deformation cantilever (predicted about the relaxed state vs
/// measured tip frequency).
std::vector<NatFreqRow> validate_natfreq(const NatFreqValidationOptions& options = {});

void write_natfreq_csv(std::ostream& out, const std::vector<NatFreqRow>& rows);

struct BeamValidation {
  std::vector<SweepRow> rows;
  double tolerance = 0;
  bool passed = false;
};

struct BeamValidationOptions {
  BeamSpec base{};
  std::vector<double> scales{1.0, 1.25, 1.5, 2.0};
  BeamExperimentOptions experiment{};
  double length_tolerance = 0.10;
  double height_tolerance = 0.10;
  double width_tolerance = 0.15;
};

/// Defaults used by `validate beam`: a 10 s trace window for every axis, and
/// a doubled base length for the height sweep so the deepest section stays
/// slender.
BeamValidationOptions beam_validation_defaults(SweepAxis axis);

/// Sweep along one axis and check the normalized table against the
/// corresponding tolerance.
BeamValidation validate_beam(SweepAxis axis, const BeamValidationOptions& options = {});

/// Pearson correlation; 0 if either series is constant.
double correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace msim
