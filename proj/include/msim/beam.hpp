#pragma once

#include <string>
#include <vector>

#include "msim/energy.hpp"
#include "msim/lattice.hpp"

namespace msim {

/// Rectangular cantilever: length along x, height along y, width along z.
/// E, rho, K and g only feed the closed-form prediction.
struct BeamSpec {
  double length = 0.2;
  double height = 0.04;
  double width = 0.04;
  double modulus = 1e6;        ///< E, Pa
  double density = 100.0;      ///< rho, kg/m^3
  double mode_constant = 3.516;  ///< K for the first mode
  double gravity = 9.81;       ///< g inside the radical
  double dim = 0.01;           ///< voxel edge of the lattice

  double second_moment() const { return height * height * height * width / 12.0; }
  double area() const { return width * height; }
};

/// Throws std::invalid_argument unless L, H, W, E, rho, K, g and dim are > 0.
void check_beam(const BeamSpec& beam);

/// f = K/(2 pi) sqrt(E I g / (rho A L^4)).
double euler_bernoulli_frequency(const BeamSpec& beam);

/// Exponents of f in L, H and W implied by f ~ sqrt(H^2 / L^4).
struct BeamExponents {
  double length = -2;
  double height = 1;
  double width = 0;
};
inline constexpr BeamExponents kBeamExponents{};

/// Voxel lattice of the beam with the x = 0 layer anchored and gravity off.
struct BeamScene {
  Scene scene;
  std::vector<Index> tip_layer;  ///< masses on the free end face
  Index traced = 0;              ///< tip mass nearest the end-face centroid
};

BeamScene build_beam(const BeamSpec& beam, const Material& material = {});

struct BeamExperimentOptions {
  EngineOptions engine{};
  double tip_deflection = 1e-4;  ///< target static deflection of the traced mass, m
  double damping = 1e-4;         ///< 0.01 % per step while relaxing
  double relax_time = 0.5;       ///< s
  double trace_time = 1.0;       ///< s
  bool gravity = false;
  bool record_energies = false;
};

struct BeamMeasurement {
  double frequency = 0;      ///< zero-cross, Hz
  double fft_frequency = 0;  ///< Hz, NaN when the trace is too short or flat
  double reference = 0;      ///< tip y at t = 0, before loading
  std::size_t crossings = 0;
  double load_per_mass = 0;  ///< N, along -y on every tip-layer mass
  double static_deflection = 0;
  std::size_t masses = 0;
  std::size_t springs = 0;
  Index traced = 0;
  std::vector<double> times;  ///< whole run, from t = 0
  std::vector<double> tip_y;
  std::vector<Energies<double>> energies;  ///< per sample when requested
  double release_time = 0;
  std::vector<Vec3d> relaxed_positions;  ///< state at release, before unloading
  Scene scene;                           ///< the beam as built
};

/// Load the tip, relax with damping, release load and damping, trace the tip
/// and count crossings of its starting height. Divergence is rethrown with a
/// hint to reduce dt.
BeamMeasurement run_beam_experiment(const BeamSpec& beam, const Material& material = {},
                                    const BeamExperimentOptions& options = {});

/// Tip load per tip-layer mass that gives `deflection` at the traced mass
/// under the linearized stiffness.
double load_for_deflection(const BeamScene& beam, double deflection);

enum class SweepAxis { Length, Height, Width };
std::string to_string(SweepAxis axis);

struct SweepRow {
  SweepAxis axis;
  double scale = 1;  ///< varied dimension / base dimension
  BeamSpec beam;
  double predicted = 0;
  double measured = 0;
  double predicted_normalized = 0;
  double measured_normalized = 0;
  double error = 0;  ///< |measured_n - predicted_n| / predicted_n
  double fft_frequency = 0;
};

/// Runs the base beam and each scaled variant along `axis`; the first scale
/// is the normalization base.
std::vector<SweepRow> run_beam_sweep(const BeamSpec& base, SweepAxis axis, const std::vector<double>& scales,
                                     const Material& material = {}, const BeamExperimentOptions& options = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace msim
