#pragma once

#include <algorithm>
#include <limits>
#include <optional>

#include "msim/engine.hpp"

namespace msim {

template <typename Scalar>
struct Energies {
  Scalar elastic = 0;        ///< EPE, J
  Scalar gravitational = 0;  ///< GPE, J
  Scalar kinetic = 0;        ///< KE, J
  Scalar total = 0;
};

/// Unit vector opposite to gravity, or zero when gravity is off.
template <typename Scalar>
Vec3<Scalar> up_direction(const Vec3<Scalar>& gravity) {
  const Scalar g = gravity.norm();
  return g > 0 ? Vec3<Scalar>(-gravity / g) : Vec3<Scalar>::Zero();
}

/// GPE datum: the lowest initial height over all masses.
template <typename Scalar>
Scalar gpe_datum(const BasicScene<Scalar>& scene) {
  const Vec3<Scalar> up = up_direction(scene.gravity);
  if (scene.masses.empty()) return 0;
  Scalar lowest = std::numeric_limits<Scalar>::infinity();
  for (const auto& m : scene.masses) lowest = std::min(lowest, up.dot(m.position));
  return lowest;
}

template <typename Scalar>
Energies<Scalar> energies(const BasicScene<Scalar>& scene, const std::vector<Vec3<Scalar>>& positions,
                          const std::vector<Vec3<Scalar>>& velocities, Scalar t, Scalar datum) {
  Energies<Scalar> e;
  const RestLengths<Scalar> rest(scene);
  for (const auto& s : scene.springs) {
    const Scalar stretch = (positions[s.j] - positions[s.i]).norm() - rest.at(s, scene.actuation_groups, t);
    e.elastic += Scalar(0.5) * s.stiffness * stretch * stretch;
  }
  const Scalar g = scene.gravity.norm();
  const Vec3<Scalar> up = up_direction(scene.gravity);
  for (std::size_t i = 0; i < scene.masses.size(); ++i) {
    const Scalar m = scene.masses[i].mass;
    e.gravitational += m * g * (up.dot(positions[i]) - datum);
    e.kinetic += Scalar(0.5) * m * velocities[i].squaredNorm();
  }
  e.total = e.elastic + e.gravitational + e.kinetic;
  return e;
}

/// Energies of the engine's current state against the scene's initial datum.
/// Under Verlet the velocities are paired with the positions of the same
/// instant (one step back), so the potential and kinetic parts agree in time.
template <typename Scalar>
Energies<Scalar> energies(const BasicEngine<Scalar>& engine, std::optional<Scalar> datum = std::nullopt) {
  const auto& s = engine.state();
  const Scalar d = datum ? *datum : gpe_datum(engine.scene());
  if (!s.velocity_positions.empty())
    return energies(engine.scene(), s.velocity_positions, s.velocities, s.time() - s.dt, d);
  return energies(engine.scene(), s.positions, s.velocities, s.time(), d);
}

}  // namespace msim
