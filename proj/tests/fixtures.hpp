#pragma once

#include <random>

#include "msim/model.hpp"

namespace fixtures {

/// Unit cube of 8 masses with all 28 pairwise springs (edges, face and body
/// diagonals), at rest.
inline msim::Scene cube(double mass = 0.1, double k = 1e4) {
  msim::SceneBuilder b;
  for (int c = 0; c < 8; ++c) b.add_mass(mass, msim::Vec3d(c & 1, (c >> 1) & 1, (c >> 2) & 1));
  for (msim::Index i = 0; i < 8; ++i)
    for (msim::Index j = i + 1; j < 8; ++j) b.connect(i, j, k);
  return std::move(b).build();
}

/// Free mass on a spring along `axis` whose equilibrium is the origin; the
/// fixed anchor sits at -rest along the axis.
inline msim::Scene oscillator(double k, double m, double rest = 1.0, double displacement = 0.1, int axis = 0,
                              double dt = 1e-4) {
  msim::SceneBuilder b;
  msim::Vec3d along = msim::Vec3d::Zero();
  along[axis] = 1;
  b.add_mass(m, -rest * along, true);
  b.add_mass(m, displacement * along);
  b.connect(0, 1, k, rest);
  auto scene = std::move(b).build();
  scene.gravity.setZero();
  scene.dt = dt;
  return scene;
}

/// Solid block of nx*ny*nz voxels with 26-neighbour connectivity.
inline msim::Scene block(int nx, int ny, int nz, double spacing = 1.0, double mass = 0.1, double k0 = 1e4) {
  msim::SceneBuilder b;
  auto id = [&](int x, int y, int z) { return msim::Index((z * (ny + 1) + y) * (nx + 1) + x); };
  for (int z = 0; z <= nz; ++z)
    for (int y = 0; y <= ny; ++y)
      for (int x = 0; x <= nx; ++x) b.add_mass(mass, spacing * msim::Vec3d(x, y, z));
  for (int z = 0; z <= nz; ++z)
    for (int y = 0; y <= ny; ++y)
      for (int x = 0; x <= nx; ++x)
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int X = x + dx, Y = y + dy, Z = z + dz;
              if (X < 0 || Y < 0 || Z < 0 || X > nx || Y > ny || Z > nz) continue;
              if (id(X, Y, Z) <= id(x, y, z)) continue;
              const double len = spacing * std::sqrt(double(dx * dx + dy * dy + dz * dz));
              b.connect(id(x, y, z), id(X, Y, Z), k0 * spacing / len);
            }
  return std::move(b).build();
}

/// Random small displacements and velocities so springs are loaded.
inline void perturb(msim::Scene& scene, double dx, double dv, unsigned seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& m : scene.masses) {
    m.position += dx * msim::Vec3d(u(rng), u(rng), u(rng));
    m.velocity = dv * msim::Vec3d(u(rng), u(rng), u(rng));
  }
}

}  // namespace fixtures
