#pragma once

#include <cstdint>
#include <optional>

#include "msim/mesh.hpp"
#include "msim/model.hpp"

namespace msim {

enum class LatticeMode { Voxel, BestCandidate };

struct LatticeSpec {
  LatticeMode mode = LatticeMode::Voxel;
  double dim = 0;                            ///< voxel edge (m)
  double cutoff = 0;                         ///< best-candidate minimum spacing (m)
  int candidates = 100;                      ///< samples drawn per placement round
  int nearest = 3;                           ///< k in the k-nearest score
  std::optional<double> connection_radius;   ///< defaults to 1.75 * cutoff
  std::optional<std::size_t> target_count;   ///< stop once this many masses are placed
  int max_rejected_rounds = 20;
  std::uint64_t seed = 0;

  double radius() const { return connection_radius ? *connection_radius : 1.75 * cutoff; }
};

/// Throws std::invalid_argument when the parameters cannot drive the selected mode.
void check_lattice_spec(const LatticeSpec& spec);

/// Grid nodes of pitch `dim` anchored at the mesh's bounding-box minimum,
/// culled by point_inside. Every pair of surviving nodes that share a voxel
/// is linked (edges, face diagonals, long diagonals), each pair once.
Scene build_voxel_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material);

/// Mitchell best-candidate sampling inside the mesh with a radius-graph of
/// springs.
Scene build_random_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material);

Scene build_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material);

/// Per-mass value for `count` masses filling `volume`: node_mass as is,
/// total_mass split evenly, or density * volume split evenly.
double mass_per_node(const Material& material, std::size_t count, double volume);

}  // namespace msim
