#include "msim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <tbb/parallel_for.h>

namespace msim {

void check_lattice_spec(const LatticeSpec& spec) {
  if (spec.mode == LatticeMode::Voxel) {
    if (!(spec.dim > 0) || !std::isfinite(spec.dim)) throw std::invalid_argument("voxel lattice needs dim > 0");
    return;
  }
  if (!(spec.cutoff > 0) || !std::isfinite(spec.cutoff))
    throw std::invalid_argument("best-candidate lattice needs cutoff > 0");
  if (spec.candidates < 1) throw std::invalid_argument("candidate count must be >= 1");
  if (spec.nearest < 1) throw std::invalid_argument("nearest-neighbour count must be >= 1");
  if (!(spec.radius() > 0)) throw std::invalid_argument("connection radius must be > 0");
  if (spec.max_rejected_rounds < 1) throw std::invalid_argument("rejected-round limit must be >= 1");
  if (spec.target_count && *spec.target_count == 0) throw std::invalid_argument("target count must be >= 1");
}

double mass_per_node(const Material& material, std::size_t count, double volume) {
  if (count == 0) throw Error("no masses generated");
  if (material.node_mass) return *material.node_mass;
  if (material.total_mass) return *material.total_mass / double(count);
  if (material.density) {
    if (!(volume > 0)) throw Error("density-based mass needs a region with positive volume");
    return *material.density * volume / double(count);
  }
  throw std::invalid_argument("material '" + material.name + "' has no mass source");
}

namespace {

void finish_scene(Scene& scene, const Material& material, double volume) {
  const double m = mass_per_node(material, scene.masses.size(), volume);
  for (auto& mass : scene.masses) mass.mass = m;
  scene.materials.push_back(material);
}

}  // namespace

Scene build_voxel_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material) {
  check_lattice_spec(spec);
  if (mesh.empty()) throw Error("no masses generated: mesh is empty");
  const auto [lo, hi] = mesh.bounds();
  const double h = spec.dim;
  Eigen::Array3i cells;
  for (int a = 0; a < 3; ++a) cells[a] = static_cast<int>(std::floor((hi[a] - lo[a]) / h + 1e-9));
  const Eigen::Array3i nodes = cells + 1;
  const std::size_t total = std::size_t(nodes[0]) * nodes[1] * nodes[2];
  auto flat = [&](int x, int y, int z) { return (std::size_t(z) * nodes[1] + y) * nodes[0] + x; };
  auto where = [&](int x, int y, int z) { return Vec3d(lo + h * Vec3d(x, y, z)); };

  std::vector<char> keep(total, 0);
  tbb::parallel_for(std::size_t(0), total, [&](std::size_t n) {
    const int x = int(n % nodes[0]), y = int((n / nodes[0]) % nodes[1]), z = int(n / (std::size_t(nodes[0]) * nodes[1]));
    keep[n] = point_inside(mesh, where(x, y, z));
  });

  SceneBuilder b;
  std::vector<Index> id(total, std::numeric_limits<Index>::max());
  for (int z = 0; z < nodes[2]; ++z)
    for (int y = 0; y < nodes[1]; ++y)
      for (int x = 0; x < nodes[0]; ++x)
        if (keep[flat(x, y, z)]) id[flat(x, y, z)] = b.add_mass(1.0, where(x, y, z));
  if (b.scene().masses.empty()) throw Error("no masses generated");

  // the 13 forward neighbours cover every shared-voxel pair exactly once
  static constexpr int offsets[13][3] = {{1, 0, 0},  {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0},
                                         {1, 0, 1},  {1, 0, -1}, {0, 1, 1},  {0, 1, -1}, {1, 1, 1},
                                         {1, 1, -1}, {1, -1, 1}, {1, -1, -1}};
  for (int z = 0; z < nodes[2]; ++z)
    for (int y = 0; y < nodes[1]; ++y)
      for (int x = 0; x < nodes[0]; ++x) {
        const Index i = id[flat(x, y, z)];
        if (!keep[flat(x, y, z)]) continue;
        for (const auto& o : offsets) {
          const int X = x + o[0], Y = y + o[1], Z = z + o[2];
          if (X < 0 || Y < 0 || Z < 0 || X >= nodes[0] || Y >= nodes[1] || Z >= nodes[2]) continue;
          if (!keep[flat(X, Y, Z)]) continue;
          const Index j = id[flat(X, Y, Z)];
          const double l0 = (b.scene().masses[j].position - b.scene().masses[i].position).norm();
          b.connect(i, j, material.stiffness_for_length(l0), l0);
        }
      }
  Scene scene = std::move(b).build();
  finish_scene(scene, material, mesh.volume());
  return scene;
}

namespace {

/// Uniform hash grid over the sampling box for neighbour queries.
class PointGrid {
 public:
  PointGrid(const Vec3d& lo, const Vec3d& hi, double cell) : lo_(lo), cell_(cell) {
    for (int a = 0; a < 3; ++a) dims_[a] = std::max(1, int(std::ceil((hi[a] - lo[a]) / cell)) + 1);
    bins_.resize(std::size_t(dims_[0]) * dims_[1] * dims_[2]);
  }

  void insert(Index id, const Vec3d& p) {
    points_.push_back(p);
    bins_[flat(locate(p))].push_back(id);
  }

  const Vec3d& point(Index id) const { return points_[id]; }
  std::size_t size() const { return points_.size(); }

  /// Distances to the k nearest stored points, ascending (fewer if the grid
  /// holds fewer).
  std::vector<double> nearest(const Vec3d& p, std::size_t k) const {
    std::vector<double> best;
    const Eigen::Array3i c = locate(p);
    const int limit = dims_.maxCoeff();
    for (int r = 0; r <= limit; ++r) {
      visit_shell(c, r, [&](Index id) {
        best.push_back((points_[id] - p).norm());
      });
      std::sort(best.begin(), best.end());
      if (best.size() > k) best.resize(k);
      // anything in a farther shell is at least r cells away
      if (best.size() == k && best.back() <= double(r) * cell_) break;
    }
    return best;
  }

  template <typename Fn>
  void within(const Vec3d& p, double radius, Fn&& fn) const {
    const Eigen::Array3i c = locate(p);
    const int reach = int(std::ceil(radius / cell_));
    for (int z = c[2] - reach; z <= c[2] + reach; ++z)
      for (int y = c[1] - reach; y <= c[1] + reach; ++y)
        for (int x = c[0] - reach; x <= c[0] + reach; ++x) {
          if (!valid({x, y, z})) continue;
          for (Index id : bins_[flat({x, y, z})])
            if ((points_[id] - p).norm() <= radius) fn(id);
        }
  }

 private:
  Eigen::Array3i locate(const Vec3d& p) const {
    Eigen::Array3i c;
    for (int a = 0; a < 3; ++a) c[a] = std::clamp(int(std::floor((p[a] - lo_[a]) / cell_)), 0, dims_[a] - 1);
    return c;
  }
  bool valid(const Eigen::Array3i& c) const { return (c >= 0).all() && (c < dims_).all(); }
  std::size_t flat(const Eigen::Array3i& c) const { return (std::size_t(c[2]) * dims_[1] + c[1]) * dims_[0] + c[0]; }

  template <typename Fn>
  void visit_shell(const Eigen::Array3i& c, int r, Fn&& fn) const {
    for (int z = c[2] - r; z <= c[2] + r; ++z)
      for (int y = c[1] - r; y <= c[1] + r; ++y)
        for (int x = c[0] - r; x <= c[0] + r; ++x) {
          const int ring = std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])});
          if (ring != r || !valid({x, y, z})) continue;
          for (Index id : bins_[flat({x, y, z})]) fn(id);
        }
  }

  Vec3d lo_;
  double cell_;
  Eigen::Array3i dims_;
  std::vector<std::vector<Index>> bins_;
  std::vector<Vec3d> points_;
};

class InteriorSampler {
 public:
  InteriorSampler(const TriangleMesh& mesh, std::uint64_t seed) : mesh_(mesh), rng_(seed) {
    const auto b = mesh.bounds();
    lo_ = b[0];
    hi_ = b[1];
  }

  Vec3d draw() {
    std::uniform_real_distribution<double> u(0, 1);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Vec3d p = lo_ + (hi_ - lo_).cwiseProduct(Vec3d(u(rng_), u(rng_), u(rng_)));
      if (point_inside(mesh_, p)) return p;
    }
    throw Error("region has zero volume: no interior sample found");
  }

  const Vec3d& lo() const { return lo_; }
  const Vec3d& hi() const { return hi_; }

 private:
  const TriangleMesh& mesh_;
  std::mt19937_64 rng_;
  Vec3d lo_, hi_;
};

}  // namespace

Scene build_random_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material) {
  check_lattice_spec(spec);
  const double volume = mesh.volume();
  if (mesh.empty() || !(volume > 0)) throw Error("region has zero volume");

  InteriorSampler sampler(mesh, spec.seed);
  const double radius = spec.radius();
  PointGrid grid(sampler.lo(), sampler.hi(), std::max(spec.cutoff, radius));
  grid.insert(0, sampler.draw());

  const std::size_t k = static_cast<std::size_t>(spec.nearest);
  int rejected = 0;
  while (rejected < spec.max_rejected_rounds && (!spec.target_count || grid.size() < *spec.target_count)) {
    Vec3d best = Vec3d::Zero();
    double best_score = -1, best_gap = 0;
    for (int c = 0; c < spec.candidates; ++c) {
      const Vec3d p = sampler.draw();
      const auto d = grid.nearest(p, k);
      double score = 0;
      for (double v : d) score += v;
      if (score > best_score) {
        best_score = score;
        best = p;
        best_gap = d.front();
      }
    }
    if (best_gap < spec.cutoff) {
      ++rejected;
      continue;
    }
    rejected = 0;
    grid.insert(static_cast<Index>(grid.size()), best);
  }

  SceneBuilder b;
  for (std::size_t n = 0; n < grid.size(); ++n) b.add_mass(1.0, grid.point(Index(n)));
  for (std::size_t n = 0; n < grid.size(); ++n) {
    std::vector<Index> near;
    grid.within(grid.point(Index(n)), radius, [&](Index other) {
      if (other > n) near.push_back(other);
    });
    std::sort(near.begin(), near.end());
    for (Index j : near) {
      const double l0 = (grid.point(j) - grid.point(Index(n))).norm();
      if (l0 > 0) b.connect(Index(n), j, material.stiffness_for_length(l0), l0);
    }
  }
  Scene scene = std::move(b).build();
  finish_scene(scene, material, volume);
  return scene;
}

Scene build_lattice(const TriangleMesh& mesh, const LatticeSpec& spec, const Material& material) {
  return spec.mode == LatticeMode::Voxel ? build_voxel_lattice(mesh, spec, material)
                                         : build_random_lattice(mesh, spec, material);
}

}  // namespace msim
