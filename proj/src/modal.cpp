#include "msim/modal.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "msim/forces.hpp"

namespace msim {

Eigen::Matrix3d spring_tangent_block(const Vec3d& l, double stiffness, double rest_length) {
  const double length = l.norm();
  if (!(length >= kDegenerateLength)) throw Error("modal assembly: spring with coincident endpoints");
  const Vec3d d = l / length;
  const Eigen::Matrix3d axial = d * d.transpose();
  const double transverse = stiffness * (1.0 - rest_length / length);
  return stiffness * axial + transverse * (Eigen::Matrix3d::Identity() - axial);
}

ModalSystem assemble_modal_system(const Scene& scene, const std::vector<Vec3d>& positions, double t) {
  const std::size_t n = scene.masses.size();
  if (positions.size() != n) throw std::invalid_argument("positions do not match the scene");

  // full 3n numbering first; anchored and empty rows are dropped afterwards
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(scene.springs.size() * 36);
  const RestLengths<double> rest(scene);
  for (const auto& s : scene.springs) {
    const Eigen::Matrix3d block =
        spring_tangent_block(positions[s.j] - positions[s.i], s.stiffness, rest.at(s, scene.actuation_groups, t));
    const bool free_i = !scene.masses[s.i].fixed, free_j = !scene.masses[s.j].fixed;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double v = block(a, b);
        if (v == 0) continue;
        const int ri = 3 * int(s.i) + a, ci = 3 * int(s.i) + b;
        const int rj = 3 * int(s.j) + a, cj = 3 * int(s.j) + b;
        if (free_i) triplets.emplace_back(ri, ci, v);
        if (free_j) triplets.emplace_back(rj, cj, v);
        if (free_i && free_j) {
          triplets.emplace_back(ri, cj, -v);
          triplets.emplace_back(rj, ci, -v);
        }
      }
  }

  std::vector<bool> has_stiffness(3 * n, false);
  for (const auto& tr : triplets) has_stiffness[tr.row()] = true;

  ModalSystem system;
  std::vector<int> map(3 * n, -1);
  for (std::size_t m = 0; m < n; ++m) {
    if (scene.masses[m].fixed) continue;
    for (int a = 0; a < 3; ++a) {
      const std::size_t full = 3 * m + a;
      if (has_stiffness[full]) {
        map[full] = static_cast<int>(system.dofs.size());
        system.dofs.push_back({Index(m), a});
      } else {
        system.null_dofs.push_back({Index(m), a});
      }
    }
  }

  std::vector<Eigen::Triplet<double>> reduced;
  reduced.reserve(triplets.size());
  for (const auto& tr : triplets) {
    const int r = map[tr.row()], c = map[tr.col()];
    if (r >= 0 && c >= 0) reduced.emplace_back(r, c, tr.value());
  }
  const auto size = static_cast<Eigen::Index>(system.dofs.size());
  system.stiffness.resize(size, size);
  system.stiffness.setFromTriplets(reduced.begin(), reduced.end());
  system.mass.resize(size);
  for (Eigen::Index k = 0; k < size; ++k) system.mass[k] = scene.masses[system.dofs[k].mass].mass;
  return system;
}

ModalSystem assemble_modal_system(const Scene& scene) {
  std::vector<Vec3d> positions;
  positions.reserve(scene.masses.size());
  for (const auto& m : scene.masses) positions.push_back(m.position);
  return assemble_modal_system(scene, positions, 0.0);
}

namespace {

using Factorization = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

void factorize(const ModalSystem& system, Factorization& solver) {
  if (system.size() == 0) throw Error("modal system has no free degrees of freedom");
  solver.compute(system.stiffness);
  if (solver.info() != Eigen::Success) throw Error("stiffness factorization failed");
  const Eigen::VectorXd d = solver.vectorD();
  const double largest = d.cwiseAbs().maxCoeff();
  if (!(d.minCoeff() > 1e-13 * largest))
    throw Error("stiffness matrix is singular or indefinite (unanchored rigid modes or mechanisms)");
}

/// Removes the M-projection onto `locked` and M-normalizes the columns.
void m_orthonormalize(Eigen::MatrixXd& block, const Eigen::MatrixXd& locked, const Eigen::VectorXd& mass) {
  if (locked.cols() > 0) block -= locked * (locked.transpose() * mass.asDiagonal() * block);
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (Eigen::Index p = 0; p < c; ++p) {
      const double proj = block.col(p).dot(mass.cwiseProduct(block.col(c)));
      block.col(c) -= proj * block.col(p);
    }
    const double norm = std::sqrt(block.col(c).dot(mass.cwiseProduct(block.col(c))));
    if (norm > 0) block.col(c) /= norm;
  }
}

}  // namespace

ModalResult solve_modes(const ModalSystem& system, std::size_t count, const ModalOptions& options) {
  const Eigen::Index n = system.size();
  if (count == 0) return {};
  if (static_cast<Eigen::Index>(count) > n) throw Error("requested more modes than degrees of freedom");

  Factorization solver;
  factorize(system, solver);
  const auto& K = system.stiffness;
  const auto& M = system.mass;

  const Eigen::Index want = static_cast<Eigen::Index>(count);
  const Eigen::Index width = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * want, want + 8));

  std::mt19937 rng(12345);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd active(n, width);
  for (Eigen::Index c = 0; c < width; ++c)
    for (Eigen::Index r = 0; r < n; ++r) active(r, c) = normal(rng);

  Eigen::MatrixXd locked(n, 0);
  std::vector<double> locked_values, locked_residuals;
  ModalResult result;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    Eigen::MatrixXd block = solver.solve(M.asDiagonal() * active);
    m_orthonormalize(block, locked, M);

    // Rayleigh-Ritz on the current block
    const Eigen::MatrixXd KB = K * block;
    Eigen::MatrixXd reduced_k = block.transpose() * KB;
    reduced_k = 0.5 * (reduced_k + reduced_k.transpose()).eval();
    Eigen::MatrixXd reduced_m = block.transpose() * M.asDiagonal() * block;
    reduced_m = 0.5 * (reduced_m + reduced_m.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(reduced_k, reduced_m);
    if (ritz.info() != Eigen::Success) throw Error("Rayleigh-Ritz projection failed");
    active = block * ritz.eigenvectors();
    const Eigen::MatrixXd K_active = KB * ritz.eigenvectors();

    // lock the leading converged vectors, in order
    Eigen::Index newly = 0;
    while (locked.cols() + newly < want && newly < active.cols()) {
      const double lambda = ritz.eigenvalues()[newly];
      const Eigen::VectorXd kx = K_active.col(newly);
      const double residual = (kx - lambda * M.cwiseProduct(active.col(newly))).norm() / kx.norm();
      if (!(residual < options.tolerance)) break;
      locked_values.push_back(lambda);
      locked_residuals.push_back(residual);
      ++newly;
    }
    if (newly > 0) {
      Eigen::MatrixXd grown(n, locked.cols() + newly);
      grown << locked, active.leftCols(newly);
      locked = std::move(grown);
      active = active.rightCols(active.cols() - newly).eval();
      if (active.cols() < std::min<Eigen::Index>(width, n - locked.cols())) {
        // keep the block width so the convergence rate does not degrade
        const Eigen::Index extra = std::min<Eigen::Index>(width, n - locked.cols()) - active.cols();
        Eigen::MatrixXd refill(n, active.cols() + extra);
        Eigen::MatrixXd fresh(n, extra);
        for (Eigen::Index c = 0; c < extra; ++c)
          for (Eigen::Index r = 0; r < n; ++r) fresh(r, c) = normal(rng);
        refill << active, fresh;
        active = std::move(refill);
      }
    }
    if (locked.cols() >= want) {
      result.eigenvalues = locked_values;
      result.residuals = locked_residuals;
      result.modes = locked;
      for (double lambda : locked_values)
        result.frequencies.push_back(std::sqrt(std::max(lambda, 0.0)) / (2 * std::numbers::pi));
      return result;
    }
  }
  throw Error("modal iteration did not converge within " + std::to_string(options.max_iterations) + " iterations");
}

std::vector<double> natural_frequencies(const ModalSystem& system, std::size_t count) {
  return solve_modes(system, count).frequencies;
}

Eigen::VectorXd solve_static(const ModalSystem& system, const Eigen::VectorXd& load) {
  Factorization solver;
  factorize(system, solver);
  return solver.solve(load);
}

}  // namespace msim
