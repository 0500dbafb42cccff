#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "msim/model.hpp"

namespace msim {

struct Dof {
  Index mass;
  int axis;
};

/// Linearized dynamics K phi = omega^2 M phi over the free degrees of
/// freedom. Anchored masses are removed, and so are DOFs whose stiffness row
/// is identically zero (no spring acts along them at the linearization
/// state); those are listed in `null_dofs`.
struct ModalSystem {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd mass;
  std::vector<Dof> dofs;
  std::vector<Dof> null_dofs;

  Eigen::Index size() const { return mass.size(); }
};

/// Tangent stiffness of one spring at separation `l` (x_j - x_i):
/// k d d^T + k (1 - l0/|l|) (I - d d^T).
Eigen::Matrix3d spring_tangent_block(const Vec3d& l, double stiffness, double rest_length);

/// Linearizes about `positions` at time t (actuated rest lengths are taken at t).
ModalSystem assemble_modal_system(const Scene& scene, const std::vector<Vec3d>& positions, double t = 0);

/// Linearizes about the scene's own positions.
ModalSystem assemble_modal_system(const Scene& scene);

struct ModalOptions {
  double tolerance = 1e-8;  ///< relative residual |K phi - w2 M phi| / |K phi|
  int max_iterations = 10000;
};

struct ModalResult {
  std::vector<double> eigenvalues;  ///< omega^2, ascending
  std::vector<double> frequencies;  ///< Hz
  std::vector<double> residuals;
  Eigen::MatrixXd modes;            ///< M-orthonormal columns
  int iterations = 0;
};

/// The `count` smallest modes by shift-inverted subspace iteration (shift 0)
/// on a sparse LDLT factorization of K, locking converged modes as they
/// appear. Throws msim::Error when K is singular or the iteration stalls.
ModalResult solve_modes(const ModalSystem& system, std::size_t count, const ModalOptions& options = {});

/// Ascending natural frequencies in Hz.
std::vector<double> natural_frequencies(const ModalSystem& system, std::size_t count = 2);

/// Static displacement K u = f over the system's DOFs.
Eigen::VectorXd solve_static(const ModalSystem& system, const Eigen::VectorXd& load);

}  // namespace msim
