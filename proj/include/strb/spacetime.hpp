#pragma once

#include "strb/problem.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace strb {

struct TimeGrid {
  double T = 1.0;
  int n_t = 1;
  double dt() const { return T / n_t; }
};

// Weighted norm ||v||^2 = sum_k dt * v_k' X v_k over n_t spatial slabs.
// Steady problems use n_t = 1, dt = 1 (plain H1 norm).
struct QNorm {
  SpMat X;  // free-dof spatial norm matrix (SPD)
  int n_t = 1;
  double dt = 1.0;

  int n_total() const { return static_cast<int>(X.rows()) * n_t; }
};

double spacetime_norm(const Vec& v, const QNorm& qn);
Vec apply_qnorm(const QNorm& qn, const Vec& v);  // v -> (dt * blockdiag X) v

// Shared factorization of the spatial norm block for Riesz solves.
class QNormSolver {
 public:
  explicit QNormSolver(const QNorm& qn);
  // r = (dt * blockdiag X)^{-1} v
  Vec solve(const Vec& v) const;
  const QNorm& qnorm() const { return qn_; }

 private:
  QNorm qn_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

// All-at-once optimality system on the free dofs, trial order [y; p], test
// (row) order [observation eq.; state eq.]:
//
//   [ dt*M        K^T      ] [y]   [ rhs_adjoint ]
//   [ K       -(dt/a)*C    ] [p] = [ rhs_state   ]
//
// with K block lower bidiagonal: diag S + dt*D_a, subdiagonal -S (backward
// Euler state, forward Euler adjoint).  Steady systems are the degenerate
// n_t = 1, dt = 1 case with S dropped.
struct SpaceTimeBlockSystem {
  SpMat K_diag, K_sub;      // spatial blocks of K (K_sub empty when steady)
  SpMat M_block, C_block;   // M(mu), C(mu) on free dofs (unscaled)
  Vec rhs_state, rhs_adjoint;  // length n_free * n_t
  int n_t = 1;
  int n_free = 0;
  double dt = 1.0;
  double alpha = 1.0;
  bool unsteady = true;

  int n_total() const { return n_free * n_t; }
  SpMat monolithic() const;  // 2*n_total square matrix as displayed above
};

// `allow_outside` lifts the parameter-box check (config-gated extrapolation;
// the high-fidelity operators remain well defined outside the box).
SpaceTimeBlockSystem assemble_hf_system(const OcpProblem& p, const Mu& mu, const TimeGrid& grid,
                                        double alpha, bool allow_outside = false);
SpaceTimeBlockSystem assemble_steady_system(const OcpProblem& p, const Mu& mu, double alpha,
                                            bool allow_outside = false);

struct Snapshot {
  Vec y, p;  // free-dof trajectories, length n_free * n_t
};

// Sparse direct solve of the monolithic system; rejects solutions whose
// relative residual exceeds 1e-10.
Snapshot solve_hf(const SpaceTimeBlockSystem& sys, const std::string& context = "");

QNorm make_qnorm(const OcpProblem& p, const TimeGrid* grid);  // null grid = steady

// Tracking cost 1/2 |y-y_d|^2_obs + alpha/2 |u|^2_U (time-integrated when
// unsteady).  `snap` holds free-dof trajectories; the lifting is re-added
// internally.
double cost_functional(const OcpProblem& p, const Mu& mu, double alpha,
                       const SpaceTimeBlockSystem& sys, const Snapshot& snap,
                       bool allow_outside = false);

}  // namespace strb
