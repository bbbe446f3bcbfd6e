#pragma once

#include "strb/spacetime.hpp"

namespace strb {

// Row (test) and column (trial) slots of the 2x2 block optimality system.
// Row q tests the observation equation, row z the state equation.
enum class TestSlot { q, z };
enum class TrialSlot { y, p };

// How a spatial matrix expands over the time slabs:
//   scaled_mass:      dt * (I  kron  A)
//   time_derivative:  (I - L) kron A   (L = subdiagonal shift; transposed
//                     variant for the adjoint direction)
// Steady templates have n_t = 1 and carry no time_derivative terms.
enum class TimeCoupling { scaled_mass, time_derivative };

struct OperatorTerm {
  std::string label;
  std::function<double(const Mu&, double)> theta;  // sign and 1/alpha included
  std::shared_ptr<const SpMat> A;                  // free-dof spatial matrix
  TestSlot row = TestSlot::z;
  TrialSlot col = TrialSlot::y;
  bool transpose_spatial = false;
  TimeCoupling coupling = TimeCoupling::scaled_mass;
  bool transpose_time = false;  // upper instead of lower bidiagonal
};

struct LoadTerm {
  std::string label;
  std::function<double(const Mu&, double)> theta;
  std::shared_ptr<const Vec> f;  // free-dof spatial load, repeated per slab (dt-scaled)
  TestSlot row = TestSlot::z;
};

// mu-independent affine skeleton of the discrete optimality system for one
// problem / time grid / mode.  Single source of truth for the high-fidelity
// blocks, the reduced projections and the residual machinery.
struct DiscreteOcp {
  const OcpProblem* prob = nullptr;
  bool unsteady = true;
  int n_t = 1;
  double dt = 1.0;
  int n_free = 0;

  std::vector<OperatorTerm> ops;
  std::vector<LoadTerm> loads;

  QNorm qnorm;
  std::shared_ptr<const QNormSolver> qsolver;

  int n_st() const { return n_free * n_t; }

  // out += scale * theta-less term action on a space-time vector
  void apply_term(const OperatorTerm& t, const Vec& in, Vec& out, double scale = 1.0) const;

  // stacked dt * (1 kron f) load of one term
  Vec expand_load(const LoadTerm& t) const;

  // F(mu) restricted to one test slot (length n_st)
  Vec load_at(const Mu& mu, double alpha, TestSlot slot) const;

  // Full-order residual [r_q; r_z] = F(mu) - B(mu) [y; p]
  void residual(const Mu& mu, double alpha, const Vec& y, const Vec& p, Vec& r_q, Vec& r_z) const;

  // Monolithic B(mu) as a sparse matrix (term-wise sum; rows [q; z],
  // columns [y; p]).
  SpMat monolithic(const Mu& mu, double alpha) const;

  // X_QxX_Q block norm over [q; z] resp. [y; p] stacked vectors.
  SpMat norm_matrix_pair() const;
};

// grid == nullptr builds the steady template.
DiscreteOcp make_discrete(const OcpProblem& p, const TimeGrid* grid);

// Dual norm of the full-order residual at a reconstructed trial pair,
// sqrt(|r_q|^2_{X^-1} + |r_z|^2_{X^-1}).  Reference route for validating the
// offline/online residual evaluation.
double residual_dual_norm_direct(const DiscreteOcp& d, const Mu& mu, double alpha, const Vec& y,
                                 const Vec& p);

}  // namespace strb
