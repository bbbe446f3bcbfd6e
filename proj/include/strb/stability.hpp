#pragma once

#include "strb/discrete.hpp"

namespace strb {

// Which constant product enters the observation-bound case.  The default
// pairing uses the parameter-dependent observation continuity c_m(mu); the
// alternate one swaps in the control continuity c_c.
enum class ObsPairing { cm_cobs, cc_cobs };

// Closed-form inf-sup lower bound.  Cases:
//   control_equals_observation:  alpha * gamma_a(mu)
//   control_bound:      gamma_a / sqrt(2 max{1, (c_c c_u / (alpha gamma_a))^2})
//   observation_bound:  gamma_a / sqrt(2 max{1, (c_m c_obs / (alpha gamma_a))^2})
double beta_lb(const OcpProblem& p, const Mu& mu, double alpha, BoundCase bc,
               ObsPairing pairing = ObsPairing::cm_cobs);

struct BetaExactOptions {
  int max_iters = 600;
  double tol = 1e-12;      // Ritz stagnation, relative
  double res_tol = 1e-7;   // eigen-residual, relative
  int block_size = 4;
};

// Exact discrete inf-sup constant: sqrt of the smallest eigenvalue of
// B' X^{-1} B v = lambda X v with X the Q x Q norm of `qn` repeated over the
// two trial slots.  Inverse block power iteration; B is factorized once and
// applied through triangular solves.
double beta_exact(const SpMat& B, const QNorm& qn, BetaExactOptions opts = {});

struct StabilityRow {
  Mu mu;
  double alpha = 0.0;
  double beta_lower = 0.0;
  double beta_ex = 0.0;
  double ratio = 0.0;  // beta_ex / beta_lower
};

struct StabilityReport {
  std::string mode;  // "steady" | "unsteady"
  std::string problem_id;
  BoundCase bound_case = BoundCase::control_bound;
  std::vector<StabilityRow> rows;
};

// mu1 sweep at fixed (mu2, mu3) crossed with the alpha list.
StabilityReport infsup_sweep(const OcpProblem& p, const std::vector<double>& mu1_grid, double mu2,
                             double mu3, const std::vector<double>& alphas, const TimeGrid* grid,
                             BoundCase bc, ObsPairing pairing = ObsPairing::cm_cobs);

}  // namespace strb
