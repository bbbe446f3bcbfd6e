#pragma once

#include "strb/stability.hpp"

#include <iosfwd>

namespace strb {

// Aggregated certified reduced model.  The basis Z holds 2N space-time
// columns (state and adjoint snapshot directions, X_Q-orthonormal); both the
// state and adjoint trial components use the full aggregated space, so the
// reduced system has dimension 2 * n_cols = 4N.
class ReducedModel {
 public:
  const OcpProblem* prob = nullptr;
  std::shared_ptr<const DiscreteOcp> disc;
  double alpha = 0.01;
  BoundCase bound_case = BoundCase::control_bound;
  bool unsteady = true;
  TimeGrid grid;

  Mat Z;                                 // n_st x n_cols
  std::vector<int> cols_after_snapshot;  // prefix widths, one per snapshot pair
  std::vector<Mu> sampled;               // greedy-selected parameters

  std::vector<Mat> op_red;   // per operator term: n_cols x n_cols quadrant
  std::vector<Vec> load_red; // per load term: Z' expanded load

  // Residual bookkeeping for one test slot.  The Riesz representers of the
  // load terms (first) and of each (operator term, basis column) pair are
  // X_Q-orthonormalized as they arrive; `rfac` is the resulting triangular
  // factor of their Gram matrix, so the residual dual norm is ||rfac * w||
  // for the theta-weight vector w.  Evaluating the factored form instead of
  // the quadratic form w' G w keeps the relative accuracy of small residuals
  // at machine epsilon rather than its square root.
  struct RieszPart {
    std::vector<int> load_ids;  // indices into disc->loads
    std::vector<int> op_ids;    // indices into disc->ops
    Mat rfac;                // upper-triangular Gram factor
    std::vector<Vec> onb;    // orthonormalized representers; dropped on serialization
  };
  RieszPart part_q, part_z;
  bool frozen = false;  // loaded from disk: no further basis extension

  int n_cols() const { return static_cast<int>(Z.cols()); }
  int n_snapshots() const { return static_cast<int>(cols_after_snapshot.size()); }

  // Dense 4N Galerkin solve; coefficients ordered [y-cols; p-cols].
  Vec reduced_solve(const Mu& mu) const;

  double residual_dual_norm(const Mu& mu, const Vec& coeffs) const;
  double delta_n(const Mu& mu, const Vec& coeffs, ObsPairing pairing = ObsPairing::cm_cobs) const;
  // Estimator with a caller-supplied stability constant (e.g. beta_exact).
  double delta_with_beta(const Mu& mu, const Vec& coeffs, double beta) const;

  void reconstruct(const Vec& coeffs, Vec& y, Vec& p) const;

  // Copy restricted to the first `n_snap` snapshot pairs.
  ReducedModel truncated(int n_snap) const;
};

// X_Q modified Gram-Schmidt (applied twice); returns the accepted columns.
// Directions whose post-projection norm falls under drop_tol * original norm
// are discarded.
Mat orthonormalize(const Mat& basis, const std::vector<Vec>& new_vecs, const QNorm& qn,
                   double drop_tol = 1e-10);

struct GreedyOptions {
  double tol = 1e-4;
  int max_iters = 40;
  double drop_tol = 1e-10;
  double alpha = 0.01;
  BoundCase bound_case = BoundCase::control_bound;
  ObsPairing pairing = ObsPairing::cm_cobs;
  bool unsteady = true;
  TimeGrid grid{1.0, 1};
  std::ostream* log = nullptr;  // progress lines when set
};

struct GreedyIterRecord {
  int iteration = 0;     // 0 = initialization at the box midpoint
  int n_snapshots = 0;   // after this iteration
  Mu mu;                 // parameter whose snapshot was added
  double delta_max = 0;  // max estimator over the training set before adding
};

struct GreedyHistory {
  std::vector<GreedyIterRecord> iters;
  bool converged = false;
  bool stagnated = false;
  double final_delta_max = 0.0;
};

GreedyHistory greedy_build(ReducedModel& model, const OcpProblem& p,
                           const std::vector<Mu>& training, const GreedyOptions& opts);

// u = p/alpha on the control support, zero elsewhere (space-time layout).
Vec recover_control(const OcpProblem& p, double alpha, const Vec& p_traj);

struct ErrorRow {
  int n = 0;  // snapshot pairs
  double err_rel_mean = 0.0;
  double err_abs_mean = 0.0;
  double delta_mean = 0.0;
  double eta_mean = 0.0;
  double eta_min = 0.0;
  double eta_max = 0.0;
  std::string bound_kind;  // "lb" | "exact"
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

// Truth-vs-reduced study over a test set for every intermediate N.  When
// `with_exact_beta` is set, a second row family is produced with the exact
// inf-sup constant in place of the lower bound (one eigensolve per sample).
ErrorReport error_analysis(const ReducedModel& model, const std::vector<Mu>& test_set,
                           bool with_exact_beta = false,
                           ObsPairing pairing = ObsPairing::cm_cobs);

}  // namespace strb
