#include "strb/stability.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace strb {

double beta_lb(const OcpProblem& p, const Mu& mu, double alpha, BoundCase bc, ObsPairing pairing) {
  if (!p.box.contains(mu))
    throw ConfigError("beta_lb: parameter outside the parameter box");
  if (!(alpha > 0.0)) throw ConfigError("beta_lb: alpha must be positive");

  const double gamma = p.constants.gamma_a(mu);
  if (!(gamma > 0.0)) throw NumericalError("beta_lb: nonpositive coercivity constant");

  switch (bc) {
    case BoundCase::control_equals_observation:
      return alpha * gamma;
    case BoundCase::control_bound: {
      const double q = p.constants.c_c * p.constants.c_u / (alpha * gamma);
      return gamma / std::sqrt(2.0 * std::max(1.0, q * q));
    }
    case BoundCase::observation_bound: {
      const double cm =
          (pairing == ObsPairing::cm_cobs) ? p.constants.c_m(mu) : p.constants.c_c;
      const double q = cm * p.constants.c_obs / (alpha * gamma);
      return gamma / std::sqrt(2.0 * std::max(1.0, q * q));
    }
  }
  throw ConfigError("beta_lb: invalid bound case");
}

namespace {

Vec det_seed(Eigen::Index n, int k) {
  if (k == 0) return Vec::Ones(n);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = std::cos(k * M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(n)) + 0.01 * k;
  return v;
}

void x_orth(Mat& V, const SpMat& X, int& seed_counter) {
  for (int c = 0; c < V.cols(); ++c) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < c; ++j) V.col(c) -= V.col(j).dot(X * V.col(c)) * V.col(j);
      double nrm = std::sqrt(V.col(c).dot(X * V.col(c)));
      if (nrm > 1e-12) {
        V.col(c) /= nrm;
        break;
      }
      V.col(c) = det_seed(V.rows(), ++seed_counter);
    }
  }
}

}  // namespace

double beta_exact(const SpMat& B, const QNorm& qn, BetaExactOptions opts) {
  const Eigen::Index n2 = B.rows();
  if (B.cols() != n2) throw std::invalid_argument("beta_exact: matrix not square");
  if (n2 != 2 * static_cast<Eigen::Index>(qn.n_total()))
    throw std::invalid_argument("beta_exact: norm/system size mismatch");

  // X = blockdiag(dt X_sp) over both trial slots
  SpMat X(n2, n2);
  {
    std::vector<Triplet> trips;
    const Eigen::Index n = qn.X.rows();
    for (int slot = 0; slot < 2; ++slot)
      for (int k = 0; k < qn.n_t; ++k) {
        Eigen::Index off = static_cast<Eigen::Index>(slot) * qn.n_total() +
                           static_cast<Eigen::Index>(k) * n;
        for (int c = 0; c < qn.X.outerSize(); ++c)
          for (SpMat::InnerIterator it(qn.X, c); it; ++it)
            trips.emplace_back(static_cast<int>(off + it.row()), static_cast<int>(off + it.col()),
                               qn.dt * it.value());
      }
    X.setFromTriplets(trips.begin(), trips.end());
    X.makeCompressed();
  }

  Eigen::SparseLU<SpMat> lu(B);
  if (lu.info() != Eigen::Success)
    throw NumericalError("beta_exact: system matrix factorization failed (singular?)");

  // Inverse iteration on the pencil B' X^{-1} B v = lambda X v: the operator
  // T = B^{-1} X B^{-T} X is self-adjoint in the X inner product with
  // eigenvalues 1/lambda, so the largest Ritz value of T gives lambda_min.
  const int b = static_cast<int>(std::min<Eigen::Index>(opts.block_size, n2));
  int seed_counter = 0;
  Mat V(n2, b);
  for (int c = 0; c < b; ++c) V.col(c) = det_seed(n2, c);
  x_orth(V, X, seed_counter);

  double theta_prev = -1.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Mat W(n2, b);
    for (int c = 0; c < b; ++c) W.col(c) = lu.transpose().solve(Vec(X * V.col(c)));
    Mat H(b, b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j <= i; ++j) {
        H(i, j) = W.col(i).dot(X * W.col(j));
        H(j, i) = H(i, j);
      }
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    if (es.info() != Eigen::Success) throw NumericalError("beta_exact: Ritz solve failed");
    const double theta = es.eigenvalues()(b - 1);  // = 1/lambda_min estimate
    if (!(theta > 0.0)) throw NumericalError("beta_exact: nonpositive Ritz value");

    // next subspace: T V = B^{-1} (X W)
    Mat TV(n2, b);
    for (int c = 0; c < b; ++c) TV.col(c) = lu.solve(Vec(X * W.col(c)));

    // residual of the dominant Ritz pair, measured in the X norm
    Vec y = es.eigenvectors().col(b - 1);
    Vec v = V * y;
    Vec tv = TV * y;
    Vec r = tv - theta * v;
    double res = std::sqrt(std::max(r.dot(X * r), 0.0));
    bool stag = std::abs(theta - theta_prev) <= opts.tol * theta;
    theta_prev = theta;
    if (stag && res <= opts.res_tol * theta) return std::sqrt(1.0 / theta);

    V = TV;
    x_orth(V, X, seed_counter);
  }
  throw NumericalError("beta_exact did not converge within " + std::to_string(opts.max_iters) +
                       " iterations");
}

StabilityReport infsup_sweep(const OcpProblem& p, const std::vector<double>& mu1_grid, double mu2,
                             double mu3, const std::vector<double>& alphas, const TimeGrid* grid,
                             BoundCase bc, ObsPairing pairing) {
  if (mu1_grid.empty() || alphas.empty())
    throw ConfigError("infsup_sweep: empty mu1 grid or alpha list");

  StabilityReport rep;
  rep.mode = grid ? "unsteady" : "steady";
  rep.problem_id = p.id;
  rep.bound_case = bc;

  QNorm qn = make_qnorm(p, grid);
  for (double m1 : mu1_grid) {
    for (double a : alphas) {
      Mu mu(m1, mu2, mu3);
      SpaceTimeBlockSystem sys =
          grid ? assemble_hf_system(p, mu, *grid, a) : assemble_steady_system(p, mu, a);
      StabilityRow row;
      row.mu = mu;
      row.alpha = a;
      row.beta_lower = beta_lb(p, mu, a, bc, pairing);
      row.beta_ex = beta_exact(sys.monolithic(), qn);
      row.ratio = row.beta_ex / row.beta_lower;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace strb
