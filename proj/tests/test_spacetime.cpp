#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "strb/discrete.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <random>

using namespace strb;

namespace {

OcpProblem make_b1(int n) {
  return instantiate_graetz_distributed(build_structured_mesh(n, n, graetz_distributed_geometry()));
}

OcpProblem make_b2(int n) {
  return instantiate_graetz_boundary(build_structured_mesh(n, n, graetz_boundary_geometry()));
}

Mat free_block(const OcpProblem& p, const AffineForm& form, const Mu& mu, double alpha) {
  return Mat(restrict_to_free(affine_matrix(form, theta_eval(form, p.box, mu, alpha)), p.fe));
}

// Independent all-at-once assembly: dense block placement straight from the
// two-field optimality layout
//   [ dt*M      K^T       ] [y]   [dt * (yd load + obs lift)]
//   [ K     -(dt/alpha)*C ] [p] = [dt * state lift           ]
// with K = I (x) (S + dt*D_a) - L (x) S  (steady: K = D_a, dt = 1).
Mat naive_system(const OcpProblem& p, const Mu& mu, double alpha, const TimeGrid* grid) {
  const int n = p.fe.n_free();
  const int nt = grid ? grid->n_t : 1;
  const double dt = grid ? grid->T / grid->n_t : 1.0;

  Mat Da = free_block(p, p.a, mu, alpha);
  Mat M = free_block(p, p.m_obs, mu, alpha);
  Mat C = free_block(p, p.c_ctrl, mu, alpha);
  Mat Kd, Ks;
  if (grid) {
    Mat S = free_block(p, p.s_mass, mu, alpha);
    Kd = S + dt * Da;
    Ks = -S;
  } else {
    Kd = Da;
  }

  const int nst = n * nt;
  Mat B = Mat::Zero(2 * nst, 2 * nst);
  for (int k = 0; k < nt; ++k) {
    B.block(k * n, k * n, n, n) = dt * M;
    B.block(k * n, nst + k * n, n, n) = Kd.transpose();
    if (grid && k + 1 < nt) B.block(k * n, nst + (k + 1) * n, n, n) = Ks.transpose();
    B.block(nst + k * n, k * n, n, n) = Kd;
    if (grid && k > 0) B.block(nst + k * n, (k - 1) * n, n, n) = Ks;
    B.block(nst + k * n, nst + k * n, n, n) = -(dt / alpha) * C;
  }
  return B;
}

Vec naive_load(const OcpProblem& p, const AffineForm& form, const Mu& mu, double alpha, int nt,
               double dt) {
  Vec f = Vec::Zero(p.fe.n_free());
  if (!form.terms.empty()) {
    auto th = theta_eval(form, p.box, mu, alpha);
    f = restrict_to_free(affine_vector(form, th, p.fe.n_dofs), p.fe);
  }
  Vec out(static_cast<Eigen::Index>(p.fe.n_free()) * nt);
  for (int k = 0; k < nt; ++k)
    out.segment(static_cast<Eigen::Index>(k) * p.fe.n_free(), p.fe.n_free()) = dt * f;
  return out;
}

double rel_max_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(a.cwiseAbs().maxCoeff(), 1e-300);
}

// time-stepped state solve with the control switched off (p = 0)
Vec uncontrolled_state(const SpaceTimeBlockSystem& sys) {
  Eigen::SparseLU<SpMat> lu(sys.K_diag);
  REQUIRE(lu.info() == Eigen::Success);
  Vec y(sys.n_total());
  Vec prev = Vec::Zero(sys.n_free);
  for (int k = 0; k < sys.n_t; ++k) {
    Vec rhs = sys.rhs_state.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free);
    if (sys.K_sub.rows() > 0) rhs -= sys.K_sub * prev;
    prev = lu.solve(rhs);
    y.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free) = prev;
  }
  return y;
}

}  // namespace

TEST_CASE("all-at-once system matches the naive block oracle") {
  OcpProblem p = make_b1(2);
  REQUIRE(p.fe.n_free() <= 30);
  TimeGrid grid{1.2, 3};
  std::mt19937_64 rng(5);

  for (int trial = 0; trial < 3; ++trial) {
    Mu mu = p.box.sample(rng);
    const double alpha = 0.01;

    // unsteady
    {
      SpaceTimeBlockSystem sys = assemble_hf_system(p, mu, grid, alpha);
      DiscreteOcp disc = make_discrete(p, &grid);
      Mat want = naive_system(p, mu, alpha, &grid);
      CHECK(rel_max_diff(Mat(sys.monolithic()), want) < 1e-13);
      CHECK(rel_max_diff(Mat(disc.monolithic(mu, alpha)), want) < 1e-13);

      Vec want_q = naive_load(p, p.load_yd, mu, alpha, grid.n_t, grid.dt());
      if (!p.rhs_obs_lift.terms.empty())
        want_q += naive_load(p, p.rhs_obs_lift, mu, alpha, grid.n_t, grid.dt());
      Vec want_z = naive_load(p, p.rhs_state_lift, mu, alpha, grid.n_t, grid.dt());
      CHECK((sys.rhs_adjoint - want_q).lpNorm<Eigen::Infinity>() <
            1e-13 * want_q.lpNorm<Eigen::Infinity>());
      CHECK((sys.rhs_state - want_z).lpNorm<Eigen::Infinity>() <
            1e-13 * want_z.lpNorm<Eigen::Infinity>());
      CHECK((disc.load_at(mu, alpha, TestSlot::q) - want_q).lpNorm<Eigen::Infinity>() <
            1e-13 * want_q.lpNorm<Eigen::Infinity>());
      CHECK((disc.load_at(mu, alpha, TestSlot::z) - want_z).lpNorm<Eigen::Infinity>() <
            1e-13 * want_z.lpNorm<Eigen::Infinity>());

      // residual F - B x for a random trial pair
      Vec y = Vec::Random(disc.n_st()), pp = Vec::Random(disc.n_st());
      Vec rq, rz;
      disc.residual(mu, alpha, y, pp, rq, rz);
      Vec x(2 * disc.n_st());
      x << y, pp;
      Vec full = want * x;
      CHECK((rq - (want_q - full.head(disc.n_st()))).lpNorm<Eigen::Infinity>() <
            1e-12 * full.lpNorm<Eigen::Infinity>());
      CHECK((rz - (want_z - full.tail(disc.n_st()))).lpNorm<Eigen::Infinity>() <
            1e-12 * full.lpNorm<Eigen::Infinity>());
    }
    // steady
    {
      SpaceTimeBlockSystem sys = assemble_steady_system(p, mu, alpha);
      DiscreteOcp disc = make_discrete(p, nullptr);
      Mat want = naive_system(p, mu, alpha, nullptr);
      CHECK(rel_max_diff(Mat(sys.monolithic()), want) < 1e-13);
      CHECK(rel_max_diff(Mat(disc.monolithic(mu, alpha)), want) < 1e-13);
      CHECK(sys.n_t == 1);
      CHECK(sys.dt == 1.0);
      CHECK(sys.K_sub.rows() == 0);
    }
  }
}

TEST_CASE("time grid validation and extrapolation gating") {
  OcpProblem p = make_b1(2);
  TimeGrid bad1{0.0, 3};
  TimeGrid bad2{1.0, 0};
  CHECK_THROWS_AS(assemble_hf_system(p, p.box.midpoint(), bad1, 0.01), ConfigError);
  CHECK_THROWS_AS(assemble_hf_system(p, p.box.midpoint(), bad2, 0.01), ConfigError);

  Mu outside(2.0, 1.0, 2.0);
  TimeGrid grid{1.0, 2};
  CHECK_THROWS_AS(assemble_hf_system(p, outside, grid, 0.01), ConfigError);
  CHECK_NOTHROW(assemble_hf_system(p, outside, grid, 0.01, /*allow_outside=*/true));
}

TEST_CASE("norm machinery: block norm, application and inversion") {
  OcpProblem p = make_b1(4);
  TimeGrid grid{2.0, 4};
  QNorm qn = make_qnorm(p, &grid);
  CHECK(qn.n_t == 4);
  CHECK(qn.dt == 0.5);
  CHECK(qn.n_total() == p.fe.n_free() * 4);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  Vec v(qn.n_total());
  for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);

  // norm^2 == v' (dt blockdiag X) v
  double n2 = spacetime_norm(v, qn);
  CHECK(n2 * n2 == doctest::Approx(v.dot(apply_qnorm(qn, v))).epsilon(1e-12));

  // solver inverts the weighted matrix
  QNormSolver solver(qn);
  Vec w = solver.solve(v);
  CHECK((apply_qnorm(qn, w) - v).norm() < 1e-10 * v.norm());

  // the paired matrix is the same norm stacked over [y; p]
  DiscreteOcp disc = make_discrete(p, &grid);
  SpMat Xp = disc.norm_matrix_pair();
  Vec vv(2 * qn.n_total());
  vv << v, 2.0 * v;
  double q = vv.dot(Xp * vv);
  CHECK(q == doctest::Approx(5.0 * v.dot(apply_qnorm(qn, v))).epsilon(1e-12));
}

TEST_CASE("high-fidelity solve: residual and first-order optimality") {
  for (bool boundary : {false, true}) {
    OcpProblem p = boundary ? make_b2(5) : make_b1(5);
    const double alpha = boundary ? 0.07 : 0.01;
    TimeGrid grid{1.5, 5};
    Mu mu = p.box.midpoint();

    SpaceTimeBlockSystem sys = assemble_hf_system(p, mu, grid, alpha);
    Snapshot snap = solve_hf(sys, "test");

    SpMat B = sys.monolithic();
    Vec rhs(2 * sys.n_total());
    rhs.head(sys.n_total()) = sys.rhs_adjoint;
    rhs.tail(sys.n_total()) = sys.rhs_state;
    Vec x(2 * sys.n_total());
    x << snap.y, snap.p;
    CHECK((B * x - rhs).norm() < 1e-10 * rhs.norm());

    // direct dual residual vanishes at the exact solution
    DiscreteOcp disc = make_discrete(p, &grid);
    double at_solution = residual_dual_norm_direct(disc, mu, alpha, snap.y, snap.p);
    double at_zero = residual_dual_norm_direct(disc, mu, alpha, Vec::Zero(disc.n_st()),
                                               Vec::Zero(disc.n_st()));
    CHECK(at_zero > 0.0);
    CHECK(at_solution < 1e-8 * at_zero);
  }
}

TEST_CASE("the optimal control does not lose to the uncontrolled trajectory") {
  for (bool boundary : {false, true}) {
    OcpProblem p = boundary ? make_b2(5) : make_b1(5);
    const double alpha = boundary ? 0.07 : 0.01;
    std::mt19937_64 rng(boundary ? 71 : 70);
    for (int trial = 0; trial < 3; ++trial) {
      Mu mu = p.box.sample(rng);
      for (bool unsteady : {false, true}) {
        TimeGrid grid{2.0, 4};
        SpaceTimeBlockSystem sys = unsteady ? assemble_hf_system(p, mu, grid, alpha)
                                            : assemble_steady_system(p, mu, alpha);
        Snapshot opt = solve_hf(sys, "optimality test");
        double j_opt = cost_functional(p, mu, alpha, sys, opt);

        Snapshot unc;
        unc.y = uncontrolled_state(sys);
        unc.p = Vec::Zero(sys.n_total());
        double j_unc = cost_functional(p, mu, alpha, sys, unc);

        CHECK(j_opt >= -1e-12);
        CHECK(j_opt <= j_unc + 1e-12 * (1.0 + std::abs(j_unc)));
      }
    }
  }
}

TEST_CASE("long-horizon parabolic solution reaches the steady state mid-horizon") {
  OcpProblem p = make_b1(5);
  const double alpha = 0.01;
  Mu mu = p.box.midpoint();

  TimeGrid grid{20.0, 20};
  Snapshot unst = solve_hf(assemble_hf_system(p, mu, grid, alpha), "long horizon");
  Snapshot stdy = solve_hf(assemble_steady_system(p, mu, alpha), "steady");

  const int n = p.fe.n_free();
  const int mid = grid.n_t / 2;
  Vec y_mid = unst.y.segment(static_cast<Eigen::Index>(mid) * n, n);
  Vec p_mid = unst.p.segment(static_cast<Eigen::Index>(mid) * n, n);

  QNorm qs = make_qnorm(p, nullptr);
  double dy = spacetime_norm(y_mid - stdy.y, qs) / spacetime_norm(stdy.y, qs);
  double dp = spacetime_norm(p_mid - stdy.p, qs) / std::max(spacetime_norm(stdy.p, qs), 1e-300);
  CHECK(dy < 1e-6);
  CHECK(dp < 1e-6);
}
