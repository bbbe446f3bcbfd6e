#include "strb/discrete.hpp"

#include <cmath>

namespace strb {

double spacetime_norm(const Vec& v, const QNorm& qn) {
  const int n = static_cast<int>(qn.X.rows());
  if (v.size() != static_cast<Eigen::Index>(n) * qn.n_t)
    throw std::invalid_argument("spacetime_norm: vector/grid size mismatch");
  double acc = 0.0;
  for (int k = 0; k < qn.n_t; ++k) {
    auto vk = v.segment(static_cast<Eigen::Index>(k) * n, n);
    acc += qn.dt * vk.dot(qn.X * vk);
  }
  // The quadratic form is SPD; tiny negative round-off is clamped.
  return std::sqrt(std::max(acc, 0.0));
}

Vec apply_qnorm(const QNorm& qn, const Vec& v) {
  const int n = static_cast<int>(qn.X.rows());
  Vec out(v.size());
  for (int k = 0; k < qn.n_t; ++k)
    out.segment(static_cast<Eigen::Index>(k) * n, n) =
        qn.dt * (qn.X * v.segment(static_cast<Eigen::Index>(k) * n, n));
  return out;
}

QNormSolver::QNormSolver(const QNorm& qn) : qn_(qn) {
  ldlt_.compute(qn_.X);
  if (ldlt_.info() != Eigen::Success)
    throw NumericalError("spatial norm matrix factorization failed");
}

Vec QNormSolver::solve(const Vec& v) const {
  const int n = static_cast<int>(qn_.X.rows());
  Vec out(v.size());
  for (int k = 0; k < qn_.n_t; ++k)
    out.segment(static_cast<Eigen::Index>(k) * n, n) =
        ldlt_.solve(v.segment(static_cast<Eigen::Index>(k) * n, n)) / qn_.dt;
  return out;
}

QNorm make_qnorm(const OcpProblem& p, const TimeGrid* grid) {
  QNorm qn;
  qn.X = p.x_space;
  if (grid) {
    if (grid->n_t < 1 || !(grid->T > 0.0)) throw ConfigError("invalid time grid");
    qn.n_t = grid->n_t;
    qn.dt = grid->dt();
  }
  return qn;
}

namespace {

// Scatter a spatial sparse block into the space-time triplet list at block
// offsets (row0 + k*n, col0 + l*n), optionally transposed.
void scatter_block(std::vector<Triplet>& trips, const SpMat& A, bool transpose, double w,
                   Eigen::Index row0, Eigen::Index col0) {
  if (w == 0.0) return;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it) {
      Eigen::Index r = transpose ? it.col() : it.row();
      Eigen::Index c = transpose ? it.row() : it.col();
      trips.emplace_back(static_cast<int>(row0 + r), static_cast<int>(col0 + c), w * it.value());
    }
}

}  // namespace

SpMat SpaceTimeBlockSystem::monolithic() const {
  const Eigen::Index n = n_free;
  const Eigen::Index nt = n_t;
  const Eigen::Index nst = n * nt;
  std::vector<Triplet> trips;

  for (Eigen::Index k = 0; k < nt; ++k) {
    // observation equation rows (tested with q): dt*M y + K^T p
    scatter_block(trips, M_block, false, dt, k * n, k * n);
    scatter_block(trips, K_diag, true, 1.0, k * n, nst + k * n);
    if (K_sub.rows() > 0 && k + 1 < nt)
      scatter_block(trips, K_sub, true, 1.0, k * n, nst + (k + 1) * n);
    // state equation rows (tested with z): K y - (dt/alpha) C p
    scatter_block(trips, K_diag, false, 1.0, nst + k * n, k * n);
    if (K_sub.rows() > 0 && k > 0) scatter_block(trips, K_sub, false, 1.0, nst + k * n, (k - 1) * n);
    scatter_block(trips, C_block, false, -dt / alpha, nst + k * n, nst + k * n);
  }

  SpMat B(2 * nst, 2 * nst);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

namespace {

SpaceTimeBlockSystem assemble_core(const OcpProblem& p, const Mu& mu, const TimeGrid* grid,
                                   double alpha, bool allow_outside) {
  SpaceTimeBlockSystem sys;
  sys.unsteady = grid != nullptr;
  sys.n_t = sys.unsteady ? grid->n_t : 1;
  sys.dt = sys.unsteady ? grid->dt() : 1.0;
  sys.alpha = alpha;
  sys.n_free = p.fe.n_free();
  if (sys.unsteady && (grid->n_t < 1 || !(grid->T > 0.0)))
    throw ConfigError("invalid time grid");

  const auto th_a = theta_eval(p.a, p.box, mu, alpha, allow_outside);
  const auto th_m = theta_eval(p.m_obs, p.box, mu, alpha, allow_outside);
  const auto th_c = theta_eval(p.c_ctrl, p.box, mu, alpha, allow_outside);

  SpMat Da = restrict_to_free(affine_matrix(p.a, th_a), p.fe);
  sys.M_block = restrict_to_free(affine_matrix(p.m_obs, th_m), p.fe);
  sys.C_block = restrict_to_free(affine_matrix(p.c_ctrl, th_c), p.fe);

  if (sys.unsteady) {
    const auto th_s = theta_eval(p.s_mass, p.box, mu, alpha, allow_outside);
    SpMat S = restrict_to_free(affine_matrix(p.s_mass, th_s), p.fe);
    sys.K_diag = S + sys.dt * Da;
    sys.K_sub = -S;
  } else {
    sys.K_diag = Da;
    sys.K_sub = SpMat();
  }

  // Per-slab loads (the data are constant in time): observation rows get the
  // desired-state load plus the lifting correction, state rows the lifting
  // moved across from the operator.  Everything is dt-weighted; the S*y0
  // contribution of the first state row vanishes because the homogeneous
  // initial value is zero.
  Vec load_q = Vec::Zero(p.fe.n_free());
  {
    const auto th = theta_eval(p.load_yd, p.box, mu, alpha, allow_outside);
    load_q += restrict_to_free(affine_vector(p.load_yd, th, p.fe.n_dofs), p.fe);
  }
  if (!p.rhs_obs_lift.terms.empty()) {
    const auto th = theta_eval(p.rhs_obs_lift, p.box, mu, alpha, allow_outside);
    load_q += restrict_to_free(affine_vector(p.rhs_obs_lift, th, p.fe.n_dofs), p.fe);
  }
  Vec load_z = Vec::Zero(p.fe.n_free());
  if (!p.rhs_state_lift.terms.empty()) {
    const auto th = theta_eval(p.rhs_state_lift, p.box, mu, alpha, allow_outside);
    load_z += restrict_to_free(affine_vector(p.rhs_state_lift, th, p.fe.n_dofs), p.fe);
  }

  sys.rhs_adjoint.resize(static_cast<Eigen::Index>(sys.n_free) * sys.n_t);
  sys.rhs_state.resize(static_cast<Eigen::Index>(sys.n_free) * sys.n_t);
  for (int k = 0; k < sys.n_t; ++k) {
    sys.rhs_adjoint.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free) =
        sys.dt * load_q;
    sys.rhs_state.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free) = sys.dt * load_z;
  }
  return sys;
}

}  // namespace

SpaceTimeBlockSystem assemble_hf_system(const OcpProblem& p, const Mu& mu, const TimeGrid& grid,
                                        double alpha, bool allow_outside) {
  return assemble_core(p, mu, &grid, alpha, allow_outside);
}

SpaceTimeBlockSystem assemble_steady_system(const OcpProblem& p, const Mu& mu, double alpha,
                                            bool allow_outside) {
  return assemble_core(p, mu, nullptr, alpha, allow_outside);
}

Snapshot solve_hf(const SpaceTimeBlockSystem& sys, const std::string& context) {
  const Eigen::Index nst = sys.n_total();
  SpMat B = sys.monolithic();
  Vec rhs(2 * nst);
  rhs.head(nst) = sys.rhs_adjoint;
  rhs.tail(nst) = sys.rhs_state;

  Eigen::SparseLU<SpMat> lu(B);
  if (lu.info() != Eigen::Success)
    throw NumericalError("high-fidelity factorization failed" +
                         (context.empty() ? "" : " at " + context));
  Vec sol = lu.solve(rhs);

  double rn = (B * sol - rhs).norm();
  double scale = std::max(rhs.norm(), 1e-300);
  if (!(rn <= 1e-10 * scale) && rhs.norm() > 0.0)
    throw NumericalError("high-fidelity solve residual " + std::to_string(rn / scale) +
                         " exceeds 1e-10" + (context.empty() ? "" : " at " + context));

  Snapshot snap;
  snap.y = sol.head(nst);
  snap.p = sol.tail(nst);
  return snap;
}

double cost_functional(const OcpProblem& p, const Mu& mu, double alpha,
                       const SpaceTimeBlockSystem& sys, const Snapshot& snap,
                       bool allow_outside) {
  const auto th_m = theta_eval(p.m_obs, p.box, mu, alpha, allow_outside);
  const auto th_c = theta_eval(p.c_ctrl, p.box, mu, alpha, allow_outside);
  const auto th_d = theta_eval(p.load_yd, p.box, mu, alpha, allow_outside);
  SpMat M = affine_matrix(p.m_obs, th_m);
  SpMat C = affine_matrix(p.c_ctrl, th_c);
  Vec lyd = affine_vector(p.load_yd, th_d, p.fe.n_dofs);
  const double ydsq = p.yd_square_integral(mu);

  double J = 0.0;
  for (int k = 0; k < sys.n_t; ++k) {
    Vec yk = extend_to_full(snap.y.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free),
                            p.fe, &p.lifting);
    Vec pk = extend_to_full(snap.p.segment(static_cast<Eigen::Index>(k) * sys.n_free, sys.n_free),
                            p.fe);
    double track = yk.dot(M * yk) - 2.0 * yk.dot(lyd) + ydsq;
    double penalty = pk.dot(C * pk) / alpha;  // alpha/2 |u|^2 with u = p/alpha
    J += 0.5 * sys.dt * (track + penalty);
  }
  return J;
}

// ---------------------------------------------------------------------------
// affine skeleton

void DiscreteOcp::apply_term(const OperatorTerm& t, const Vec& in, Vec& out, double scale) const {
  const int n = n_free;
  const SpMat& A = *t.A;
  auto seg = [n](const Vec& v, int k) { return v.segment(static_cast<Eigen::Index>(k) * n, n); };
  auto oseg = [n](Vec& v, int k) { return v.segment(static_cast<Eigen::Index>(k) * n, n); };

  if (t.coupling == TimeCoupling::scaled_mass) {
    const double w = scale * dt;
    for (int k = 0; k < n_t; ++k) {
      if (t.transpose_spatial)
        oseg(out, k).noalias() += w * (A.transpose() * seg(in, k));
      else
        oseg(out, k).noalias() += w * (A * seg(in, k));
    }
    return;
  }
  // time_derivative: (I - L) kron A rows k: A in_k - A in_{k-1};
  // transposed variant couples forward instead.
  for (int k = 0; k < n_t; ++k) {
    Vec d = seg(in, k);
    if (!t.transpose_time && k > 0) d -= seg(in, k - 1);
    if (t.transpose_time && k + 1 < n_t) d -= seg(in, k + 1);
    if (t.transpose_spatial)
      oseg(out, k).noalias() += scale * (A.transpose() * d);
    else
      oseg(out, k).noalias() += scale * (A * d);
  }
}

Vec DiscreteOcp::expand_load(const LoadTerm& t) const {
  Vec out(n_st());
  for (int k = 0; k < n_t; ++k)
    out.segment(static_cast<Eigen::Index>(k) * n_free, n_free) = dt * (*t.f);
  return out;
}

Vec DiscreteOcp::load_at(const Mu& mu, double alpha, TestSlot slot) const {
  Vec out = Vec::Zero(n_st());
  for (const auto& t : loads) {
    if (t.row != slot) continue;
    double th = t.theta(mu, alpha);
    for (int k = 0; k < n_t; ++k)
      out.segment(static_cast<Eigen::Index>(k) * n_free, n_free) += th * dt * (*t.f);
  }
  return out;
}

void DiscreteOcp::residual(const Mu& mu, double alpha, const Vec& y, const Vec& p, Vec& r_q,
                           Vec& r_z) const {
  r_q = load_at(mu, alpha, TestSlot::q);
  r_z = load_at(mu, alpha, TestSlot::z);
  for (const auto& t : ops) {
    const Vec& in = (t.col == TrialSlot::y) ? y : p;
    Vec& out = (t.row == TestSlot::q) ? r_q : r_z;
    apply_term(t, in, out, -t.theta(mu, alpha));
  }
}

SpMat DiscreteOcp::monolithic(const Mu& mu, double alpha) const {
  const Eigen::Index n = n_free;
  const Eigen::Index nst = n_st();
  std::vector<Triplet> trips;
  for (const auto& t : ops) {
    const double th = t.theta(mu, alpha);
    if (th == 0.0) continue;
    const Eigen::Index row0 = (t.row == TestSlot::q) ? 0 : nst;
    const Eigen::Index col0 = (t.col == TrialSlot::y) ? 0 : nst;
    if (t.coupling == TimeCoupling::scaled_mass) {
      for (int k = 0; k < n_t; ++k)
        scatter_block(trips, *t.A, t.transpose_spatial, th * dt, row0 + k * n, col0 + k * n);
    } else {
      for (int k = 0; k < n_t; ++k) {
        scatter_block(trips, *t.A, t.transpose_spatial, th, row0 + k * n, col0 + k * n);
        if (!t.transpose_time && k > 0)
          scatter_block(trips, *t.A, t.transpose_spatial, -th, row0 + k * n, col0 + (k - 1) * n);
        if (t.transpose_time && k + 1 < n_t)
          scatter_block(trips, *t.A, t.transpose_spatial, -th, row0 + k * n, col0 + (k + 1) * n);
      }
    }
  }
  SpMat B(2 * nst, 2 * nst);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

SpMat DiscreteOcp::norm_matrix_pair() const {
  const Eigen::Index n = n_free;
  std::vector<Triplet> trips;
  for (int slot = 0; slot < 2; ++slot)
    for (int k = 0; k < n_t; ++k) {
      Eigen::Index off = static_cast<Eigen::Index>(slot) * n_st() + static_cast<Eigen::Index>(k) * n;
      scatter_block(trips, qnorm.X, false, dt, off, off);
    }
  SpMat X(2 * n_st(), 2 * n_st());
  X.setFromTriplets(trips.begin(), trips.end());
  X.makeCompressed();
  return X;
}

DiscreteOcp make_discrete(const OcpProblem& p, const TimeGrid* grid) {
  DiscreteOcp d;
  d.prob = &p;
  d.unsteady = grid != nullptr;
  d.n_t = d.unsteady ? grid->n_t : 1;
  d.dt = d.unsteady ? grid->dt() : 1.0;
  d.n_free = p.fe.n_free();
  d.qnorm = make_qnorm(p, grid);
  d.qsolver = std::make_shared<const QNormSolver>(d.qnorm);

  auto restricted = [&p](const AffineForm& form) {
    std::vector<std::shared_ptr<const SpMat>> out;
    for (const auto& t : form.terms)
      out.push_back(std::make_shared<const SpMat>(restrict_to_free(*t.matrix, p.fe)));
    return out;
  };

  auto add_op = [&d](std::string label, std::function<double(const Mu&, double)> th,
                     std::shared_ptr<const SpMat> A, TestSlot row, TrialSlot col, bool tr_sp,
                     TimeCoupling cpl, bool tr_t) {
    OperatorTerm t;
    t.label = std::move(label);
    t.theta = std::move(th);
    t.A = std::move(A);
    t.row = row;
    t.col = col;
    t.transpose_spatial = tr_sp;
    t.coupling = cpl;
    t.transpose_time = tr_t;
    d.ops.push_back(std::move(t));
  };

  if (d.unsteady) {
    auto S = restricted(p.s_mass);
    for (std::size_t l = 0; l < S.size(); ++l) {
      const auto& term = p.s_mass.terms[l];
      add_op("s:" + term.label, term.theta, S[l], TestSlot::z, TrialSlot::y, false,
             TimeCoupling::time_derivative, false);
      add_op("s_adj:" + term.label, term.theta, S[l], TestSlot::q, TrialSlot::p, true,
             TimeCoupling::time_derivative, true);
    }
  }
  auto A = restricted(p.a);
  for (std::size_t l = 0; l < A.size(); ++l) {
    const auto& term = p.a.terms[l];
    add_op("a:" + term.label, term.theta, A[l], TestSlot::z, TrialSlot::y, false,
           TimeCoupling::scaled_mass, false);
    add_op("a_adj:" + term.label, term.theta, A[l], TestSlot::q, TrialSlot::p, true,
           TimeCoupling::scaled_mass, false);
  }
  auto M = restricted(p.m_obs);
  for (std::size_t l = 0; l < M.size(); ++l) {
    const auto& term = p.m_obs.terms[l];
    add_op("m:" + term.label, term.theta, M[l], TestSlot::q, TrialSlot::y, false,
           TimeCoupling::scaled_mass, false);
  }
  auto C = restricted(p.c_ctrl);
  for (std::size_t l = 0; l < C.size(); ++l) {
    const auto& term = p.c_ctrl.terms[l];
    auto base = term.theta;
    add_op("c:" + term.label, [base](const Mu& mu, double alpha) { return -base(mu, alpha) / alpha; },
           C[l], TestSlot::z, TrialSlot::p, false, TimeCoupling::scaled_mass, false);
  }

  auto add_loads = [&d, &p](const AffineForm& form, TestSlot slot, const char* prefix) {
    for (const auto& t : form.terms) {
      LoadTerm lt;
      lt.label = std::string(prefix) + ":" + t.label;
      lt.theta = t.theta;
      lt.f = std::make_shared<const Vec>(restrict_to_free(*t.vector, p.fe));
      lt.row = slot;
      d.loads.push_back(std::move(lt));
    }
  };
  add_loads(p.load_yd, TestSlot::q, "yd");
  add_loads(p.rhs_obs_lift, TestSlot::q, "olift");
  add_loads(p.rhs_state_lift, TestSlot::z, "slift");

  return d;
}

double residual_dual_norm_direct(const DiscreteOcp& d, const Mu& mu, double alpha, const Vec& y,
                                 const Vec& p) {
  Vec r_q, r_z;
  d.residual(mu, alpha, y, p, r_q, r_z);
  double sq = r_q.dot(d.qsolver->solve(r_q)) + r_z.dot(d.qsolver->solve(r_z));
  return std::sqrt(std::max(sq, 0.0));
}

}  // namespace strb
