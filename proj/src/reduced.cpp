#include "strb/reduced.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace strb {

namespace {

int row_offset(TestSlot s, int m) { return s == TestSlot::q ? 0 : m; }
int col_offset(TrialSlot s, int m) { return s == TrialSlot::y ? 0 : m; }

// Weights of the Riesz expansion of one test-slot residual component:
// loads first, then one entry per (basis column, operator term) pair with the
// column as the outer index.
Vec residual_weights(const ReducedModel::RieszPart& part, const DiscreteOcp& d, const Mu& mu,
                     double alpha, const Vec& coeffs, int m) {
  const int n_ops = static_cast<int>(part.op_ids.size());
  Vec w(static_cast<Eigen::Index>(part.load_ids.size()) + static_cast<Eigen::Index>(n_ops) * m);
  Eigen::Index at = 0;
  for (int lid : part.load_ids) w[at++] = d.loads[lid].theta(mu, alpha);
  for (int j = 0; j < m; ++j)
    for (int oid : part.op_ids) {
      const OperatorTerm& t = d.ops[oid];
      const double c = coeffs[col_offset(t.col, m) + j];
      w[at++] = -t.theta(mu, alpha) * c;
    }
  return w;
}

double part_square(const ReducedModel::RieszPart& part, const Vec& w) {
  // ||rfac * w||^2 = w' G w for the representer Gram matrix G, but summing
  // squares instead of differencing large Gram entries: nonnegative by
  // construction and accurate down to machine epsilon times the term scale.
  return (part.rfac.triangularView<Eigen::Upper>() * w).squaredNorm();
}

}  // namespace

Mat orthonormalize(const Mat& basis, const std::vector<Vec>& new_vecs, const QNorm& qn,
                   double drop_tol) {
  const Eigen::Index n = basis.rows() > 0 ? basis.rows()
                                          : (new_vecs.empty() ? 0 : new_vecs.front().size());
  Mat accepted(n, static_cast<Eigen::Index>(new_vecs.size()));
  Eigen::Index k = 0;
  for (const Vec& v : new_vecs) {
    if (v.size() != n) throw std::invalid_argument("orthonormalize: size mismatch");
    const double nrm0 = spacetime_norm(v, qn);
    if (!(nrm0 > 0.0)) continue;
    Vec w = v;
    for (int pass = 0; pass < 2; ++pass) {
      Vec xw = apply_qnorm(qn, w);
      if (basis.cols() > 0) w -= basis * (basis.transpose() * xw);
      if (k > 0) {
        xw = apply_qnorm(qn, w);
        w -= accepted.leftCols(k) * (accepted.leftCols(k).transpose() * xw);
      }
    }
    const double nrm = spacetime_norm(w, qn);
    if (nrm <= drop_tol * nrm0) continue;
    accepted.col(k++) = w / nrm;
  }
  return accepted.leftCols(k);
}

Vec ReducedModel::reduced_solve(const Mu& mu) const {
  if (!prob || !disc || n_cols() == 0)
    throw NumericalError("reduced_solve: empty or uninitialized model");
  if (!prob->box.contains(mu))
    throw ConfigError("reduced_solve: parameter outside the trained box");
  const int m = n_cols();
  const auto& d = *disc;

  Mat R = Mat::Zero(2 * m, 2 * m);
  for (std::size_t i = 0; i < d.ops.size(); ++i) {
    const OperatorTerm& t = d.ops[i];
    R.block(row_offset(t.row, m), col_offset(t.col, m), m, m) += t.theta(mu, alpha) * op_red[i];
  }
  Vec rhs = Vec::Zero(2 * m);
  for (std::size_t i = 0; i < d.loads.size(); ++i)
    rhs.segment(row_offset(d.loads[i].row, m), m) += d.loads[i].theta(mu, alpha) * load_red[i];

  Eigen::PartialPivLU<Mat> lu(R);
  Vec x = lu.solve(rhs);
  for (int it = 0; it < 3; ++it) {
    Vec r = rhs - R * x;
    if (r.norm() <= 1e-12 * std::max(rhs.norm(), R.norm() * x.norm())) break;
    x += lu.solve(r);
  }
  if (!x.allFinite()) throw NumericalError("reduced_solve: non-finite coefficients");
  return x;
}

double ReducedModel::residual_dual_norm(const Mu& mu, const Vec& coeffs) const {
  const int m = n_cols();
  if (coeffs.size() != 2 * m) throw std::invalid_argument("residual_dual_norm: bad coefficients");
  const auto& d = *disc;
  double total = 0.0;
  for (const RieszPart* part : {&part_q, &part_z})
    total += part_square(*part, residual_weights(*part, d, mu, alpha, coeffs, m));
  return std::sqrt(total);
}

double ReducedModel::delta_n(const Mu& mu, const Vec& coeffs, ObsPairing pairing) const {
  return delta_with_beta(mu, coeffs, beta_lb(*prob, mu, alpha, bound_case, pairing));
}

double ReducedModel::delta_with_beta(const Mu& mu, const Vec& coeffs, double beta) const {
  if (!(beta > 0.0)) throw NumericalError("error estimator: nonpositive stability constant");
  return residual_dual_norm(mu, coeffs) / beta;
}

void ReducedModel::reconstruct(const Vec& coeffs, Vec& y, Vec& p) const {
  const int m = n_cols();
  if (coeffs.size() != 2 * m) throw std::invalid_argument("reconstruct: bad coefficients");
  y = Z * coeffs.head(m);
  p = Z * coeffs.tail(m);
}

ReducedModel ReducedModel::truncated(int n_snap) const {
  if (n_snap < 1 || n_snap > n_snapshots())
    throw std::invalid_argument("truncated: snapshot count out of range");
  const int m = cols_after_snapshot[n_snap - 1];

  ReducedModel out;
  out.prob = prob;
  out.disc = disc;
  out.alpha = alpha;
  out.bound_case = bound_case;
  out.unsteady = unsteady;
  out.grid = grid;
  out.frozen = true;

  out.Z = Z.leftCols(m);
  out.cols_after_snapshot.assign(cols_after_snapshot.begin(),
                                 cols_after_snapshot.begin() + n_snap);
  out.sampled.assign(sampled.begin(), sampled.begin() + n_snap);
  out.op_red.reserve(op_red.size());
  for (const Mat& q : op_red) out.op_red.push_back(q.topLeftCorner(m, m));
  out.load_red.reserve(load_red.size());
  for (const Vec& v : load_red) out.load_red.push_back(v.head(m));

  auto cut = [m](const RieszPart& src) {
    RieszPart dst;
    dst.load_ids = src.load_ids;
    dst.op_ids = src.op_ids;
    const Eigen::Index keep = static_cast<Eigen::Index>(src.load_ids.size()) +
                              static_cast<Eigen::Index>(src.op_ids.size()) * m;
    // Columns are orthonormalized in index order, so the leading block of the
    // triangular factor is exactly the factor of the leading Gram block.
    dst.rfac = src.rfac.topLeftCorner(keep, keep);
    return dst;  // representers not carried: truncated copies are frozen
  };
  out.part_q = cut(part_q);
  out.part_z = cut(part_z);
  return out;
}

namespace {

// Appends one Riesz representer to a part, X_Q-orthonormalizing it against
// the previously accepted ones (classical Gram-Schmidt, applied twice).  The
// expansion coefficients land in a new trailing column of the triangular
// factor; a (near-)dependent representer keeps its honest remainder norm on
// the diagonal and contributes a zero direction.
void append_representer(ReducedModel::RieszPart& part, Vec r, const QNorm& qn) {
  const Eigen::Index idx = static_cast<Eigen::Index>(part.onb.size());
  if (part.rfac.rows() != idx)
    throw NumericalError("residual bookkeeping: representer basis out of sync");
  part.rfac.conservativeResize(idx + 1, idx + 1);
  if (idx > 0) part.rfac.row(idx).head(idx).setZero();

  const double nrm0 = spacetime_norm(r, qn);
  Vec c = Vec::Zero(idx);
  for (int pass = 0; pass < 2; ++pass) {
    Vec xr = apply_qnorm(qn, r);
    for (Eigen::Index e = 0; e < idx; ++e) {
      const double g = part.onb[e].dot(xr);
      c[e] += g;
      r -= g * part.onb[e];
    }
  }
  part.rfac.col(idx).head(idx) = c;
  const double rho = spacetime_norm(r, qn);
  part.rfac(idx, idx) = rho;
  if (rho > 1e-12 * nrm0)
    part.onb.push_back(r / rho);
  else
    part.onb.push_back(Vec::Zero(r.size()));
}

// Appends the Riesz representers of (operator term, new column) pairs and
// extends the factored Gram data.
void extend_riesz(ReducedModel::RieszPart& part, const DiscreteOcp& d, const Mat& Z, int old_m,
                  int new_m) {
  const int n_ops = static_cast<int>(part.op_ids.size());
  for (int j = old_m; j < new_m; ++j)
    for (int t = 0; t < n_ops; ++t) {
      const OperatorTerm& op = d.ops[part.op_ids[t]];
      Vec raw = Vec::Zero(d.n_st());
      d.apply_term(op, Z.col(j), raw);
      append_representer(part, d.qsolver->solve(raw), d.qnorm);
    }
}

}  // namespace

GreedyHistory greedy_build(ReducedModel& model, const OcpProblem& p,
                           const std::vector<Mu>& training, const GreedyOptions& opts) {
  if (training.empty()) throw ConfigError("greedy: empty training set");
  if (!(opts.tol > 0.0) || opts.max_iters < 1)
    throw ConfigError("greedy: tolerance and iteration cap must be positive");

  model = ReducedModel{};
  model.prob = &p;
  model.alpha = opts.alpha;
  model.bound_case = opts.bound_case;
  model.unsteady = opts.unsteady;
  model.grid = opts.unsteady ? opts.grid : TimeGrid{1.0, 1};
  model.disc = std::make_shared<DiscreteOcp>(make_discrete(p, opts.unsteady ? &model.grid : nullptr));
  const DiscreteOcp& d = *model.disc;
  const QNorm& qn = d.qnorm;

  auto init_part = [&](ReducedModel::RieszPart& part, TestSlot slot) {
    for (std::size_t i = 0; i < d.loads.size(); ++i)
      if (d.loads[i].row == slot) part.load_ids.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < d.ops.size(); ++i)
      if (d.ops[i].row == slot) part.op_ids.push_back(static_cast<int>(i));
    for (int lid : part.load_ids)
      append_representer(part, d.qsolver->solve(d.expand_load(d.loads[lid])), qn);
  };
  init_part(model.part_q, TestSlot::q);
  init_part(model.part_z, TestSlot::z);

  model.op_red.assign(d.ops.size(), Mat());
  model.load_red.assign(d.loads.size(), Vec());

  auto add_snapshot = [&](const Mu& mu) {
    SpaceTimeBlockSystem sys = opts.unsteady ? assemble_hf_system(p, mu, model.grid, opts.alpha)
                                             : assemble_steady_system(p, mu, opts.alpha);
    Snapshot snap = solve_hf(sys, "greedy snapshot");
    Mat acc = orthonormalize(model.Z, {snap.y, snap.p}, qn, opts.drop_tol);
    if (acc.cols() == 0) return false;

    const int old_m = model.n_cols();
    const int new_m = old_m + static_cast<int>(acc.cols());
    model.Z.conservativeResize(d.n_st(), new_m);
    model.Z.rightCols(acc.cols()) = acc;
    model.sampled.push_back(mu);
    model.cols_after_snapshot.push_back(new_m);

    for (std::size_t i = 0; i < d.ops.size(); ++i) {
      Mat AZ(d.n_st(), new_m);
      for (int j = 0; j < new_m; ++j) {
        Vec u = Vec::Zero(d.n_st());
        d.apply_term(d.ops[i], model.Z.col(j), u);
        AZ.col(j) = u;
      }
      model.op_red[i] = model.Z.transpose() * AZ;
    }
    for (std::size_t i = 0; i < d.loads.size(); ++i)
      model.load_red[i] = model.Z.transpose() * d.expand_load(d.loads[i]);

    extend_riesz(model.part_q, d, model.Z, old_m, new_m);
    extend_riesz(model.part_z, d, model.Z, old_m, new_m);
    return true;
  };

  GreedyHistory hist;
  if (!add_snapshot(p.box.midpoint()))
    throw NumericalError("greedy: degenerate initial snapshot");

  int iter = 0;
  while (true) {
    double dmax = -1.0;
    std::size_t best = 0;
    for (std::size_t idx = 0; idx < training.size(); ++idx) {
      Vec coeffs = model.reduced_solve(training[idx]);
      const double delta = model.delta_n(training[idx], coeffs, opts.pairing);
      if (!std::isfinite(delta))
        throw NumericalError("greedy: non-finite error estimator over the training set");
      if (delta > dmax) {
        dmax = delta;
        best = idx;
      }
    }
    hist.iters.push_back({iter, model.n_snapshots(), training[best], dmax});
    hist.final_delta_max = dmax;
    if (opts.log)
      (*opts.log) << "[greedy] iter=" << iter << " N=" << model.n_snapshots()
                  << " delta_max=" << dmax << " mu=(" << training[best][0] << ", "
                  << training[best][1] << ", " << training[best][2] << ")\n";
    if (dmax <= opts.tol) {
      hist.converged = true;
      break;
    }
    if (model.n_snapshots() >= opts.max_iters) break;
    if (!add_snapshot(training[best])) {
      hist.stagnated = true;
      break;
    }
    ++iter;
  }
  return hist;
}

Vec recover_control(const OcpProblem& p, double alpha, const Vec& p_traj) {
  const int n_free = p.fe.n_free();
  if (n_free == 0 || p_traj.size() % n_free != 0)
    throw std::invalid_argument("recover_control: trajectory size mismatch");
  if (!(alpha > 0.0)) throw ConfigError("recover_control: alpha must be positive");
  const int n_t = static_cast<int>(p_traj.size()) / n_free;
  Vec u = Vec::Zero(p_traj.size());
  for (int k = 0; k < n_t; ++k)
    for (int dof : p.control_dofs) u[k * n_free + dof] = p_traj[k * n_free + dof] / alpha;
  return u;
}

ErrorReport error_analysis(const ReducedModel& model, const std::vector<Mu>& test_set,
                           bool with_exact_beta, ObsPairing pairing) {
  if (test_set.empty()) throw ConfigError("error_analysis: empty test set");
  const OcpProblem& p = *model.prob;
  const DiscreteOcp& d = *model.disc;
  const int N = model.n_snapshots();

  std::vector<ReducedModel> truncs;
  truncs.reserve(N - 1);
  for (int n = 1; n < N; ++n) truncs.push_back(model.truncated(n));
  auto model_at = [&](int n) -> const ReducedModel& {
    return n < N ? truncs[n - 1] : model;
  };

  struct Acc {
    double rel = 0, abs = 0, delta = 0, eta = 0;
    double eta_min = std::numeric_limits<double>::infinity();
    double eta_max = 0;
    void add(double r, double a, double dl, double e) {
      rel += r;
      abs += a;
      delta += dl;
      eta += e;
      eta_min = std::min(eta_min, e);
      eta_max = std::max(eta_max, e);
    }
  };
  std::vector<Acc> acc_lb(N), acc_ex(N);

  for (const Mu& mu : test_set) {
    SpaceTimeBlockSystem sys = model.unsteady
                                   ? assemble_hf_system(p, mu, model.grid, model.alpha)
                                   : assemble_steady_system(p, mu, model.alpha);
    Snapshot truth = solve_hf(sys, "error_analysis truth");
    const double ny = spacetime_norm(truth.y, d.qnorm);
    const double np = spacetime_norm(truth.p, d.qnorm);
    const double truth_norm = std::sqrt(ny * ny + np * np);

    const double blb = beta_lb(p, mu, model.alpha, model.bound_case, pairing);
    double bex = 0.0;
    if (with_exact_beta) bex = beta_exact(d.monolithic(mu, model.alpha), d.qnorm);

    for (int n = 1; n <= N; ++n) {
      const ReducedModel& rm = model_at(n);
      Vec coeffs = rm.reduced_solve(mu);
      const double rn = rm.residual_dual_norm(mu, coeffs);
      Vec yr, pr;
      rm.reconstruct(coeffs, yr, pr);
      const double ey = spacetime_norm(truth.y - yr, d.qnorm);
      const double ep = spacetime_norm(truth.p - pr, d.qnorm);
      const double err = std::sqrt(ey * ey + ep * ep);
      const double err_safe = std::max(err, 1e-300);
      acc_lb[n - 1].add(err / std::max(truth_norm, 1e-300), err, rn / blb, (rn / blb) / err_safe);
      if (with_exact_beta)
        acc_ex[n - 1].add(err / std::max(truth_norm, 1e-300), err, rn / bex, (rn / bex) / err_safe);
    }
  }

  ErrorReport rep;
  const double count = static_cast<double>(test_set.size());
  for (int n = 1; n <= N; ++n) {
    auto emit = [&](const Acc& a, const char* kind) {
      rep.rows.push_back({n, a.rel / count, a.abs / count, a.delta / count, a.eta / count,
                          a.eta_min, a.eta_max, kind});
    };
    emit(acc_lb[n - 1], "lb");
    if (with_exact_beta) emit(acc_ex[n - 1], "exact");
  }
  return rep;
}

}  // namespace strb
