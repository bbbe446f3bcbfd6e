#include "strb/problem.hpp"

#include "strb/eig.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace strb {

std::vector<double> theta_eval(const AffineForm& form, const ParameterBox& box, const Mu& mu,
                               double alpha, bool allow_outside) {
  if (!allow_outside && !box.contains(mu))
    throw ConfigError("parameter (" + std::to_string(mu[0]) + ", " + std::to_string(mu[1]) + ", " +
                      std::to_string(mu[2]) + ") lies outside the parameter box");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  std::vector<double> th;
  th.reserve(form.terms.size());
  for (const auto& t : form.terms) th.push_back(t.theta(mu, alpha));
  return th;
}

SpMat affine_matrix(const AffineForm& form, const std::vector<double>& theta) {
  if (theta.size() != form.terms.size())
    throw std::invalid_argument("affine_matrix: coefficient count mismatch");
  SpMat acc;
  for (std::size_t l = 0; l < form.terms.size(); ++l) {
    const SpMat& A = *form.terms[l].matrix;
    if (acc.rows() == 0)
      acc = theta[l] * A;
    else
      acc += theta[l] * A;
  }
  return acc;
}

Vec affine_vector(const AffineForm& form, const std::vector<double>& theta, int n) {
  if (theta.size() != form.terms.size())
    throw std::invalid_argument("affine_vector: coefficient count mismatch");
  Vec acc = Vec::Zero(n);
  for (std::size_t l = 0; l < form.terms.size(); ++l) acc += theta[l] * (*form.terms[l].vector);
  return acc;
}

std::string to_string(BoundCase bc) {
  switch (bc) {
    case BoundCase::control_equals_observation: return "control_equals_observation";
    case BoundCase::control_bound: return "control_bound";
    case BoundCase::observation_bound: return "observation_bound";
  }
  return "?";
}

BoundCase bound_case_from_string(const std::string& s) {
  if (s == "control_equals_observation") return BoundCase::control_equals_observation;
  if (s == "control_bound") return BoundCase::control_bound;
  if (s == "observation_bound") return BoundCase::observation_bound;
  throw ConfigError("unknown bound_case '" + s + "'");
}

namespace {

std::shared_ptr<const SpMat> share(SpMat m) { return std::make_shared<const SpMat>(std::move(m)); }
std::shared_ptr<const Vec> share(Vec v) { return std::make_shared<const Vec>(std::move(v)); }

using Theta = std::function<double(const Mu&, double)>;

AffineTerm mat_term(std::string label, Theta th, std::shared_ptr<const SpMat> A) {
  AffineTerm t;
  t.label = std::move(label);
  t.theta = std::move(th);
  t.matrix = std::move(A);
  return t;
}

AffineTerm vec_term(std::string label, Theta th, Vec v) {
  AffineTerm t;
  t.label = std::move(label);
  t.theta = std::move(th);
  t.vector = share(std::move(v));
  return t;
}

// -theta_l * A_l * g terms for every matrix term of `form`; exact-zero
// vectors are dropped (regions not touching the Dirichlet boundary).
AffineForm lifting_rhs(const AffineForm& form, const Vec& g, const char* prefix) {
  AffineForm out;
  for (const auto& t : form.terms) {
    Vec v = -(*t.matrix) * g;
    if (v.norm() == 0.0) continue;
    out.terms.push_back(vec_term(std::string(prefix) + ":" + t.label, t.theta, std::move(v)));
  }
  return out;
}

SpMat h1_matrix(const Mesh& mesh, const FeSpace& fe) {
  SpMat full = assemble_matrix(MatrixKind::stiffness_xx, mesh) +
               assemble_matrix(MatrixKind::stiffness_yy, mesh) +
               assemble_matrix(MatrixKind::mass, mesh);
  return restrict_to_free(full, fe);
}

std::vector<int> boundary_control_dofs(const Mesh& mesh, const FeSpace& fe, int boundary_tag) {
  std::set<int> nodes;
  for (const auto& e : mesh.boundary)
    if (e.tag == boundary_tag) {
      nodes.insert(e.a);
      nodes.insert(e.b);
    }
  std::vector<int> dofs;
  for (int n : nodes) {
    int f = fe.free_index[static_cast<std::size_t>(n)];
    if (f >= 0) dofs.push_back(f);
  }
  return dofs;
}

}  // namespace

OcpProblem instantiate_graetz_distributed(const Mesh& mesh) {
  OcpProblem p;
  p.id = "graetz_distributed";
  p.mesh = mesh;
  p.fe = make_fe_space(mesh);
  p.box.lo = {3.0, 0.5, 1.5};
  p.box.hi = {20.0, 1.5, 2.5};
  p.alpha_default = 0.01;
  p.bound_case = BoundCase::control_bound;

  auto stiff = share(SpMat(assemble_matrix(MatrixKind::stiffness_xx, mesh) +
                           assemble_matrix(MatrixKind::stiffness_yy, mesh)));
  auto adv = share(assemble_matrix(MatrixKind::advection_x, mesh));
  auto mass_all = share(assemble_matrix(MatrixKind::mass, mesh));
  auto mass_o1 = share(assemble_matrix(MatrixKind::mass, mesh, {tag::omega1}));
  auto mass_o2 = share(assemble_matrix(MatrixKind::mass, mesh, {tag::omega2}));
  auto mass_obs = share(assemble_matrix(MatrixKind::mass, mesh, {tag::omega1, tag::omega2}));

  p.a.terms = {mat_term("diffusion", [](const Mu& mu, double) { return 1.0 / mu[0]; }, stiff),
               mat_term("advection", [](const Mu&, double) { return 1.0; }, adv)};
  p.m_obs.terms = {mat_term("obs_mass", [](const Mu&, double) { return 1.0; }, mass_obs)};
  p.c_ctrl.terms = {mat_term("ctrl_mass", [](const Mu&, double) { return 1.0; }, mass_all)};
  p.s_mass.terms = {mat_term("time_mass", [](const Mu&, double) { return 1.0; }, mass_all)};

  const Vec ones = Vec::Ones(mesh.n_nodes());
  p.load_yd.terms = {
      vec_term("yd_omega1", [](const Mu& mu, double) { return mu[1]; }, (*mass_o1) * ones),
      vec_term("yd_omega2", [](const Mu& mu, double) { return mu[2]; }, (*mass_o2) * ones)};

  p.lifting = dirichlet_lifting(mesh, p.fe);
  p.rhs_state_lift = lifting_rhs(p.a, p.lifting, "lift_a");
  p.rhs_obs_lift = lifting_rhs(p.m_obs, p.lifting, "lift_m");

  p.control_dofs.resize(static_cast<std::size_t>(p.fe.n_free()));
  for (int i = 0; i < p.fe.n_free(); ++i) p.control_dofs[static_cast<std::size_t>(i)] = i;

  p.x_space = h1_matrix(mesh, p.fe);

  const double c_om = compute_poincare_constant(mesh, p.fe);
  p.constants.C_omega = c_om;
  p.constants.C_gamma_c = 0.0;
  // 1 - C^2 with the full-norm Poincare constant equals 1/(1 + Ctilde^2) with
  // the seminorm one exactly; this is the provable coercivity factor.
  p.constants.gamma_a = [c_om](const Mu& mu) { return (1.0 - c_om * c_om) / mu[0]; };
  p.constants.c_c = c_om;
  p.constants.c_u = c_om;
  p.constants.c_m = [c_om](const Mu&) { return c_om; };
  p.constants.c_obs = c_om;

  const double a1 = region_area(mesh, {tag::omega1});
  const double a2 = region_area(mesh, {tag::omega2});
  p.yd_square_integral = [a1, a2](const Mu& mu) {
    return mu[1] * mu[1] * a1 + mu[2] * mu[2] * a2;
  };
  return p;
}

OcpProblem instantiate_graetz_boundary(const Mesh& mesh) {
  OcpProblem p;
  p.id = "graetz_boundary";
  p.mesh = mesh;
  p.fe = make_fe_space(mesh);
  p.box.lo = {6.0, 1.0, 0.5};
  p.box.hi = {20.0, 3.0, 3.0};
  p.alpha_default = 0.07;
  p.bound_case = BoundCase::observation_bound;

  const std::vector<int> left = {tag::omega1};
  const std::vector<int> right = {tag::omega2, tag::omega3, tag::omega4};
  const std::vector<int> obs = {tag::omega3, tag::omega4};

  auto sxx_l = share(assemble_matrix(MatrixKind::stiffness_xx, mesh, left));
  auto syy_l = share(assemble_matrix(MatrixKind::stiffness_yy, mesh, left));
  auto adv_l = share(assemble_matrix(MatrixKind::advection_x, mesh, left));
  auto sxx_r = share(assemble_matrix(MatrixKind::stiffness_xx, mesh, right));
  auto syy_r = share(assemble_matrix(MatrixKind::stiffness_yy, mesh, right));
  auto adv_r = share(assemble_matrix(MatrixKind::advection_x, mesh, right));
  auto mass_l = share(assemble_matrix(MatrixKind::mass, mesh, left));
  auto mass_r = share(assemble_matrix(MatrixKind::mass, mesh, right));
  auto mass_obs = share(assemble_matrix(MatrixKind::mass, mesh, obs));
  auto bmass_c = share(assemble_boundary_mass(mesh, tag::gamma_c));

  // Pullback of the stretched block to the reference width: horizontal
  // derivatives pick up 1/mu2, vertical ones mu2, volume terms mu2, and the
  // control boundary arc length mu2.
  p.a.terms = {
      mat_term("diff_xx_left", [](const Mu& mu, double) { return 1.0 / mu[0]; }, sxx_l),
      mat_term("diff_yy_left", [](const Mu& mu, double) { return 1.0 / mu[0]; }, syy_l),
      mat_term("adv_left", [](const Mu&, double) { return 1.0; }, adv_l),
      mat_term("diff_xx_right", [](const Mu& mu, double) { return 1.0 / (mu[0] * mu[1]); }, sxx_r),
      mat_term("diff_yy_right", [](const Mu& mu, double) { return mu[1] / mu[0]; }, syy_r),
      mat_term("adv_right", [](const Mu&, double) { return 1.0; }, adv_r)};
  p.s_mass.terms = {mat_term("time_mass_left", [](const Mu&, double) { return 1.0; }, mass_l),
                    mat_term("time_mass_right", [](const Mu& mu, double) { return mu[1]; }, mass_r)};
  p.m_obs.terms = {mat_term("obs_mass", [](const Mu& mu, double) { return mu[1]; }, mass_obs)};
  p.c_ctrl.terms = {mat_term("ctrl_bmass", [](const Mu& mu, double) { return mu[1]; }, bmass_c)};

  const Vec ones = Vec::Ones(mesh.n_nodes());
  p.load_yd.terms = {vec_term("yd_obs", [](const Mu& mu, double) { return mu[1] * mu[2]; },
                              (*mass_obs) * ones)};

  p.lifting = dirichlet_lifting(mesh, p.fe);
  p.rhs_state_lift = lifting_rhs(p.a, p.lifting, "lift_a");
  p.rhs_obs_lift = lifting_rhs(p.m_obs, p.lifting, "lift_m");

  p.control_dofs = boundary_control_dofs(mesh, p.fe, tag::gamma_c);
  p.x_space = h1_matrix(mesh, p.fe);

  const double c_om = compute_poincare_constant(mesh, p.fe);
  const double c_tr = compute_trace_constant(mesh, p.fe, tag::gamma_c);
  p.constants.C_omega = c_om;
  p.constants.C_gamma_c = c_tr;
  p.constants.gamma_a = [c_om](const Mu& mu) {
    double m = std::min({1.0 / mu[0], 1.0 / (mu[0] * mu[1]), mu[1] / mu[0], 1.0});
    return m * (1.0 - c_om * c_om);
  };
  p.constants.c_c = c_tr;
  p.constants.c_u = c_tr;
  p.constants.c_m = [c_om](const Mu& mu) { return c_om * mu[1]; };
  p.constants.c_obs = c_om;

  const double a_obs = region_area(mesh, obs);
  p.yd_square_integral = [a_obs](const Mu& mu) { return mu[2] * mu[2] * mu[1] * a_obs; };
  return p;
}

OcpProblem instantiate_problem(const std::string& id, const Mesh& mesh) {
  if (id == "graetz_distributed") return instantiate_graetz_distributed(mesh);
  if (id == "graetz_boundary") return instantiate_graetz_boundary(mesh);
  throw ConfigError("unknown problem '" + id + "'");
}

DomainGeometry geometry_for(const std::string& problem_id) {
  if (problem_id == "graetz_distributed") return graetz_distributed_geometry();
  if (problem_id == "graetz_boundary") return graetz_boundary_geometry();
  throw ConfigError("unknown problem '" + problem_id + "'");
}

Vec desired_state_load(const OcpProblem& p, const Mu& mu, bool allow_outside) {
  auto th = theta_eval(p.load_yd, p.box, mu, p.alpha_default, allow_outside);
  return affine_vector(p.load_yd, th, p.mesh.n_nodes());
}

std::vector<Mu> make_training_grid(const OcpProblem& p, int n_train) {
  if (n_train < 1) throw ConfigError("n_train must be >= 1");
  auto linspace = [](double lo, double hi, int n) {
    std::vector<double> v;
    if (n == 1) {
      v.push_back(0.5 * (lo + hi));
      return v;
    }
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
  };

  int n1, n2, n3;
  if (p.id == "graetz_boundary") {
    // mu3 only rescales the tracking load: sample the two operator
    // directions on a square grid, pin mu3 at the midpoint.
    n1 = n2 = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_train)))));
    n3 = 1;
  } else {
    // all three directions matter; put the denser sampling on the operator
    // direction mu1 (225 -> 9 x 5 x 5)
    n2 = n3 = std::max(1, static_cast<int>(std::llround(std::cbrt(n_train / 1.8))));
    n1 = std::max(1, n_train / (n2 * n3));
  }

  auto g1 = linspace(p.box.lo[0], p.box.hi[0], n1);
  auto g2 = linspace(p.box.lo[1], p.box.hi[1], n2);
  auto g3 = linspace(p.box.lo[2], p.box.hi[2], n3);
  std::vector<Mu> grid;
  grid.reserve(static_cast<std::size_t>(n1 * n2 * n3));
  for (double m1 : g1)
    for (double m2 : g2)
      for (double m3 : g3) grid.emplace_back(m1, m2, m3);
  return grid;
}

std::vector<Mu> sample_test_set(const ParameterBox& box, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Mu> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(box.sample(rng));
  return out;
}

}  // namespace strb
