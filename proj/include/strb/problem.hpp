#pragma once

#include "strb/assembly.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace strb {

// One term of an affine parameter expansion sum_l theta_l(mu, alpha) * A_l.
// Matrix terms carry `matrix`, load terms carry `vector`; sizes are full
// n_dofs (restriction to free dofs happens when systems are built).
struct AffineTerm {
  std::string label;
  std::function<double(const Mu&, double)> theta;
  std::shared_ptr<const SpMat> matrix;
  std::shared_ptr<const Vec> vector;
};

struct AffineForm {
  std::vector<AffineTerm> terms;
};

// Coefficient vector [theta_1(mu), ...].  Points outside the parameter box
// are rejected unless the caller explicitly allows extrapolation.
std::vector<double> theta_eval(const AffineForm& form, const ParameterBox& box, const Mu& mu,
                               double alpha, bool allow_outside = false);

SpMat affine_matrix(const AffineForm& form, const std::vector<double>& theta);
Vec affine_vector(const AffineForm& form, const std::vector<double>& theta, int n);

// Which case of the inf-sup lower bound applies / is requested.
enum class BoundCase { control_equals_observation, control_bound, observation_bound };

std::string to_string(BoundCase bc);
BoundCase bound_case_from_string(const std::string& s);

// Continuity/coercivity constants feeding the stability lower bound.
struct OcpConstants {
  double C_omega = 0.0;    // Poincare constant on the free dofs
  double C_gamma_c = 0.0;  // trace constant on the control boundary (0 if unused)
  std::function<double(const Mu&)> gamma_a;  // coercivity lower bound of a(.,.)
  double c_c = 0.0;                          // continuity of the control form
  double c_u = 0.0;                          // control-norm vs state-norm embedding
  std::function<double(const Mu&)> c_m;      // continuity of the observation form
  double c_obs = 0.0;                        // observation-norm embedding
};

// Parametrized linear-quadratic OCP in no-control form.  All affine forms
// are full-size; `lifting` interpolates the Dirichlet data and is re-added
// to the state for reporting only.
struct OcpProblem {
  std::string id;
  Mesh mesh;
  FeSpace fe;
  ParameterBox box;
  double alpha_default = 0.01;
  BoundCase bound_case = BoundCase::control_bound;

  AffineForm a;        // state operator (diffusion + advection)
  AffineForm m_obs;    // observation mass
  AffineForm c_ctrl;   // control coupling (volume or boundary mass)
  AffineForm s_mass;   // time-derivative pairing mass
  AffineForm load_yd;  // desired-state load m(y_d, phi_i)
  // Lifting contributions moved to the right-hand side: state equation gets
  // -theta_a * A_l * g, the observation equation -theta_m * M_l * g.
  AffineForm rhs_state_lift;
  AffineForm rhs_obs_lift;

  Vec lifting;                    // n_dofs
  std::vector<int> control_dofs;  // free-dof indices supporting the control
  SpMat x_space;                  // H1 norm matrix on the free dofs
  OcpConstants constants;

  // integral of y_d^2 over the (physical) observation region, for the cost
  // functional constant term
  std::function<double(const Mu&)> yd_square_integral;
};

OcpProblem instantiate_graetz_distributed(const Mesh& mesh);
OcpProblem instantiate_graetz_boundary(const Mesh& mesh);
OcpProblem instantiate_problem(const std::string& id, const Mesh& mesh);

DomainGeometry geometry_for(const std::string& problem_id);

// Full-size load vector of the observation tracking term at mu.
Vec desired_state_load(const OcpProblem& p, const Mu& mu, bool allow_outside = false);

// Deterministic uniform tensor grid over the parameter box.  The operator
// directions get the denser sampling: 9x5x5 when all three directions enter
// the problem data, 15x15x1 (third direction at its midpoint) when mu3 only
// rescales the load.  `n_train` is a target size; 225 reproduces the shapes
// above exactly.
std::vector<Mu> make_training_grid(const OcpProblem& p, int n_train);

std::vector<Mu> sample_test_set(const ParameterBox& box, int n, std::uint64_t seed);

}  // namespace strb
