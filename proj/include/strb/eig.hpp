#pragma once

#include "strb/mesh.hpp"

namespace strb {

struct EigOptions {
  int max_iters = 2000;
  double tol = 1e-13;      // relative Ritz-value stagnation
  double res_tol = 1e-9;   // relative eigen-residual
  int block_size = 3;
};

struct GenEigResult {
  double lambda = 0.0;
  Vec eigenvector;
  int iterations = 0;
};

// Largest eigenvalue of A v = lambda X v with A symmetric positive
// semi-definite and X SPD, by block power iteration on X^{-1} A with
// Rayleigh-Ritz extraction (deterministic start, so repeated calls are
// bit-identical).  Throws NumericalError on non-convergence.
GenEigResult largest_generalized_eig(const SpMat& A, const SpMat& X, EigOptions opts = {});

// Poincare-type constant: C^2 = largest lambda of M v = lambda (A + M) v on
// the free dofs, with A the full H1 stiffness and M the full mass matrix.
// Always < 1.  The *_eig variants also return the eigenvector.
GenEigResult poincare_eig(const Mesh& mesh, const FeSpace& fe, EigOptions opts = {});
double compute_poincare_constant(const Mesh& mesh, const FeSpace& fe, EigOptions opts = {});

// Trace analogue: M replaced by the boundary mass matrix of `boundary_tag`.
GenEigResult trace_eig(const Mesh& mesh, const FeSpace& fe, int boundary_tag, EigOptions opts = {});
double compute_trace_constant(const Mesh& mesh, const FeSpace& fe, int boundary_tag,
                              EigOptions opts = {});

}  // namespace strb
