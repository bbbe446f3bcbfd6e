#include "strb/eig.hpp"

#include "strb/assembly.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace strb {

namespace {

// Deterministic linearly-independent seed columns (bit-identical reruns).
Vec seed_vector(int n, int k) {
  Vec v(n);
  if (k == 0) return Vec::Ones(n);
  for (int i = 0; i < n; ++i) v[i] = std::cos(k * M_PI * (i + 0.5) / n) + 0.01 * k;
  return v;
}

// Modified Gram-Schmidt in the X inner product, two passes.  Columns whose
// norm collapses are re-seeded (counter keeps the run deterministic).
void x_orthonormalize(Mat& V, const SpMat& X, int& seed_counter) {
  const int n = static_cast<int>(V.rows());
  for (int c = 0; c < V.cols(); ++c) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < c; ++j) {
          double proj = V.col(j).dot(X * V.col(c));
          V.col(c) -= proj * V.col(j);
        }
      }
      double nrm = std::sqrt(V.col(c).dot(X * V.col(c)));
      if (nrm > 1e-12) {
        V.col(c) /= nrm;
        break;
      }
      V.col(c) = seed_vector(n, ++seed_counter);
    }
  }
}

}  // namespace

GenEigResult largest_generalized_eig(const SpMat& A, const SpMat& X, EigOptions opts) {
  const int n = static_cast<int>(X.rows());
  if (A.rows() != n || A.cols() != n || X.cols() != n)
    throw std::invalid_argument("largest_generalized_eig: size mismatch");
  if (n == 0) throw std::invalid_argument("largest_generalized_eig: empty system");

  Eigen::SimplicialLDLT<SpMat> xldlt(X);
  if (xldlt.info() != Eigen::Success)
    throw NumericalError("norm matrix factorization failed (not SPD?)");

  const int b = std::min(opts.block_size, n);
  int seed_counter = 0;
  Mat V(n, b);
  for (int c = 0; c < b; ++c) V.col(c) = seed_vector(n, c);
  x_orthonormalize(V, X, seed_counter);

  double lambda_prev = -1.0;
  GenEigResult out;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Mat W = xldlt.solve(A * V);
    x_orthonormalize(W, X, seed_counter);
    Mat H = W.transpose() * (A * W);  // Ritz matrix, symmetric b x b
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("dense Ritz eigensolve failed");
    V.noalias() = W * es.eigenvectors();

    double lambda = es.eigenvalues()(b - 1);
    Vec v = V.col(b - 1);
    Vec av = A * v;
    Vec res = av - lambda * (X * v);
    bool stag = std::abs(lambda - lambda_prev) <= opts.tol * std::max(std::abs(lambda), 1e-300);
    bool res_ok = res.norm() <= opts.res_tol * std::max(av.norm(), 1e-300);
    lambda_prev = lambda;
    if ((stag && res_ok) || lambda == 0.0) {
      out.lambda = lambda;
      out.eigenvector = v;
      out.iterations = it;
      return out;
    }
  }
  throw NumericalError("generalized eigensolve did not converge within " +
                       std::to_string(opts.max_iters) + " iterations");
}

namespace {

struct H1Setup {
  SpMat X;  // (A + M) on free dofs
  SpMat M;  // mass on free dofs
};

H1Setup h1_setup(const Mesh& mesh, const FeSpace& fe) {
  SpMat A = assemble_matrix(MatrixKind::stiffness_xx, mesh) +
            assemble_matrix(MatrixKind::stiffness_yy, mesh);
  SpMat M = assemble_matrix(MatrixKind::mass, mesh);
  H1Setup s;
  s.M = restrict_to_free(M, fe);
  SpMat X = A + M;
  s.X = restrict_to_free(X, fe);
  return s;
}

}  // namespace

GenEigResult poincare_eig(const Mesh& mesh, const FeSpace& fe, EigOptions opts) {
  auto s = h1_setup(mesh, fe);
  return largest_generalized_eig(s.M, s.X, opts);
}

double compute_poincare_constant(const Mesh& mesh, const FeSpace& fe, EigOptions opts) {
  return std::sqrt(poincare_eig(mesh, fe, opts).lambda);
}

GenEigResult trace_eig(const Mesh& mesh, const FeSpace& fe, int boundary_tag, EigOptions opts) {
  auto s = h1_setup(mesh, fe);
  SpMat B = restrict_to_free(assemble_boundary_mass(mesh, boundary_tag), fe);
  return largest_generalized_eig(B, s.X, opts);
}

double compute_trace_constant(const Mesh& mesh, const FeSpace& fe, int boundary_tag,
                              EigOptions opts) {
  return std::sqrt(trace_eig(mesh, fe, boundary_tag, opts).lambda);
}

}  // namespace strb
