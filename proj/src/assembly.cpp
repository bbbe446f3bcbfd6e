#include "strb/assembly.hpp"

#include <algorithm>
#include <cmath>

namespace strb {

namespace {

// Exact barycentric moments on a triangle of area A:
//   int lambda_i lambda_j        = A/6 (i==j), A/12 otherwise
//   int lambda_i lambda_j lambda_k follows a!b!c!/(a+b+c+2)! * 2A.
double moment2(int i, int j, double area) { return (i == j) ? area / 6.0 : area / 12.0; }

double moment3(int i, int j, int k, double area) {
  int mult[3] = {0, 0, 0};
  ++mult[i];
  ++mult[j];
  ++mult[k];
  int m = *std::max_element(mult, mult + 3);
  if (m == 3) return area / 10.0;
  if (m == 2) return area / 30.0;
  return area / 60.0;
}

void check_regions(const Mesh& mesh, const std::vector<int>& regions) {
  for (int r : regions)
    if (!has_region_tag(mesh, r))
      throw std::invalid_argument("unknown region tag " + std::to_string(r));
}

}  // namespace

SpMat assemble_matrix(MatrixKind kind, const Mesh& mesh, const std::vector<int>& regions) {
  check_regions(mesh, regions);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_tris()) * 9);

  for (int t = 0; t < mesh.n_tris(); ++t) {
    if (!regions.empty() &&
        std::find(regions.begin(), regions.end(), mesh.tri_tag[static_cast<std::size_t>(t)]) ==
            regions.end())
      continue;

    const auto& tri = mesh.tris[static_cast<std::size_t>(t)];
    const Eigen::Vector2d p[3] = {mesh.nodes[static_cast<std::size_t>(tri[0])],
                                  mesh.nodes[static_cast<std::size_t>(tri[1])],
                                  mesh.nodes[static_cast<std::size_t>(tri[2])]};
    const double area = 0.5 * ((p[1].x() - p[0].x()) * (p[2].y() - p[0].y()) -
                               (p[2].x() - p[0].x()) * (p[1].y() - p[0].y()));
    if (!(area > 0.0)) throw NumericalError("degenerate or inverted triangle in assembly");

    // constant P1 gradients: grad phi_i = (bx_i, by_i)
    double bx[3], by[3];
    for (int i = 0; i < 3; ++i) {
      int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      bx[i] = (p[i1].y() - p[i2].y()) / (2.0 * area);
      by[i] = (p[i2].x() - p[i1].x()) / (2.0 * area);
    }

    double loc[3][3];
    switch (kind) {
      case MatrixKind::mass:
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) loc[i][j] = moment2(i, j, area);
        break;
      case MatrixKind::stiffness_xx:
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) loc[i][j] = area * bx[i] * bx[j];
        break;
      case MatrixKind::stiffness_yy:
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) loc[i][j] = area * by[i] * by[j];
        break;
      case MatrixKind::advection_x: {
        // int_K y(1-y) dphi_j/dx phi_i: the profile is quadratic in the
        // vertical coordinate, so expanding y = sum y_k lambda_k reduces the
        // integral to exact second/third barycentric moments.
        double wphi[3];
        for (int i = 0; i < 3; ++i) {
          double lin = 0.0, quad = 0.0;
          for (int k = 0; k < 3; ++k) {
            lin += p[k].y() * moment2(k, i, area);
            for (int l = 0; l < 3; ++l) quad += p[k].y() * p[l].y() * moment3(k, l, i, area);
          }
          wphi[i] = lin - quad;
        }
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) loc[i][j] = bx[j] * wphi[i];
        break;
      }
    }

    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)],
                           loc[i][j]);
  }

  SpMat A(mesh.n_nodes(), mesh.n_nodes());
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

SpMat assemble_boundary_mass(const Mesh& mesh, int boundary_tag) {
  if (!has_boundary_tag(mesh, boundary_tag))
    throw std::invalid_argument("no boundary edges carry tag " + std::to_string(boundary_tag));

  std::vector<Triplet> trips;
  for (const auto& e : mesh.boundary) {
    if (e.tag != boundary_tag) continue;
    const auto& pa = mesh.nodes[static_cast<std::size_t>(e.a)];
    const auto& pb = mesh.nodes[static_cast<std::size_t>(e.b)];
    double h = (pb - pa).norm();
    trips.emplace_back(e.a, e.a, h / 3.0);
    trips.emplace_back(e.b, e.b, h / 3.0);
    trips.emplace_back(e.a, e.b, h / 6.0);
    trips.emplace_back(e.b, e.a, h / 6.0);
  }
  SpMat B(mesh.n_nodes(), mesh.n_nodes());
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

SpMat restrict_to_free(const SpMat& full, const FeSpace& fe) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (int k = 0; k < full.outerSize(); ++k) {
    for (SpMat::InnerIterator it(full, k); it; ++it) {
      int r = fe.free_index[static_cast<std::size_t>(it.row())];
      int c = fe.free_index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  }
  SpMat R(fe.n_free(), fe.n_free());
  R.setFromTriplets(trips.begin(), trips.end());
  R.makeCompressed();
  return R;
}

Vec restrict_to_free(const Vec& full, const FeSpace& fe) {
  Vec r(fe.n_free());
  for (int i = 0; i < fe.n_free(); ++i) r[i] = full[fe.free_dofs[static_cast<std::size_t>(i)]];
  return r;
}

Vec extend_to_full(const Vec& free_part, const FeSpace& fe, const Vec* dirichlet) {
  Vec full = dirichlet ? *dirichlet : Vec::Zero(fe.n_dofs);
  for (int i = 0; i < fe.n_free(); ++i) full[fe.free_dofs[static_cast<std::size_t>(i)]] = free_part[i];
  return full;
}

}  // namespace strb
