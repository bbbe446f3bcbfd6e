#pragma once

#include "strb/mesh.hpp"

namespace strb {

// P1 element matrices on (a sub-region of) the mesh.  All integrals are
// exact: mass and stiffness are polynomial, and the advection profile
// x2*(1-x2) against grad/phi products is cubic and integrated with exact
// barycentric moments (degree-3 exactness).
enum class MatrixKind { mass, stiffness_xx, stiffness_yy, advection_x };

// Full n_dofs x n_dofs matrix; rows/columns of basis functions whose support
// does not meet the region are identically zero.  Empty region list = whole
// domain.  Unknown region tags are rejected.
SpMat assemble_matrix(MatrixKind kind, const Mesh& mesh, const std::vector<int>& regions = {});

// 1D P1 mass matrix on the boundary edges with the given tag (full size).
SpMat assemble_boundary_mass(const Mesh& mesh, int boundary_tag);

// Free-dof restriction (drop Dirichlet rows/columns).
SpMat restrict_to_free(const SpMat& full, const FeSpace& fe);
Vec restrict_to_free(const Vec& full, const FeSpace& fe);

// Scatter a free-dof vector back to full size; Dirichlet entries are taken
// from `dirichlet` when given (e.g. the lifting), else zero.
Vec extend_to_full(const Vec& free_part, const FeSpace& fe, const Vec* dirichlet = nullptr);

}  // namespace strb
