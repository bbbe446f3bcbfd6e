#pragma once

#include "strb/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace strb {

// Subdomain / boundary tags shared by the two benchmark geometries.  The
// background tag 0 marks triangles outside any named region.
namespace tag {
inline constexpr int background = 0;
inline constexpr int omega1 = 1;
inline constexpr int omega2 = 2;
inline constexpr int omega3 = 3;
inline constexpr int omega4 = 4;

inline constexpr int gamma_d1 = 1;  // Dirichlet, data 1
inline constexpr int gamma_d2 = 2;  // Dirichlet, data 2
inline constexpr int gamma_d = 3;   // Dirichlet, data 1 (boundary-control benchmark)
inline constexpr int gamma_n = 4;   // homogeneous Neumann (outflow)
inline constexpr int gamma_c = 5;   // Neumann control boundary
}  // namespace tag

struct BoundaryEdge {
  int a = 0, b = 0;  // node ids, a < b not required
  int tag = 0;
};

// Rectangle with mandatory internal grid lines (subdomain interfaces must be
// unions of whole triangles) and classifier callbacks.  Triangles are tagged
// by centroid, boundary edges by midpoint.
struct DomainGeometry {
  std::string name;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  std::vector<double> required_x, required_y;
  std::function<int(double, double)> subdomain_of;
  std::function<int(double, double)> boundary_tag_of;
  std::vector<int> dirichlet_tags;
  // Dirichlet data value per boundary tag; tags not listed carry 0.
  std::function<double(int)> dirichlet_value;
};

struct Mesh {
  std::string geometry_name;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> tris;  // counter-clockwise
  std::vector<int> tri_tag;
  std::vector<BoundaryEdge> boundary;
  std::vector<int> dirichlet_tags;
  std::function<double(int)> dirichlet_value;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_tris() const { return static_cast<int>(tris.size()); }
};

double triangle_area(const Mesh& mesh, int t);
// Total area of the triangles carrying one of the given tags (empty = all).
double region_area(const Mesh& mesh, const std::vector<int>& regions);
bool has_region_tag(const Mesh& mesh, int t);
bool has_boundary_tag(const Mesh& mesh, int t);

// Structured triangulation: per-interval uniform subdivision between the
// mandatory abscissae, each cell split along the bottom-left/top-right
// diagonal.  nx/ny are target cell counts per unit length.
Mesh build_structured_mesh(int nx, int ny, const DomainGeometry& geom);

DomainGeometry unit_square_geometry();
DomainGeometry graetz_distributed_geometry();   // benchmark 1
DomainGeometry graetz_boundary_geometry();      // benchmark 2 (reference domain)

// P1 scalar space with strong Dirichlet elimination.
struct FeSpace {
  int n_dofs = 0;
  std::vector<int> dirichlet_dofs;
  std::vector<int> free_dofs;
  std::vector<int> free_index;  // n_dofs entries, -1 on Dirichlet nodes

  int n_free() const { return static_cast<int>(free_dofs.size()); }
};

FeSpace make_fe_space(const Mesh& mesh);

// Nodal interpolation of the Dirichlet data; zero at all non-Dirichlet nodes.
// At tag junctions the lowest-numbered tag wins (gamma_d1 before gamma_d2).
Vec dirichlet_lifting(const Mesh& mesh, const FeSpace& fe);

// FNV-1a over node coordinates, connectivity and tags; used to detect
// model/mesh mismatches when reloading serialized reduced models.
std::uint64_t mesh_hash(const Mesh& mesh);

}  // namespace strb
