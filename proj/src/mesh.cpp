#include "strb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace strb {

namespace {

// Sorted unique axis coordinates: interval endpoints + mandatory lines, each
// gap subdivided uniformly at a spacing no coarser than 1/n.
std::vector<double> axis_lines(double a, double b, const std::vector<double>& required, int n,
                               const char* axis) {
  if (n < 1) throw std::invalid_argument(std::string("mesh resolution must be >= 1 on ") + axis);
  std::vector<double> marks{a, b};
  for (double r : required) {
    if (!(r > a && r < b))
      throw std::invalid_argument(std::string("mandatory ") + axis + "-line " + std::to_string(r) +
                                  " not inside the domain extent");
    marks.push_back(r);
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  std::vector<double> lines;
  for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
    double lo = marks[s], hi = marks[s + 1];
    int cells = std::max(1, static_cast<int>(std::ceil((hi - lo) * n - 1e-9)));
    for (int c = 0; c < cells; ++c) lines.push_back(lo + (hi - lo) * c / cells);
  }
  lines.push_back(b);
  return lines;
}

}  // namespace

double triangle_area(const Mesh& mesh, int t) {
  const auto& tri = mesh.tris[static_cast<std::size_t>(t)];
  const auto& p0 = mesh.nodes[static_cast<std::size_t>(tri[0])];
  const auto& p1 = mesh.nodes[static_cast<std::size_t>(tri[1])];
  const auto& p2 = mesh.nodes[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y()));
}

bool has_region_tag(const Mesh& mesh, int t) {
  return std::find(mesh.tri_tag.begin(), mesh.tri_tag.end(), t) != mesh.tri_tag.end();
}

bool has_boundary_tag(const Mesh& mesh, int t) {
  for (const auto& e : mesh.boundary)
    if (e.tag == t) return true;
  return false;
}

double region_area(const Mesh& mesh, const std::vector<int>& regions) {
  double area = 0.0;
  for (int t = 0; t < mesh.n_tris(); ++t) {
    if (!regions.empty() &&
        std::find(regions.begin(), regions.end(), mesh.tri_tag[static_cast<std::size_t>(t)]) ==
            regions.end())
      continue;
    area += triangle_area(mesh, t);
  }
  return area;
}

Mesh build_structured_mesh(int nx, int ny, const DomainGeometry& geom) {
  if (!(geom.x1 > geom.x0 && geom.y1 > geom.y0))
    throw std::invalid_argument("geometry rectangle is degenerate");

  const auto xs = axis_lines(geom.x0, geom.x1, geom.required_x, nx, "x");
  const auto ys = axis_lines(geom.y0, geom.y1, geom.required_y, ny, "y");
  const int nxl = static_cast<int>(xs.size());
  const int nyl = static_cast<int>(ys.size());

  Mesh mesh;
  mesh.geometry_name = geom.name;
  mesh.dirichlet_tags = geom.dirichlet_tags;
  mesh.dirichlet_value = geom.dirichlet_value;

  mesh.nodes.reserve(static_cast<std::size_t>(nxl * nyl));
  for (int j = 0; j < nyl; ++j)
    for (int i = 0; i < nxl; ++i)
      mesh.nodes.emplace_back(xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);

  auto id = [nxl](int i, int j) { return j * nxl + i; };

  // Two CCW triangles per cell, diagonal from bottom-left to top-right.
  for (int j = 0; j + 1 < nyl; ++j) {
    for (int i = 0; i + 1 < nxl; ++i) {
      int n00 = id(i, j), n10 = id(i + 1, j), n11 = id(i + 1, j + 1), n01 = id(i, j + 1);
      mesh.tris.push_back({n00, n10, n11});
      mesh.tris.push_back({n00, n11, n01});
    }
  }

  mesh.tri_tag.resize(mesh.tris.size());
  for (int t = 0; t < mesh.n_tris(); ++t) {
    const auto& tri = mesh.tris[static_cast<std::size_t>(t)];
    double cx = 0.0, cy = 0.0;
    for (int k = 0; k < 3; ++k) {
      cx += mesh.nodes[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])].x() / 3.0;
      cy += mesh.nodes[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])].y() / 3.0;
    }
    mesh.tri_tag[static_cast<std::size_t>(t)] = geom.subdomain_of ? geom.subdomain_of(cx, cy) : 0;
  }

  auto push_edge = [&](int a, int b) {
    const auto& pa = mesh.nodes[static_cast<std::size_t>(a)];
    const auto& pb = mesh.nodes[static_cast<std::size_t>(b)];
    BoundaryEdge e;
    e.a = a;
    e.b = b;
    e.tag = geom.boundary_tag_of(0.5 * (pa.x() + pb.x()), 0.5 * (pa.y() + pb.y()));
    mesh.boundary.push_back(e);
  };
  for (int i = 0; i + 1 < nxl; ++i) {
    push_edge(id(i, 0), id(i + 1, 0));              // bottom
    push_edge(id(i, nyl - 1), id(i + 1, nyl - 1));  // top
  }
  for (int j = 0; j + 1 < nyl; ++j) {
    push_edge(id(0, j), id(0, j + 1));              // left
    push_edge(id(nxl - 1, j), id(nxl - 1, j + 1));  // right
  }
  return mesh;
}

DomainGeometry unit_square_geometry() {
  DomainGeometry g;
  g.name = "unit_square";
  g.x0 = 0.0;
  g.x1 = 1.0;
  g.y0 = 0.0;
  g.y1 = 1.0;
  g.subdomain_of = [](double, double) { return tag::background; };
  g.boundary_tag_of = [](double, double) { return tag::gamma_d; };
  g.dirichlet_tags = {tag::gamma_d};
  g.dirichlet_value = [](int) { return 0.0; };
  return g;
}

DomainGeometry graetz_distributed_geometry() {
  DomainGeometry g;
  g.name = "graetz_distributed";
  g.x0 = 0.0;
  g.x1 = 2.5;
  g.y0 = 0.0;
  g.y1 = 1.0;
  g.required_x = {0.2, 0.8, 1.0, 1.2};
  g.required_y = {0.3, 0.7};
  g.subdomain_of = [](double cx, double cy) {
    if (cy > 0.3 && cy < 0.7) {
      if (cx > 0.2 && cx < 0.8) return tag::omega1;
      if (cx > 1.2 && cx < 2.5) return tag::omega2;
    }
    return tag::background;
  };
  // Right edge is the outflow; the rest of the boundary splits at x = 1
  // (a mandatory mesh line, so no edge midpoint ever sits on it).
  g.boundary_tag_of = [](double mx, double) {
    if (mx >= 2.5 - 1e-12) return tag::gamma_n;
    return mx < 1.0 ? tag::gamma_d1 : tag::gamma_d2;
  };
  g.dirichlet_tags = {tag::gamma_d1, tag::gamma_d2};
  g.dirichlet_value = [](int t) {
    if (t == tag::gamma_d1) return 1.0;
    if (t == tag::gamma_d2) return 2.0;
    return 0.0;
  };
  return g;
}

DomainGeometry graetz_boundary_geometry() {
  DomainGeometry g;
  g.name = "graetz_boundary";
  g.x0 = 0.0;
  g.x1 = 2.0;  // reference configuration: stretch block has unit width
  g.y0 = 0.0;
  g.y1 = 1.0;
  g.required_x = {1.0};
  g.required_y = {0.2, 0.8};
  g.subdomain_of = [](double cx, double cy) {
    if (cx < 1.0) return tag::omega1;
    if (cy > 0.8) return tag::omega3;
    if (cy < 0.2) return tag::omega4;
    return tag::omega2;
  };
  g.boundary_tag_of = [](double mx, double my) {
    if (mx >= 2.0 - 1e-12) return tag::gamma_n;
    if (mx < 1.0) return tag::gamma_d;
    // top/bottom of the stretch block: Neumann control boundary
    (void)my;
    return tag::gamma_c;
  };
  g.dirichlet_tags = {tag::gamma_d};
  g.dirichlet_value = [](int t) { return t == tag::gamma_d ? 1.0 : 0.0; };
  return g;
}

FeSpace make_fe_space(const Mesh& mesh) {
  FeSpace fe;
  fe.n_dofs = mesh.n_nodes();
  std::set<int> fixed;
  for (const auto& e : mesh.boundary) {
    if (std::find(mesh.dirichlet_tags.begin(), mesh.dirichlet_tags.end(), e.tag) ==
        mesh.dirichlet_tags.end())
      continue;
    fixed.insert(e.a);
    fixed.insert(e.b);
  }
  fe.dirichlet_dofs.assign(fixed.begin(), fixed.end());
  fe.free_index.assign(static_cast<std::size_t>(fe.n_dofs), -1);
  for (int i = 0; i < fe.n_dofs; ++i) {
    if (!fixed.count(i)) {
      fe.free_index[static_cast<std::size_t>(i)] = static_cast<int>(fe.free_dofs.size());
      fe.free_dofs.push_back(i);
    }
  }
  return fe;
}

Vec dirichlet_lifting(const Mesh& mesh, const FeSpace& fe) {
  Vec g = Vec::Zero(fe.n_dofs);
  // Lowest Dirichlet tag wins at junction nodes.
  std::vector<int> node_tag(static_cast<std::size_t>(fe.n_dofs), -1);
  for (const auto& e : mesh.boundary) {
    if (std::find(mesh.dirichlet_tags.begin(), mesh.dirichlet_tags.end(), e.tag) ==
        mesh.dirichlet_tags.end())
      continue;
    for (int n : {e.a, e.b}) {
      int& t = node_tag[static_cast<std::size_t>(n)];
      if (t < 0 || e.tag < t) t = e.tag;
    }
  }
  for (int i = 0; i < fe.n_dofs; ++i) {
    int t = node_tag[static_cast<std::size_t>(i)];
    if (t >= 0) g[i] = mesh.dirichlet_value ? mesh.dirichlet_value(t) : 0.0;
  }
  return g;
}

std::uint64_t mesh_hash(const Mesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : mesh.nodes) {
    double xy[2] = {p.x(), p.y()};
    mix(xy, sizeof(xy));
  }
  for (const auto& t : mesh.tris) mix(t.data(), sizeof(int) * 3);
  mix(mesh.tri_tag.data(), mesh.tri_tag.size() * sizeof(int));
  for (const auto& e : mesh.boundary) {
    int abtag[3] = {e.a, e.b, e.tag};
    mix(abtag, sizeof(abtag));
  }
  return h;
}

}  // namespace strb
