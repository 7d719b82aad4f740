#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace gsmkit::geometry {

using mesh::TriangleMesh;

/// Square plate in z = 0 split into two triangles.
inline TriangleMesh plate(double side = 1.0) {
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(side, 0, 0), Vec3(side, side, 0), Vec3(0, side, 0)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.region = {0, 0};
  return m;
}

/// Axis-aligned cube surface with outward winding (12 triangles).
inline TriangleMesh cube(double side = 1.0) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) m.vertices.emplace_back(side * (i & 1), side * ((i >> 1) & 1), side * ((i >> 2) & 1));
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  m.region.assign(m.triangles.size(), 0);
  return m;
}

/// Geodesic sphere: each icosahedron face is split into freq^2 triangles and projected.
inline TriangleMesh icosphere(double radius, int freq) {
  if (freq < 1 || !(radius > 0.0)) throw ArgumentError("icosphere: radius and frequency must be positive");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const Vec3 ico[12] = {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                        Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1), Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  const int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                            {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                            {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  TriangleMesh m;
  // A lattice point is keyed by its non-zero integer weights on the icosahedron corners,
  // so points on shared edges and corners are created once.
  using Key = std::array<std::pair<int, int>, 3>;
  std::map<Key, int> ids;
  auto point = [&](const int f[3], int i, int j) {
    const int w[3] = {freq - i - j, i, j};
    Key key;
    for (int c = 0; c < 3; ++c) key[c] = w[c] == 0 ? std::pair<int, int>{-1, 0} : std::pair<int, int>{f[c], w[c]};
    std::sort(key.begin(), key.end());
    const auto it = ids.find(key);
    if (it != ids.end()) return it->second;
    const Vec3 p = (w[0] * ico[f[0]] + w[1] * ico[f[1]] + w[2] * ico[f[2]]) / double(freq);
    m.vertices.push_back(radius * p.normalized());
    return ids[key] = static_cast<int>(m.vertices.size()) - 1;
  };
  for (const auto& f : faces)
    for (int i = 0; i < freq; ++i)
      for (int j = 0; j < freq - i; ++j) {
        m.triangles.push_back({point(f, i, j), point(f, i + 1, j), point(f, i, j + 1)});
        if (i + j + 2 <= freq) m.triangles.push_back({point(f, i + 1, j), point(f, i + 1, j + 1), point(f, i, j + 1)});
      }
  m.region.assign(m.triangles.size(), 0);
  return m;
}

struct DipoleParams {
  double r_inner = 0.25e-3;  // upper arm radius (coax inner conductor)
  double r_outer = 0.575e-3;  // lower arm radius (coax outer conductor)
  double arm = 35e-3;        // length of each arm
  int n_phi = 8;
  int n_axial = 16;
  int n_radial = 1;  // rings across the port annulus
  double grading = 3.0;  // axial clustering toward the feed; 0 is uniform
};

namespace detail {

/// Axial station j of n on an arm, measured from the feed: uniform, or sinh-clustered at the feed.
inline double arm_station(const DipoleParams& p, int j) {
  const double s = double(j) / p.n_axial;
  return p.grading > 0.0 ? p.arm * std::sinh(p.grading * s) / std::sinh(p.grading) : p.arm * s;
}

}  // namespace detail

/// Closed PEC dipole fed through an annular coaxial port in z = 0 with normal +z.
/// The lower arm has the outer radius and the upper arm the inner radius; normals point outward.
inline TriangleMesh coax_dipole(const DipoleParams& p = {}, const std::string& port_name = "port1") {
  if (!(p.r_outer > p.r_inner && p.r_inner > 0.0 && p.arm > 0.0) || p.n_phi < 3 || p.n_axial < 1 || p.n_radial < 1 ||
      !(p.grading >= 0.0))
    throw ArgumentError("coax_dipole: invalid parameters");
  TriangleMesh m;
  const int np = p.n_phi;
  auto ring = [&](double r, double z) {
    const int base = static_cast<int>(m.vertices.size());
    for (int i = 0; i < np; ++i) {
      const double ph = 2.0 * pi * i / np;
      m.vertices.emplace_back(r * std::cos(ph), r * std::sin(ph), z);
    }
    return base;
  };
  auto tube = [&](const std::vector<int>& rings) {
    for (std::size_t j = 0; j + 1 < rings.size(); ++j)
      for (int i = 0; i < np; ++i) {
        const int a = rings[j] + i, b = rings[j] + (i + 1) % np;
        const int c = rings[j + 1] + (i + 1) % np, d = rings[j + 1] + i;
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
        m.region.push_back(0);
        m.region.push_back(0);
      }
  };
  std::vector<int> lower, upper;
  for (int j = p.n_axial; j >= 0; --j) lower.push_back(ring(p.r_outer, -detail::arm_station(p, j)));
  for (int j = 0; j <= p.n_axial; ++j) upper.push_back(ring(p.r_inner, detail::arm_station(p, j)));
  tube(lower);
  tube(upper);
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, -p.arm);
  const int top = bottom + 1;
  m.vertices.emplace_back(0.0, 0.0, p.arm);
  for (int i = 0; i < np; ++i) {
    m.triangles.push_back({bottom, lower.front() + (i + 1) % np, lower.front() + i});
    m.triangles.push_back({top, upper.back() + i, upper.back() + (i + 1) % np});
    m.region.push_back(0);
    m.region.push_back(0);
  }
  const int port = m.region_for(port_name);
  // Annulus rings from the inner to the outer conductor; the end rings are shared with the arms.
  std::vector<int> rings{upper.front()};
  for (int j = 1; j < p.n_radial; ++j) rings.push_back(ring(p.r_inner + (p.r_outer - p.r_inner) * j / p.n_radial, 0.0));
  rings.push_back(lower.back());
  for (std::size_t j = 0; j + 1 < rings.size(); ++j)
    for (int i = 0; i < np; ++i) {
      const int i1 = (i + 1) % np, in = rings[j], out = rings[j + 1];
      m.triangles.push_back({in + i, out + i, out + i1});
      m.triangles.push_back({in + i, out + i1, in + i1});
      m.region.push_back(port);
      m.region.push_back(port);
    }
  return m;
}

/// Rigid translation of a mesh.
inline TriangleMesh translated(TriangleMesh m, const Vec3& offset) {
  for (auto& v : m.vertices) v += offset;
  return m;
}

/// Disjoint union; port names of later meshes are kept, so they must be distinct.
inline TriangleMesh merge(const std::vector<TriangleMesh>& parts) {
  TriangleMesh out;
  for (const auto& part : parts) {
    const int base = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
    std::vector<int> remap(part.port_names.size() + 1, 0);
    for (std::size_t p = 0; p < part.port_names.size(); ++p) {
      for (const auto& existing : out.port_names)
        if (existing == part.port_names[p]) throw ValidationError("merge: duplicate port name '" + existing + "'");
      remap[p + 1] = out.region_for(part.port_names[p]);
    }
    for (std::size_t t = 0; t < part.triangles.size(); ++t) {
      const auto& tri = part.triangles[t];
      out.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
      out.region.push_back(remap[part.region[t]]);
    }
  }
  return out;
}

}  // namespace gsmkit::geometry
