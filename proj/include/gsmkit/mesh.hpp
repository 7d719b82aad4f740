#pragma once

#include "gsmkit/core.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace gsmkit::mesh {

/// Region id 0 is the PEC antenna surface; ids 1..P are waveports.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> region;
  std::vector<std::string> port_names;  // port_names[p - 1] names region p

  Index num_ports() const { return static_cast<Index>(port_names.size()); }
  bool is_port(std::size_t t) const { return region[t] > 0; }

  /// Region id for a tag name, registering new port names.
  int region_for(const std::string& name) {
    if (name == "antenna") return 0;
    if (name.rfind("port", 0) != 0) throw ParseError("unknown region name '" + name + "'");
    for (std::size_t i = 0; i < port_names.size(); ++i)
      if (port_names[i] == name) return static_cast<int>(i) + 1;
    port_names.push_back(name);
    return static_cast<int>(port_names.size());
  }
};

struct TriangleGeom {
  double area;
  Vec3 normal, centroid;
  double size;  // longest edge
};

inline TriangleGeom triangle_geometry(const TriangleMesh& m, std::size_t t) {
  const auto& tri = m.triangles[t];
  const Vec3& a = m.vertices[tri[0]];
  const Vec3& b = m.vertices[tri[1]];
  const Vec3& c = m.vertices[tri[2]];
  const Vec3 cr = (b - a).cross(c - a);
  TriangleGeom g;
  g.area = 0.5 * cr.norm();
  g.normal = cr / cr.norm();
  g.centroid = (a + b + c) / 3.0;
  g.size = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  return g;
}

namespace detail {

using EdgeKey = std::pair<int, int>;

inline EdgeKey key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Map from undirected edge to the triangles using it, in deterministic (min, max) order.
inline std::map<EdgeKey, std::vector<int>> edge_map(const TriangleMesh& m) {
  std::map<EdgeKey, std::vector<int>> em;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int e = 0; e < 3; ++e) em[key(m.triangles[t][e], m.triangles[t][(e + 1) % 3])].push_back(static_cast<int>(t));
  return em;
}

/// +1 if triangle t traverses (a -> b), -1 if (b -> a).
inline int traversal(const std::array<int, 3>& tri, int a, int b) {
  for (int e = 0; e < 3; ++e) {
    if (tri[e] == a && tri[(e + 1) % 3] == b) return 1;
    if (tri[e] == b && tri[(e + 1) % 3] == a) return -1;
  }
  return 0;
}

inline std::string edge_name(const EdgeKey& k) {
  return "edge (" + std::to_string(k.first) + ", " + std::to_string(k.second) + ")";
}

}  // namespace detail

/// Structural checks: index range, non-degenerate triangles, manifold edges, consistent
/// winding inside each region, planar and connected ports.
inline void validate(const TriangleMesh& m) {
  const int nv = static_cast<int>(m.vertices.size());
  if (m.triangles.empty()) throw ValidationError("mesh has no triangles");
  if (m.region.size() != m.triangles.size()) throw ValidationError("region tag count does not match triangle count");
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= nv) throw ValidationError("triangle " + std::to_string(t) + " references vertex " + std::to_string(v));
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw ValidationError("triangle " + std::to_string(t) + " repeats a vertex");
    const double area2 = (m.vertices[tri[1]] - m.vertices[tri[0]]).cross(m.vertices[tri[2]] - m.vertices[tri[0]]).norm();
    if (!(area2 > 0.0)) throw ValidationError("triangle " + std::to_string(t) + " is degenerate");
    if (m.region[t] < 0 || m.region[t] > static_cast<int>(m.num_ports()))
      throw ValidationError("triangle " + std::to_string(t) + " has an unknown region id");
  }
  const auto em = detail::edge_map(m);
  for (const auto& [k, tris] : em) {
    if (tris.size() > 2) throw ValidationError("non-manifold " + detail::edge_name(k) + " shared by " + std::to_string(tris.size()) + " triangles");
    if (tris.size() == 2 && m.region[tris[0]] == m.region[tris[1]]) {
      const int s0 = detail::traversal(m.triangles[tris[0]], k.first, k.second);
      const int s1 = detail::traversal(m.triangles[tris[1]], k.first, k.second);
      if (s0 == s1)
        throw ValidationError("inconsistent winding between triangles " + std::to_string(tris[0]) + " and " +
                              std::to_string(tris[1]) + " across " + detail::edge_name(k));
    }
  }
  for (int p = 1; p <= static_cast<int>(m.num_ports()); ++p) {
    std::vector<int> members;
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
      if (m.region[t] == p) members.push_back(static_cast<int>(t));
    const std::string name = m.port_names[p - 1];
    if (members.empty()) throw ValidationError("port '" + name + "' has no triangles");
    // Planarity against the first triangle's plane, relative to the port diameter.
    const auto g0 = triangle_geometry(m, members[0]);
    const Vec3 o = m.vertices[m.triangles[members[0]][0]];
    double diam = 0.0;
    for (int t : members)
      for (int v : m.triangles[t]) diam = std::max(diam, (m.vertices[v] - o).norm());
    for (int t : members)
      for (int v : m.triangles[t])
        if (std::abs(g0.normal.dot(m.vertices[v] - o)) > 1e-6 * diam)
          throw ValidationError("port '" + name + "' is not planar at vertex " + std::to_string(v));
    // Connectivity through shared edges.
    std::map<int, int> comp;
    for (int t : members) comp[t] = t;
    auto find = [&](int x) {
      while (comp[x] != x) x = comp[x] = comp[comp[x]];
      return x;
    };
    for (const auto& [k, tris] : em)
      if (tris.size() == 2 && m.region[tris[0]] == p && m.region[tris[1]] == p) comp[find(tris[0])] = find(tris[1]);
    const int root = find(members[0]);
    for (int t : members)
      if (find(t) != root) throw ValidationError("port '" + name + "' is not connected (triangle " + std::to_string(t) + ")");
  }
}

/// One RWG function on an interior edge. On T+ it is (l / 2A+)(r - v_opp+); on T- it is
/// (l / 2A-)(v_opp- - r).
struct Rwg {
  int v0, v1;  // edge vertices, v0 < v1
  int tri_plus, tri_minus;
  int opp_plus, opp_minus;
  double length;
  int port;  // port region id if both triangles lie in one port, otherwise 0
};

struct RwgBasisSet {
  std::vector<Rwg> functions;
  std::vector<Index> electric_index;                 // every RWG
  std::vector<Index> magnetic_index;                 // RWGs interior to a port
  std::vector<std::vector<Index>> magnetic_by_port;  // partition of magnetic_index
  std::vector<TriangleGeom> geometry;                // per triangle
  /// (rwg, sign, local opposite-vertex) attachments per triangle.
  struct Attachment {
    Index rwg;
    double sign;
    int opp;
  };
  std::vector<std::vector<Attachment>> on_triangle;

  Index size() const { return static_cast<Index>(functions.size()); }
};

inline RwgBasisSet build_rwg(const TriangleMesh& m) {
  RwgBasisSet b;
  b.geometry.reserve(m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) b.geometry.push_back(triangle_geometry(m, t));
  b.on_triangle.assign(m.triangles.size(), {});
  b.magnetic_by_port.assign(static_cast<std::size_t>(m.num_ports()), {});
  const auto em = detail::edge_map(m);
  auto opposite = [&](int t, int a, int c) {
    for (int v : m.triangles[t])
      if (v != a && v != c) return v;
    return -1;
  };
  for (const auto& [k, tris] : em) {
    if (tris.size() != 2) continue;
    int tp = tris[0], tm = tris[1];
    const int s0 = detail::traversal(m.triangles[tp], k.first, k.second);
    const int s1 = detail::traversal(m.triangles[tm], k.first, k.second);
    if (s0 != 1 && s1 == 1) std::swap(tp, tm);
    Rwg r;
    r.v0 = k.first;
    r.v1 = k.second;
    r.tri_plus = tp;
    r.tri_minus = tm;
    r.opp_plus = opposite(tp, k.first, k.second);
    r.opp_minus = opposite(tm, k.first, k.second);
    r.length = (m.vertices[k.first] - m.vertices[k.second]).norm();
    r.port = (m.region[tp] > 0 && m.region[tp] == m.region[tm]) ? m.region[tp] : 0;
    const Index id = static_cast<Index>(b.functions.size());
    b.functions.push_back(r);
    b.electric_index.push_back(id);
    if (r.port > 0) {
      b.magnetic_index.push_back(id);
      b.magnetic_by_port[r.port - 1].push_back(id);
    }
    b.on_triangle[tp].push_back({id, 1.0, r.opp_plus});
    b.on_triangle[tm].push_back({id, -1.0, r.opp_minus});
  }
  for (std::size_t p = 0; p < b.magnetic_by_port.size(); ++p)
    if (b.magnetic_by_port[p].empty())
      throw ConfigurationError("port '" + m.port_names[p] + "' has no interior edges (port too coarse)");
  return b;
}

/// Value of RWG function f at a point r of triangle t (f must be attached to t).
inline Vec3 rwg_value(const TriangleMesh& m, const RwgBasisSet& b, Index f, std::size_t t, const Vec3& r) {
  const auto& fn = b.functions[f];
  const bool plus = static_cast<int>(t) == fn.tri_plus;
  const int opp = plus ? fn.opp_plus : fn.opp_minus;
  const double c = fn.length / (2.0 * b.geometry[t].area);
  return (plus ? c : -c) * (r - m.vertices[opp]);
}

// ---------------------------------------------------------------- file formats

namespace detail {

inline std::vector<std::string> content_lines(std::istream& in, std::vector<int>& line_no) {
  std::vector<std::string> out;
  std::string s;
  int n = 0;
  while (std::getline(in, s)) {
    ++n;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s.erase(hash);
    if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(s);
    line_no.push_back(n);
  }
  return out;
}

}  // namespace detail

/// Reads region names (one per line) for an OFF mesh.
inline void read_tags(TriangleMesh& m, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tag file " + path.string());
  std::vector<int> ln;
  const auto lines = detail::content_lines(in, ln);
  if (lines.size() != m.triangles.size())
    throw ParseError(path.string() + ": expected " + std::to_string(m.triangles.size()) + " tags, found " +
                     std::to_string(lines.size()));
  m.region.resize(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream ss(lines[i]);
    std::string name;
    ss >> name;
    try {
      m.region[i] = m.region_for(name);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(ln[i]) + ": " + e.what());
    }
  }
}

inline TriangleMesh read_off(std::istream& in, const std::string& label = "OFF") {
  std::vector<int> ln;
  const auto lines = detail::content_lines(in, ln);
  auto fail = [&](std::size_t i, const std::string& msg) {
    return ParseError(label + ":" + std::to_string(i < ln.size() ? ln[i] : 0) + ": " + msg);
  };
  if (lines.empty()) throw ParseError(label + ": empty file");
  std::size_t cur = 0;
  std::istringstream head(lines[cur]);
  std::string magic;
  head >> magic;
  if (magic != "OFF") throw fail(cur, "missing OFF header");
  long nv = -1, nf = -1, ne = 0;
  if (!(head >> nv)) {
    ++cur;
    if (cur >= lines.size()) throw fail(cur, "missing counts");
    std::istringstream c(lines[cur]);
    c >> nv >> nf >> ne;
  } else {
    head >> nf >> ne;
  }
  if (nv < 0 || nf < 0) throw fail(cur, "invalid vertex/face counts");
  TriangleMesh m;
  for (long i = 0; i < nv; ++i) {
    ++cur;
    if (cur >= lines.size()) throw fail(cur, "unexpected end of vertex list");
    std::istringstream ss(lines[cur]);
    double x, y, z;
    if (!(ss >> x >> y >> z)) throw fail(cur, "malformed vertex");
    m.vertices.emplace_back(x, y, z);
  }
  for (long i = 0; i < nf; ++i) {
    ++cur;
    if (cur >= lines.size()) throw fail(cur, "unexpected end of face list");
    std::istringstream ss(lines[cur]);
    long n, a, b, c;
    if (!(ss >> n >> a >> b >> c)) throw fail(cur, "malformed face");
    if (n != 3) throw fail(cur, "only triangular faces are supported");
    for (long v : {a, b, c})
      if (v < 0 || v >= nv) throw fail(cur, "face references vertex " + std::to_string(v));
    m.triangles.push_back({int(a), int(b), int(c)});
  }
  m.region.assign(m.triangles.size(), 0);
  return m;
}

/// gmsh v2 ASCII subset: $PhysicalNames, $Nodes, $Elements (triangles only).
inline TriangleMesh read_gmsh(std::istream& in, const std::string& label = "gmsh") {
  std::vector<int> ln;
  const auto lines = detail::content_lines(in, ln);
  auto fail = [&](std::size_t i, const std::string& msg) {
    return ParseError(label + ":" + std::to_string(i < ln.size() ? ln[i] : 0) + ": " + msg);
  };
  std::map<int, std::string> names;
  std::map<long, int> node_index;
  TriangleMesh m;
  std::vector<int> phys;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream hs(lines[i]);
    std::string sec;
    hs >> sec;
    auto count = [&]() {
      if (++i >= lines.size()) throw fail(i, "truncated section " + sec);
      std::istringstream cs(lines[i]);
      long n = -1;
      if (!(cs >> n) || n < 0) throw fail(i, "bad count in " + sec);
      return n;
    };
    if (sec == "$MeshFormat") {
      if (++i >= lines.size()) throw fail(i, "truncated $MeshFormat");
      std::istringstream fs(lines[i]);
      double ver;
      int ft;
      fs >> ver >> ft;
      if (ver < 2.0 || ver >= 3.0 || ft != 0) throw fail(i, "only ASCII gmsh v2 is supported");
    } else if (sec == "$PhysicalNames") {
      const long n = count();
      for (long k = 0; k < n; ++k) {
        if (++i >= lines.size()) throw fail(i, "truncated $PhysicalNames");
        std::istringstream ps(lines[i]);
        int dim, tag;
        if (!(ps >> dim >> tag)) throw fail(i, "malformed physical name");
        std::string rest;
        std::getline(ps, rest);
        const auto q0 = rest.find('"'), q1 = rest.rfind('"');
        if (q0 == std::string::npos || q1 == q0) throw fail(i, "physical name must be quoted");
        names[tag] = rest.substr(q0 + 1, q1 - q0 - 1);
      }
    } else if (sec == "$Nodes") {
      const long n = count();
      for (long k = 0; k < n; ++k) {
        if (++i >= lines.size()) throw fail(i, "truncated $Nodes");
        std::istringstream ns(lines[i]);
        long id;
        double x, y, z;
        if (!(ns >> id >> x >> y >> z)) throw fail(i, "malformed node");
        node_index[id] = static_cast<int>(m.vertices.size());
        m.vertices.emplace_back(x, y, z);
      }
    } else if (sec == "$Elements") {
      const long n = count();
      for (long k = 0; k < n; ++k) {
        if (++i >= lines.size()) throw fail(i, "truncated $Elements");
        std::istringstream es(lines[i]);
        long id, type, ntags;
        if (!(es >> id >> type >> ntags)) throw fail(i, "malformed element");
        std::vector<long> tags(static_cast<std::size_t>(ntags));
        for (auto& t : tags) es >> t;
        if (type != 2) continue;
        std::array<int, 3> tri{};
        for (auto& v : tri) {
          long nid;
          if (!(es >> nid)) throw fail(i, "malformed triangle");
          const auto it = node_index.find(nid);
          if (it == node_index.end()) throw fail(i, "element references unknown node " + std::to_string(nid));
          v = it->second;
        }
        m.triangles.push_back(tri);
        if (tags.empty()) throw fail(i, "triangle without a physical tag");
        const auto nm = names.find(static_cast<int>(tags[0]));
        if (nm == names.end()) throw fail(i, "physical tag " + std::to_string(tags[0]) + " has no name");
        try {
          phys.push_back(m.region_for(nm->second));
        } catch (const ParseError& e) {
          throw fail(i, e.what());
        }
      }
    }
  }
  m.region = phys;
  return m;
}

/// Loads and validates a mesh. Format is inferred from the extension (.off or .msh).
/// OFF meshes take region names from a sibling ".tags" file when one exists.
inline TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh " + path.string());
  const auto ext = path.extension().string();
  TriangleMesh m;
  if (ext == ".off" || ext == ".OFF") {
    m = read_off(in, path.string());
    auto tags = path;
    tags.replace_extension(".tags");
    if (std::filesystem::exists(tags)) read_tags(m, tags);
  } else if (ext == ".msh") {
    m = read_gmsh(in, path.string());
  } else {
    throw ParseError("unsupported mesh extension '" + ext + "'");
  }
  validate(m);
  return m;
}

/// Writes OFF with full precision plus the ".tags" sidecar.
inline void write_off(const TriangleMesh& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "OFF\n" << m.vertices.size() << ' ' << m.triangles.size() << " 0\n";
  for (const auto& v : m.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : m.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  auto tags = path;
  tags.replace_extension(".tags");
  std::ofstream tg(tags);
  if (!tg) throw IoError("cannot write " + tags.string());
  for (int r : m.region) tg << (r == 0 ? std::string("antenna") : m.port_names[r - 1]) << '\n';
}

}  // namespace gsmkit::mesh
