#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/mesh.hpp"
#include "gsmkit/potential.hpp"
#include "gsmkit/quadrature.hpp"
#include "gsmkit/sphwave.hpp"
#include "gsmkit/waveguide.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gsmkit::mom {

struct AssemblyOptions {
  int far_points = 7;            // triangle rule beyond the near band
  double near_factor = 8.0;      // 7-point rules when centroid distance < near_factor * size
  double singular_factor = 3.0;  // analytic extraction when distance < singular_factor * size
  bool renormalize_modes = true;  // rescale each mode to unit norm over the meshed port
};

/// A waveport: mesh region name plus its waveguide description.
struct PortDefinition {
  std::string name;
  waveguide::WaveguideSpec spec;
};

/// Waveguide modes of one port at a given wavenumber, with mesh-consistent normalization.
struct PortModes {
  std::string name;
  int region = 0;
  waveguide::WaveguideSpec spec;
  std::vector<waveguide::WaveguideMode> modes;
  std::vector<double> scale;  // multiplies the analytic field
};

namespace detail {

inline void check_triangles(const mesh::RwgBasisSet& rwg) {
  for (std::size_t t = 0; t < rwg.geometry.size(); ++t)
    if (!(rwg.geometry[t].area > 0.0) || !std::isfinite(rwg.geometry[t].area))
      throw NumericalError("assembly: degenerate triangle " + std::to_string(t));
}

/// (e^{-x} - 1) / x for x = jkR, stable near zero.
inline cplx expm1_over(cplx x) {
  if (std::abs(x) < 1e-3) return -1.0 + x / 2.0 - x * x / 6.0 + x * x * x / 24.0;
  return (std::exp(-x) - 1.0) / x;
}

/// 1 - (1 + x) e^{-x}, stable near zero.
inline cplx one_minus_1px_emx(cplx x) {
  if (std::abs(x) < 0.1) {
    cplx term = x, sum = 0.0;
    double fact = 1.0;
    for (int n = 2; n <= 14; ++n) {
      term *= x;
      fact *= n;
      sum += (n % 2 == 0 ? 1.0 : -1.0) * double(n - 1) * term / fact;
    }
    return sum;
  }
  return 1.0 - (1.0 + x) * std::exp(-x);
}

struct TriQuad {
  std::vector<Vec3> p;
  std::vector<double> w;
};

inline TriQuad tri_quad(const mesh::TriangleMesh& m, const mesh::RwgBasisSet& rwg, std::size_t t,
                        const quadrature::TriangleRule& rule) {
  const auto& tri = m.triangles[t];
  const auto mr = quadrature::map_rule(rule, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]],
                                       rwg.geometry[t].area);
  return {mr.p, mr.w};
}

/// Column of each magnetic RWG in the Nm-sized blocks, -1 for non-magnetic functions.
inline std::vector<Index> magnetic_columns(const mesh::RwgBasisSet& rwg) {
  std::vector<Index> col(static_cast<std::size_t>(rwg.size()), -1);
  for (std::size_t c = 0; c < rwg.magnetic_index.size(); ++c) col[rwg.magnetic_index[c]] = static_cast<Index>(c);
  return col;
}

}  // namespace detail

/// Operator blocks: L over all RWGs, principal-value K and the residue Gram C between
/// electric test functions (rows) and magnetic source functions (columns).
struct OperatorBlocks {
  double k = 0.0;
  MatrixXc L;    // N x N
  MatrixXc Kpv;  // N x Nm
  MatrixXd C;    // N x Nm, <psi_i, n x psi_j> on shared port triangles
  std::vector<Index> magnetic;  // RWG ids of the magnetic columns

  Index n() const { return L.rows(); }
  Index nm() const { return static_cast<Index>(magnetic.size()); }
  MatrixXc L_mm() const {
    MatrixXc out(nm(), nm());
    for (Index a = 0; a < nm(); ++a)
      for (Index b = 0; b < nm(); ++b) out(a, b) = L(magnetic[a], magnetic[b]);
    return out;
  }
  MatrixXc K_plus() const { return Kpv + 0.5 * C.cast<cplx>(); }
  MatrixXc K_minus() const { return Kpv - 0.5 * C.cast<cplx>(); }
};

inline OperatorBlocks assemble_operators(const mesh::TriangleMesh& m, const mesh::RwgBasisSet& rwg, double k,
                                         const AssemblyOptions& opt = {}) {
  if (!(k > 0.0)) throw ArgumentError("assemble_operators: k must be positive");
  detail::check_triangles(rwg);
  const Index N = rwg.size();
  const auto mcol = detail::magnetic_columns(rwg);
  OperatorBlocks ops;
  ops.k = k;
  ops.magnetic = rwg.magnetic_index;
  ops.L = MatrixXc::Zero(N, N);
  ops.Kpv = MatrixXc::Zero(N, ops.nm());
  ops.C = MatrixXd::Zero(N, ops.nm());

  const std::size_t nt = m.triangles.size();
  const auto near_rule = quadrature::triangle_rule(7);
  const auto far_rule = quadrature::triangle_rule(opt.far_points);
  std::vector<detail::TriQuad> qn(nt), qf(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    qn[t] = detail::tri_quad(m, rwg, t, near_rule);
    qf[t] = detail::tri_quad(m, rwg, t, far_rule);
  }
  const double inv4pi = 1.0 / (4.0 * pi);
  const cplx jk = I * k;

  // ---- L: mixed-potential EFIE operator, upper triangle of triangle pairs then mirrored.
  for (std::size_t p = 0; p < nt; ++p) {
    const auto& ap = rwg.on_triangle[p];
    if (ap.empty()) continue;
    const auto& gp = rwg.geometry[p];
    for (std::size_t q = p; q < nt; ++q) {
      const auto& aq = rwg.on_triangle[q];
      if (aq.empty()) continue;
      const auto& gq = rwg.geometry[q];
      const double dist = (gp.centroid - gq.centroid).norm();
      const double size = std::max(gp.size, gq.size);
      const bool singular = dist < opt.singular_factor * size;
      const bool near = dist < opt.near_factor * size;
      const auto& op = near ? qn[p] : qf[p];
      const auto& oq = near ? qn[q] : qf[q];
      // Moments of the kernel: D = int g, Cv = int g r, Bv = int g r', A = int g r.r'.
      cplx D = 0.0, A = 0.0;
      CVec3 Cv = CVec3::Zero(), Bv = CVec3::Zero();
      for (std::size_t a = 0; a < op.p.size(); ++a) {
        const Vec3& r = op.p[a];
        cplx d = 0.0;
        CVec3 b = CVec3::Zero();
        for (std::size_t c = 0; c < oq.p.size(); ++c) {
          const Vec3& rp = oq.p[c];
          const double R = (r - rp).norm();
          cplx g;
          if (singular)
            g = jk * detail::expm1_over(jk * R) * inv4pi;  // (e^{-jkR} - 1) / (4 pi R)
          else
            g = std::exp(-jk * R) / R * inv4pi;
          g *= oq.w[c];
          d += g;
          b += g * rp.cast<cplx>();
        }
        if (singular) {
          const Vec3 tri[3] = {m.vertices[m.triangles[q][0]], m.vertices[m.triangles[q][1]], m.vertices[m.triangles[q][2]]};
          const auto s = potential::static_integrals(tri, r);
          d += s.scalar * inv4pi;
          b += ((s.vector + s.rho * s.scalar) * inv4pi).cast<cplx>();
        }
        const double w = op.w[a];
        D += w * d;
        Cv += (w * d) * r.cast<cplx>();
        Bv += w * b;
        A += w * r.cast<cplx>().dot(b);
      }
      for (const auto& ti : ap) {
        const Vec3& va = m.vertices[ti.opp];
        const double ci = ti.sign * rwg.functions[ti.rwg].length / (2.0 * gp.area);
        for (const auto& tj : aq) {
          const Vec3& vb = m.vertices[tj.opp];
          const double cj = tj.sign * rwg.functions[tj.rwg].length / (2.0 * gq.area);
          const cplx pp = A - va.cast<cplx>().dot(Bv) - vb.cast<cplx>().dot(Cv) + va.dot(vb) * D;
          const cplx val = ci * cj * (pp - 4.0 * D / (k * k));
          ops.L(ti.rwg, tj.rwg) += val;
          if (q != p) ops.L(tj.rwg, ti.rwg) += val;
        }
      }
    }
  }
  ops.L = (0.5 * (ops.L + ops.L.transpose())).eval();

  if (ops.nm() == 0) return ops;

  // ---- K (principal value) and residue Gram C for magnetic sources on port triangles.
  std::vector<std::size_t> source_tris;
  for (std::size_t q = 0; q < nt; ++q)
    for (const auto& a : rwg.on_triangle[q])
      if (mcol[a.rwg] >= 0) {
        source_tris.push_back(q);
        break;
      }
  for (std::size_t p = 0; p < nt; ++p) {
    const auto& ap = rwg.on_triangle[p];
    if (ap.empty()) continue;
    const auto& gp = rwg.geometry[p];
    for (std::size_t q : source_tris) {
      const auto& gq = rwg.geometry[q];
      const double size = std::max(gp.size, gq.size);
      if (std::abs(gq.normal.dot(gp.normal)) > 1.0 - 1e-12 && std::abs(gq.normal.dot(gp.centroid - gq.centroid)) < 1e-10 * size)
        continue;  // coplanar: the triple product vanishes identically
      const double dist = (gp.centroid - gq.centroid).norm();
      const bool singular = dist < opt.singular_factor * size;
      const bool near = dist < opt.near_factor * size;
      const auto& op = near ? qn[p] : qf[p];
      const auto& oq = near ? qn[q] : qf[q];
      const Vec3 tri[3] = {m.vertices[m.triangles[q][0]], m.vertices[m.triangles[q][1]], m.vertices[m.triangles[q][2]]};
      std::vector<CVec3> V(op.p.size());
      for (std::size_t a = 0; a < op.p.size(); ++a) {
        const Vec3& r = op.p[a];
        CVec3 v = CVec3::Zero();
        for (std::size_t c = 0; c < oq.p.size(); ++c) {
          const Vec3 d = r - oq.p[c];
          const double R = d.norm();
          cplx g1;
          if (singular)  // G1 + 1/(4 pi R^3)
            g1 = detail::one_minus_1px_emx(jk * R) * inv4pi / (R * R * R);
          else
            g1 = -(1.0 + jk * R) * std::exp(-jk * R) * inv4pi / (R * R * R);
          v += (oq.w[c] * g1) * d.cast<cplx>();
        }
        if (singular) v -= (potential::static_integrals(tri, r).grad * inv4pi).cast<cplx>();
        V[a] = v;
      }
      for (const auto& ti : ap) {
        const Vec3& va = m.vertices[ti.opp];
        const double ci = ti.sign * rwg.functions[ti.rwg].length / (2.0 * gp.area);
        for (const auto& tj : rwg.on_triangle[q]) {
          const Index col = mcol[tj.rwg];
          if (col < 0) continue;
          const Vec3& vb = m.vertices[tj.opp];
          const double cj = tj.sign * rwg.functions[tj.rwg].length / (2.0 * gq.area);
          cplx s = 0.0;
          for (std::size_t a = 0; a < op.p.size(); ++a) {
            const Vec3& r = op.p[a];
            s += op.w[a] * (r - vb).cross(r - va).cast<cplx>().dot(V[a]);
          }
          ops.Kpv(ti.rwg, col) += ci * cj * s;
        }
      }
    }
  }
  for (std::size_t t : source_tris) {
    const auto& g = rwg.geometry[t];
    const auto& qt = qn[t];
    for (const auto& ti : rwg.on_triangle[t]) {
      const Vec3& va = m.vertices[ti.opp];
      const double ci = ti.sign * rwg.functions[ti.rwg].length / (2.0 * g.area);
      for (const auto& tj : rwg.on_triangle[t]) {
        const Index col = mcol[tj.rwg];
        if (col < 0) continue;
        const Vec3& vb = m.vertices[tj.opp];
        const double cj = tj.sign * rwg.functions[tj.rwg].length / (2.0 * g.area);
        double s = 0.0;
        for (std::size_t a = 0; a < qt.p.size(); ++a)
          s += qt.w[a] * (qt.p[a] - va).dot(g.normal.cross(qt.p[a] - vb));
        ops.C(ti.rwg, col) += ci * cj * s;
      }
    }
  }
  return ops;
}

// ------------------------------------------------------------------ ports and projections

/// Enumerates modes for each port definition and matches them to mesh regions.
inline std::vector<PortModes> prepare_ports(const mesh::TriangleMesh& m, const mesh::RwgBasisSet& rwg,
                                            const std::vector<PortDefinition>& defs, double k,
                                            const AssemblyOptions& opt = {}) {
  if (static_cast<Index>(defs.size()) != m.num_ports())
    throw ConfigurationError("mesh has " + std::to_string(m.num_ports()) + " ports but " + std::to_string(defs.size()) +
                             " port definitions were given");
  const auto rule = quadrature::triangle_rule(7);
  std::vector<PortModes> out;
  for (int region = 1; region <= m.num_ports(); ++region) {
    const std::string& name = m.port_names[region - 1];
    const auto it = std::find_if(defs.begin(), defs.end(), [&](const PortDefinition& d) { return d.name == name; });
    if (it == defs.end()) throw ConfigurationError("no waveguide definition for port '" + name + "'");
    PortModes pm;
    pm.name = name;
    pm.region = region;
    pm.spec = it->spec;
    pm.modes = waveguide::enumerate_modes(pm.spec, k);
    pm.scale.assign(pm.modes.size(), 1.0);
    std::vector<double> norm2(pm.modes.size(), 0.0);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      if (m.region[t] != region) continue;
      if (rwg.geometry[t].normal.dot(pm.spec.frame.normal) < 0.99)
        throw ValidationError("port '" + name + "': triangle " + std::to_string(t) + " normal disagrees with the port frame");
      const auto q = detail::tri_quad(m, rwg, t, rule);
      for (std::size_t a = 0; a < q.p.size(); ++a)
        for (std::size_t md = 0; md < pm.modes.size(); ++md)
          norm2[md] += q.w[a] * waveguide::mode_field_global(pm.spec, pm.modes[md], q.p[a]).squaredNorm();
    }
    if (opt.renormalize_modes)
      for (std::size_t md = 0; md < pm.modes.size(); ++md) pm.scale[md] = 1.0 / std::sqrt(norm2[md]);
    out.push_back(std::move(pm));
  }
  return out;
}

struct ModeLabel {
  std::string port;
  std::string mode;
  bool propagating;
  std::string str() const { return port + ":" + mode; }
};

/// Q^M, Q^E (all modes x (N + Nm)) and P (J x (N + Nm)) in the current layout [I^e; j I^m].
struct ProjectionOperators {
  MatrixXc QM, QE, P;
  std::vector<ModeLabel> modes;
  sphwave::SphericalBasis basis;
  Vec3 center = Vec3::Zero();

  Index num_modes() const { return static_cast<Index>(modes.size()); }
  std::vector<Index> propagating() const {
    std::vector<Index> out;
    for (Index a = 0; a < num_modes(); ++a)
      if (modes[a].propagating) out.push_back(a);
    return out;
  }
};

inline ProjectionOperators build_projections(const mesh::TriangleMesh& m, const mesh::RwgBasisSet& rwg,
                                             const std::vector<PortModes>& ports, const sphwave::SphericalBasis& basis,
                                             const Vec3& center = Vec3::Zero()) {
  const Index N = rwg.size();
  const Index Nm = static_cast<Index>(rwg.magnetic_index.size());
  const auto mcol = detail::magnetic_columns(rwg);
  const double k = basis.k();
  ProjectionOperators pr;
  pr.basis = basis;
  pr.center = center;
  Index M = 0;
  for (const auto& p : ports) M += static_cast<Index>(p.modes.size());
  pr.QM = MatrixXc::Zero(M, N + Nm);
  pr.QE = MatrixXc::Zero(M, N + Nm);
  const auto rule = quadrature::triangle_rule(7);

  Index row0 = 0;
  for (const auto& port : ports) {
    const Vec3 n = port.spec.frame.normal;
    for (std::size_t md = 0; md < port.modes.size(); ++md)
      pr.modes.push_back({port.name, port.modes[md].label, port.modes[md].propagating});
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      if (m.region[t] != port.region) continue;
      const auto q = detail::tri_quad(m, rwg, t, rule);
      for (std::size_t md = 0; md < port.modes.size(); ++md) {
        const auto& mode = port.modes[md];
        const cplx se = std::sqrt(mode.eta);
        for (const auto& att : rwg.on_triangle[t]) {
          double pe = 0.0, pm = 0.0;
          for (std::size_t a = 0; a < q.p.size(); ++a) {
            const Vec3 e = port.scale[md] * waveguide::mode_field_global(port.spec, mode, q.p[a]);
            const Vec3 psi = mesh::rwg_value(m, rwg, att.rwg, t, q.p[a]);
            pe += q.w[a] * e.dot(psi);
            pm += q.w[a] * n.cross(e).dot(psi);
          }
          pr.QE(row0 + static_cast<Index>(md), att.rwg) += -se * pe;
          if (mcol[att.rwg] >= 0) pr.QM(row0 + static_cast<Index>(md), N + mcol[att.rwg]) += -I / se * pm;
        }
      }
    }
    row0 += static_cast<Index>(port.modes.size());
  }

  // Spherical projections.
  const Index J = basis.size();
  pr.P = MatrixXc::Zero(J, N + Nm);
  std::vector<Index> partner(static_cast<std::size_t>(J));
  for (Index a = 0; a < J; ++a) partner[a] = basis.partner(a);
  const double se0 = std::sqrt(constants::eta0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& att = rwg.on_triangle[t];
    if (att.empty()) continue;
    const auto q = detail::tri_quad(m, rwg, t, rule);
    for (std::size_t a = 0; a < q.p.size(); ++a) {
      const MatrixXc U = sphwave::eval_all(basis, sphwave::WaveKind::regular, q.p[a] - center);
      for (const auto& at : att) {
        const Vec3 psi = mesh::rwg_value(m, rwg, at.rwg, t, q.p[a]);
        const VectorXc up = U * psi.cast<cplx>();
        pr.P.col(at.rwg) += (k * se0 * q.w[a]) * up;
        if (mcol[at.rwg] >= 0) {
          const Index c = N + mcol[at.rwg];
          for (Index al = 0; al < J; ++al) pr.P(al, c) -= (k / se0 * q.w[a]) * up[partner[al]];
        }
      }
    }
  }
  return pr;
}

// ------------------------------------------------------------------ impedance systems

enum class Formulation { magnetic, electric };

inline std::string to_string(Formulation f) { return f == Formulation::magnetic ? "magnetic" : "electric"; }

/// Factorized impedance system Z I = V in the layout [I^e; j I^m].
class ImpedanceSystem {
 public:
  /// Factors D Z D with D = diag(|Z_ii|^-1/2). The scaling keeps Z symmetric and balances the
  /// electric and magnetic blocks, which differ by about eta0^2.
  ImpedanceSystem(Formulation f, MatrixXc Z) : f_(f), Z_(std::move(Z)), d_(Z_.rows()) {
    for (Index i = 0; i < Z_.rows(); ++i) {
      const double a = std::abs(Z_(i, i));
      if (!(a > 0.0) || !std::isfinite(a)) throw NumericalError("impedance matrix has a zero or non-finite diagonal entry");
      d_[i] = 1.0 / std::sqrt(a);
    }
    lu_.compute(d_.asDiagonal() * Z_ * d_.asDiagonal());
    rcond_ = lu_.rcond();
    if (!(rcond_ > 1e-14) || !std::isfinite(rcond_))
      throw NumericalError("impedance matrix is singular or ill-conditioned (rcond estimate " + std::to_string(rcond_) + ")");
  }

  Formulation formulation() const { return f_; }
  const MatrixXc& Z() const { return Z_; }
  /// Reciprocal condition estimate of the scaled matrix.
  double rcond() const { return rcond_; }
  template <class Rhs>
  MatrixXc solve(const Rhs& rhs) const {
    if (rhs.rows() != Z_.rows()) throw ArgumentError("solve: right-hand side has the wrong length");
    return d_.asDiagonal() * lu_.solve(d_.asDiagonal() * rhs);
  }

 private:
  Formulation f_;
  MatrixXc Z_;
  VectorXd d_;
  Eigen::PartialPivLU<MatrixXc> lu_;
  double rcond_ = 0.0;
};

inline MatrixXc impedance_matrix(const OperatorBlocks& ops, const ProjectionOperators& pr, Formulation f) {
  const Index N = ops.n(), Nm = ops.nm();
  if (pr.QM.cols() != N + Nm || pr.P.cols() != N + Nm) throw ArgumentError("assemble_system: dimension mismatch");
  const double k = ops.k, e0 = constants::eta0;
  MatrixXc Z(N + Nm, N + Nm);
  Z.topLeftCorner(N, N) = (I * k * e0) * ops.L;
  if (Nm > 0) {
    const MatrixXc Kx = f == Formulation::magnetic ? ops.K_plus() : ops.K_minus();
    Z.topRightCorner(N, Nm) = -I * Kx;
    Z.bottomLeftCorner(Nm, N) = -I * Kx.transpose();
    Z.bottomRightCorner(Nm, Nm) = (I * k / e0) * ops.L_mm();
  }
  if (f == Formulation::magnetic)
    Z -= pr.QM.transpose() * pr.QM;  // G^M on the magnetic block
  else
    Z += pr.QE.transpose() * pr.QE;  // G^E on the electric block
  return Z;
}

inline ImpedanceSystem assemble_system(const OperatorBlocks& ops, const ProjectionOperators& pr, Formulation f) {
  return ImpedanceSystem(f, impedance_matrix(ops, pr, f));
}

/// Q^M or Q^E for the formulation.
inline const MatrixXc& port_projection(const ProjectionOperators& pr, Formulation f) {
  return f == Formulation::magnetic ? pr.QM : pr.QE;
}

/// Right-hand side 2 Q^t v + 2 P^t a (v over all port modes, a over the spherical basis).
inline VectorXc excitation(const ProjectionOperators& pr, Formulation f, const VectorXc& v, const VectorXc& a) {
  if (v.size() == 0 && a.size() == 0) throw ArgumentError("excitation: both v and a are empty");
  VectorXc rhs = VectorXc::Zero(pr.P.cols());
  if (v.size() > 0) {
    if (v.size() != pr.num_modes()) throw ArgumentError("excitation: v has the wrong length");
    rhs += 2.0 * port_projection(pr, f).transpose() * v;
  }
  if (a.size() > 0) {
    if (a.size() != pr.P.rows()) throw ArgumentError("excitation: a has the wrong length");
    rhs += 2.0 * pr.P.transpose() * a;
  }
  return rhs;
}

}  // namespace gsmkit::mom
