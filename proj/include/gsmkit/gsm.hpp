#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/mesh.hpp"
#include "gsmkit/mom.hpp"
#include "gsmkit/sphwave.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace gsmkit::gsm {

/// Generalized scattering matrix [w; b] = [Gamma R; T S] [v; a] of one element at one frequency.
struct Gsm {
  double frequency = 0.0;
  sphwave::SphericalBasis basis;
  std::vector<std::string> port_modes;  // propagating modes kept in Gamma
  std::string formulation = "electric";
  MatrixXc Gamma, R, T, S;

  double k() const { return basis.k(); }
  Index num_ports() const { return Gamma.rows(); }
  Index dim() const { return Gamma.rows() + S.rows(); }

  MatrixXc stacked() const {
    MatrixXc s(dim(), dim());
    const Index M = Gamma.rows();
    s.topLeftCorner(M, M) = Gamma;
    s.topRightCorner(M, S.cols()) = R;
    s.bottomLeftCorner(S.rows(), M) = T;
    s.bottomRightCorner(S.rows(), S.cols()) = S;
    return s;
  }

  static Gsm from_stacked(const MatrixXc& st, Index M, double frequency, sphwave::SphericalBasis basis,
                          std::vector<std::string> labels, std::string formulation) {
    Gsm g;
    g.frequency = frequency;
    g.basis = std::move(basis);
    g.port_modes = std::move(labels);
    g.formulation = std::move(formulation);
    const Index J = st.rows() - M;
    g.Gamma = st.topLeftCorner(M, M);
    g.R = st.topRightCorner(M, J);
    g.T = st.bottomLeftCorner(J, M);
    g.S = st.bottomRightCorner(J, J);
    return g;
  }
};

/// Stacked projection [Q_prop; P] used for the GSM.
inline MatrixXc stacked_projection(const mom::ProjectionOperators& pr, mom::Formulation f) {
  const auto prop = pr.propagating();
  const MatrixXc& Q = mom::port_projection(pr, f);
  MatrixXc out(static_cast<Index>(prop.size()) + pr.P.rows(), pr.P.cols());
  for (std::size_t i = 0; i < prop.size(); ++i) out.row(static_cast<Index>(i)) = Q.row(prop[i]);
  out.bottomRows(pr.P.rows()) = pr.P;
  return out;
}

/// S~ = -2 P~ Z^-1 P~^t + D with D = diag(-1, 1) (magnetic) or the identity (electric);
/// evanescent port modes are dropped.
inline Gsm gsm_from_system(const mom::ImpedanceSystem& sys, const mom::ProjectionOperators& pr, double frequency) {
  const MatrixXc Pt = stacked_projection(pr, sys.formulation());
  const MatrixXc X = sys.solve(Pt.transpose());
  MatrixXc st = -2.0 * Pt * X;
  const Index M = Pt.rows() - pr.P.rows();
  for (Index i = 0; i < st.rows(); ++i)
    st(i, i) += (sys.formulation() == mom::Formulation::magnetic && i < M) ? -1.0 : 1.0;
  std::vector<std::string> labels;
  for (Index a : pr.propagating()) labels.push_back(pr.modes[a].str());
  return Gsm::from_stacked(st, M, frequency, pr.basis, std::move(labels), mom::to_string(sys.formulation()));
}

/// Reflected port amplitudes from a solved current: magnetic w = -v - Q^M I, electric w = v - Q^E I.
inline VectorXc port_response(const mom::ProjectionOperators& pr, mom::Formulation f, const VectorXc& current,
                              const VectorXc& v) {
  const VectorXc qi = mom::port_projection(pr, f) * current;
  return f == mom::Formulation::magnetic ? VectorXc(-v - qi) : VectorXc(v - qi);
}

/// Scattered outgoing coefficients h = -P I.
inline VectorXc outgoing_response(const mom::ProjectionOperators& pr, const VectorXc& current) { return -pr.P * current; }

inline MatrixXc sparams(const Gsm& g) { return g.Gamma; }

/// ||S~^H S~ - 1||_F / sqrt(dim).
inline double unitarity_defect(const Gsm& g) {
  const MatrixXc s = g.stacked();
  return (s.adjoint() * s - MatrixXc::Identity(s.rows(), s.cols())).norm() / std::sqrt(double(s.rows()));
}

struct PatternSample {
  double theta, phi;
  cplx e_theta, e_phi;
  double gain_dbi;
};

/// Far-field pattern for port excitation v (a = 0): b = T v. Gain uses the accepted power
/// (|v|^2 - |Gamma v|^2) / 2.
inline std::vector<PatternSample> gain_pattern(const Gsm& g, const VectorXc& v, const std::vector<double>& thetas,
                                               const std::vector<double>& phis) {
  if (v.size() != g.num_ports()) throw ArgumentError("gain_pattern: v has the wrong length");
  const VectorXc b = g.T * v;
  const VectorXc w = g.Gamma * v;
  const double accepted = 0.5 * (v.squaredNorm() - w.squaredNorm());
  const auto ff = sphwave::farfield_from_outgoing(g.basis, b);
  std::vector<PatternSample> out;
  for (double th : thetas)
    for (double ph : phis) {
      const auto e = ff(th, ph);
      const double u = e.squaredNorm() / (2.0 * constants::eta0);
      const double gain = accepted > 0.0 ? 4.0 * pi * u / accepted : 0.0;
      out.push_back({th, ph, e[0], e[1], gain > 0.0 ? 10.0 * std::log10(gain) : -300.0});
    }
  return out;
}

/// Bistatic RCS (m^2) for a plane wave E0 exp(-j k khat.r): h = (S - 1) a with a = g / 2.
inline std::vector<double> rcs_bistatic(const Gsm& g, const Vec3& khat, const CVec3& e0,
                                        const std::vector<std::pair<double, double>>& directions) {
  const VectorXc a = 0.5 * sphwave::plane_wave_coefficients(g.basis, e0, khat);
  const VectorXc h = g.S * a - a;
  const auto ff = sphwave::farfield_from_outgoing(g.basis, h);
  std::vector<double> out;
  for (const auto& [th, ph] : directions) out.push_back(4.0 * pi * ff(th, ph).squaredNorm() / e0.squaredNorm());
  return out;
}

// ------------------------------------------------------------------ one-call solver

struct SolveOptions {
  mom::Formulation formulation = mom::Formulation::electric;
  std::optional<int> l_max;  // overrides the truncation rule
  Vec3 center = Vec3::Zero();
  mom::AssemblyOptions assembly;
};

/// Radius of the smallest origin-centred sphere enclosing the mesh.
inline double enclosing_radius(const mesh::TriangleMesh& m, const Vec3& center) {
  double r = 0.0;
  for (const auto& v : m.vertices) r = std::max(r, (v - center).norm());
  return r;
}

struct Solution {
  Gsm gsm;
  mom::OperatorBlocks ops;
  mom::ProjectionOperators proj;
  std::vector<mom::PortModes> ports;
};

inline Solution solve(const mesh::TriangleMesh& m, const mesh::RwgBasisSet& rwg,
                      const std::vector<mom::PortDefinition>& ports, double frequency, const SolveOptions& opt = {}) {
  if (!(frequency > 0.0)) throw ArgumentError("solve: frequency must be positive");
  const double k = wavenumber(frequency);
  const int L = opt.l_max ? *opt.l_max : sphwave::lmax_for_radius(k, enclosing_radius(m, opt.center));
  Solution s;
  s.ops = mom::assemble_operators(m, rwg, k, opt.assembly);
  s.ports = mom::prepare_ports(m, rwg, ports, k, opt.assembly);
  s.proj = mom::build_projections(m, rwg, s.ports, sphwave::SphericalBasis(k, L), opt.center);
  const auto sys = mom::assemble_system(s.ops, s.proj, opt.formulation);
  s.gsm = gsm_from_system(sys, s.proj, frequency);
  return s;
}

}  // namespace gsmkit::gsm
