#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/special.hpp"
#include "gsmkit/sphwave.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <vector>

namespace gsmkit::translation {

/// Index of the real scalar harmonic (sigma, l, m); l^2 .. (l+1)^2 - 1 per degree.
inline Index scalar_index(sphwave::Parity s, int l, int m) {
  return Index(l) * l + (m == 0 ? 0 : 2 * m - 1 + (s == sphwave::Parity::odd ? 1 : 0));
}

struct ScalarMode {
  sphwave::Parity sigma;
  int l, m;
};

inline std::vector<ScalarMode> scalar_modes(int l_max) {
  std::vector<ScalarMode> out;
  for (int l = 0; l <= l_max; ++l)
    for (int m = 0; m <= l; ++m)
      for (auto s : {sphwave::Parity::even, sphwave::Parity::odd}) {
        if (m == 0 && s == sphwave::Parity::odd) continue;
        out.push_back({s, l, m});
      }
  return out;
}

/// Real scalar harmonics Y_s(theta, phi) for all s up to degree l_max.
inline VectorXd scalar_harmonics(int l_max, double theta, double phi) {
  const auto leg = special::legendre_table(l_max, std::cos(theta), std::sin(theta));
  VectorXd y((l_max + 1) * (l_max + 1));
  Index i = 0;
  for (const auto& sm : scalar_modes(l_max)) {
    const double eps = sm.m == 0 ? 1.0 : std::sqrt(2.0);
    const double trig = sm.sigma == sphwave::Parity::even ? std::cos(sm.m * phi) : std::sin(sm.m * phi);
    y[i++] = eps * leg.P(sm.l, sm.m) * trig;
  }
  return y;
}

namespace detail {

/// int_0^{2 pi} T_a T_b T_c dphi, T = cos(m phi) (even) or sin(m phi) (odd).
inline double phi_triple(sphwave::Parity sa, int ma, sphwave::Parity sb, int mb, sphwave::Parity sc, int mc) {
  // Expand each factor into exponentials and keep the zero-frequency terms.
  const ScalarMode f[3] = {{sa, 0, ma}, {sb, 0, mb}, {sc, 0, mc}};
  cplx total = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    int freq = 0;
    cplx coef = 1.0;
    for (int i = 0; i < 3; ++i) {
      const int sg = (mask >> i) & 1 ? -1 : 1;
      freq += sg * f[i].m;
      if (f[i].sigma == sphwave::Parity::even)
        coef *= f[i].m == 0 ? (sg == 1 ? 1.0 : 0.0) : 0.5;
      else
        coef *= double(sg) / (2.0 * I);
    }
    if (freq == 0) total += coef;
  }
  return 2.0 * pi * total.real();
}

}  // namespace detail

/// Translation of outgoing vector waves into regular waves about a displaced origin:
///   u^(4)_alpha(r + d) = sum_beta G_{beta alpha}(k d) u^(1)_beta(r),  |r| < |d|.
/// Built from the exact Cartesian decomposition of each vector wave into scalar waves
/// and the scalar addition theorem with real Gaunt coefficients.
class TranslationPlan {
 public:
  explicit TranslationPlan(int l_max) : l_max_(l_max), ls_(l_max + 1) {
    if (l_max < 1) throw ArgumentError("TranslationPlan: l_max must be >= 1");
    build_decomposition();
    build_gaunt();
  }

  int l_max() const { return l_max_; }
  Index size() const { return sphwave::mode_count(l_max_); }

  /// Scalar outgoing-to-regular matrix R_{ba}(k d) for degrees <= l_max + 1.
  MatrixXc scalar_translation(double k, const Vec3& d) const {
    const double dn = d.norm();
    if (!(dn > 0.0)) throw ArgumentError("translation: displacement must be non-zero");
    const double x = k * dn;
    const int lc_max = 2 * ls_;
    const auto h = special::sph_hankel2(lc_max, x);
    const double th = std::acos(std::clamp(d.z() / dn, -1.0, 1.0));
    const double ph = std::atan2(d.y(), d.x());
    const VectorXd yc = scalar_harmonics(lc_max, th, ph);
    const Index ns = (ls_ + 1) * (ls_ + 1);
    MatrixXc r = MatrixXc::Zero(ns, ns);
    for (const auto& e : gaunt_) {
      // Phase j^{la - lb - lc} is real since la + lb + lc is even.
      const int p = ((e.la - e.lb - e.lc) % 4 + 4) % 4;
      const double sign = p == 0 ? 1.0 : -1.0;
      r(e.b, e.a) += (4.0 * pi * sign * e.value * yc[e.c]) * h[e.lc];
    }
    return r;
  }

  /// Vector translation matrix G(k d) (J x J).
  MatrixXc translate(double k, const Vec3& d) const {
    const MatrixXc r = scalar_translation(k, d);
    MatrixXc g = MatrixXc::Zero(size(), size());
    for (int c = 0; c < 3; ++c) {
      const MatrixXc cr = cdec_[c] * r;
      g += cr * cdec_t_[c];
    }
    return inv_norm_.asDiagonal() * g;
  }

  /// Cartesian decomposition: (u_alpha)_c = sum_s C[c](alpha, s) z_{l_s} Y_s.
  const Eigen::SparseMatrix<cplx>& decomposition(int c) const { return cdec_[c]; }

 private:
  struct GauntEntry {
    Index a, b, c;
    int la, lb, lc;
    double value;
  };

  void build_decomposition() {
    const sphwave::SphericalBasis basis(1.0, l_max_);
    const auto smodes = scalar_modes(ls_);
    const Index ns = static_cast<Index>(smodes.size());
    const double x0 = ls_ + 1.0;
    const auto h = special::sph_hankel2(ls_, x0);
    const auto rule = special::sphere_rule(2 * ls_ + 2);
    std::vector<MatrixXc> dense(3, MatrixXc::Zero(basis.size(), ns));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto f = sphwave::detail::frame(rule.theta[q], rule.phi[q]);
      const MatrixXc u = sphwave::eval_all(basis, sphwave::WaveKind::outgoing, x0 * f.rhat);
      const VectorXd y = scalar_harmonics(ls_, rule.theta[q], rule.phi[q]);
      for (int c = 0; c < 3; ++c) dense[c] += rule.w[q] * u.col(c) * y.transpose().cast<cplx>();
    }
    inv_norm_ = VectorXd::Zero(basis.size());
    for (int c = 0; c < 3; ++c) {
      std::vector<Eigen::Triplet<cplx>> trip;
      for (Index s = 0; s < ns; ++s) {
        const cplx hs = h[smodes[s].l];
        for (Index a = 0; a < basis.size(); ++a) {
          const double v = (dense[c](a, s) / hs).real();
          if (std::abs(v) > 1e-12) {
            trip.emplace_back(a, s, v);
            inv_norm_[a] += v * v;
          }
        }
      }
      cdec_[c].resize(basis.size(), ns);
      cdec_[c].setFromTriplets(trip.begin(), trip.end());
      cdec_t_[c] = cdec_[c].transpose();
    }
    inv_norm_ = inv_norm_.cwiseInverse();
  }

  void build_gaunt() {
    const auto smodes = scalar_modes(ls_);
    const int lc_max = 2 * ls_;
    const int n = lc_max + 2;
    const auto gl = special::gauss_legendre(n);
    std::vector<special::LegendreTable> tabs;
    tabs.reserve(n);
    for (int i = 0; i < n; ++i) tabs.push_back(special::legendre_table(lc_max, gl.x[i], std::sqrt(1.0 - gl.x[i] * gl.x[i])));
    auto eps = [](int m) { return m == 0 ? 1.0 : std::sqrt(2.0); };
    for (Index a = 0; a < static_cast<Index>(smodes.size()); ++a) {
      const auto& A = smodes[a];
      for (Index b = 0; b < static_cast<Index>(smodes.size()); ++b) {
        const auto& B = smodes[b];
        const auto sc = A.sigma == B.sigma ? sphwave::Parity::even : sphwave::Parity::odd;
        const int orders[2] = {std::abs(A.m - B.m), A.m + B.m};
        for (int k = 0; k < (orders[0] == orders[1] ? 1 : 2); ++k) {
          const int mc = orders[k];
          if (mc == 0 && sc == sphwave::Parity::odd) continue;
          const double fphi = detail::phi_triple(A.sigma, A.m, B.sigma, B.m, sc, mc);
          if (std::abs(fphi) < 1e-14) continue;
          for (int lc = std::max(std::abs(A.l - B.l), mc); lc <= A.l + B.l; ++lc) {
            if ((A.l + B.l + lc) % 2 != 0) continue;
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += gl.w[i] * tabs[i].P(A.l, A.m) * tabs[i].P(B.l, B.m) * tabs[i].P(lc, mc);
            const double v = eps(A.m) * eps(B.m) * eps(mc) * s * fphi;
            if (std::abs(v) > 1e-15) gaunt_.push_back({a, b, scalar_index(sc, lc, mc), A.l, B.l, lc, v});
          }
        }
      }
    }
  }

  int l_max_;
  int ls_;
  Eigen::SparseMatrix<cplx> cdec_[3];
  Eigen::SparseMatrix<cplx> cdec_t_[3];
  VectorXd inv_norm_;
  std::vector<GauntEntry> gaunt_;
};

}  // namespace gsmkit::translation
