#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/special.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace gsmkit::sphwave {

enum class Parity { even = 0, odd = 1 };

/// Radial behaviour of a vector spherical wave: regular (j_l), incoming
/// (h_l^(1)) or outgoing (h_l^(2)), numbered as in the wave-kind superscripts.
enum class WaveKind { regular = 1, incoming = 3, outgoing = 4 };

struct ModeIndex {
  int tau = 1;  // 1 = TE, 2 = TM
  Parity sigma = Parity::even;
  int l = 1;
  int m = 0;
  Index alpha = 0;

  bool operator==(const ModeIndex&) const = default;
};

inline std::string to_string(const ModeIndex& mi) {
  return std::string(mi.tau == 1 ? "TE" : "TM") + (mi.sigma == Parity::even ? "e" : "o") + std::to_string(mi.l) + "," +
         std::to_string(mi.m);
}

/// Closed-form position of (tau, sigma, l, m) in the lexicographic (l, m, sigma, tau) ordering.
inline Index mode_position(int tau, Parity sigma, int l, int m) {
  Index pos = 2 * (Index(l) * l - 1);
  if (m > 0) pos += 2 + 4 * Index(m - 1);
  if (sigma == Parity::odd) pos += 2;
  return pos + (tau - 1);
}

inline Index mode_count(int l_max) { return 2 * Index(l_max) * (l_max + 2); }

/// Degree needed to represent fields radiated from inside a sphere of radius r_min.
inline int lmax_for_radius(double k, double r_min) {
  if (!(k > 0.0) || !(r_min > 0.0)) throw ArgumentError("lmax_for_radius: k and r_min must be positive");
  const double kr = k * r_min;
  return static_cast<int>(std::ceil(kr + 7.0 * std::cbrt(kr) + 3.0));
}

/// Ordered real-valued vector spherical wave basis truncated at degree l_max.
class SphericalBasis {
 public:
  SphericalBasis() = default;
  SphericalBasis(double k, int l_max) : k_(k), l_max_(l_max) {
    if (!(k > 0.0)) throw ArgumentError("SphericalBasis: wavenumber must be positive");
    if (l_max < 1) throw ArgumentError("SphericalBasis: l_max must be >= 1");
    modes_.reserve(static_cast<std::size_t>(mode_count(l_max)));
    for (int l = 1; l <= l_max; ++l)
      for (int m = 0; m <= l; ++m)
        for (Parity s : {Parity::even, Parity::odd}) {
          if (s == Parity::odd && m == 0) continue;
          for (int tau = 1; tau <= 2; ++tau)
            modes_.push_back(ModeIndex{tau, s, l, m, static_cast<Index>(modes_.size())});
        }
  }

  double k() const { return k_; }
  int l_max() const { return l_max_; }
  Index size() const { return static_cast<Index>(modes_.size()); }
  const ModeIndex& mode(Index alpha) const {
    if (alpha < 0 || alpha >= size()) throw ArgumentError("SphericalBasis: mode index out of range");
    return modes_[static_cast<std::size_t>(alpha)];
  }
  const std::vector<ModeIndex>& modes() const { return modes_; }

  /// TE <-> TM partner index.
  Index partner(Index alpha) const {
    const auto& mi = mode(alpha);
    return mode_position(3 - mi.tau, mi.sigma, mi.l, mi.m);
  }

 private:
  double k_ = 0.0;
  int l_max_ = 0;
  std::vector<ModeIndex> modes_;
};

namespace detail {

struct Frame {
  double ct, st, cp, sp;
  Vec3 rhat, that, phat;
};

inline Frame frame(double theta, double phi) {
  Frame f;
  f.ct = std::cos(theta);
  f.st = std::sin(theta);
  f.cp = std::cos(phi);
  f.sp = std::sin(phi);
  f.rhat = Vec3(f.st * f.cp, f.st * f.sp, f.ct);
  f.that = Vec3(f.ct * f.cp, f.ct * f.sp, -f.st);
  f.phat = Vec3(-f.sp, f.cp, 0.0);
  return f;
}

/// Y, dY/dtheta and (1/sin t) dY/dphi of the real harmonic (sigma, l, m).
struct ScalarHarmonic {
  double y, dtheta, dphi_sin;
};

inline ScalarHarmonic scalar_harmonic(const special::LegendreTable& t, Parity s, int l, int m, double cmp,
                                      double smp) {
  const double eps = m == 0 ? 1.0 : std::sqrt(2.0);
  const double trig = s == Parity::even ? cmp : smp;
  const double dtrig = s == Parity::even ? -m * smp : m * cmp;
  ScalarHarmonic h;
  h.y = eps * t.P(l, m) * trig;
  h.dtheta = eps * t.dP(l, m) * trig;
  h.dphi_sin = m == 0 ? 0.0 : eps * t.Psin(l, m) * dtrig;
  return h;
}

}  // namespace detail

/// Real vector spherical harmonics A_1, A_2, A_3 for one (sigma, l, m) at a direction.
struct VectorHarmonics {
  Vec3 a1, a2, a3;
};

/// Evaluates A_{tau_alpha}(rhat) for every mode of the basis; row alpha holds the Cartesian vector.
inline MatrixXd harmonics_at(const SphericalBasis& basis, double theta, double phi) {
  const auto f = detail::frame(theta, phi);
  const int L = basis.l_max();
  const auto leg = special::legendre_table(L, f.ct, f.st);
  MatrixXd out(basis.size(), 3);
  std::vector<double> cm(L + 1), sm(L + 1);
  for (int m = 0; m <= L; ++m) {
    cm[m] = std::cos(m * phi);
    sm[m] = std::sin(m * phi);
  }
  for (const auto& mi : basis.modes()) {
    const auto h = detail::scalar_harmonic(leg, mi.sigma, mi.l, mi.m, cm[mi.m], sm[mi.m]);
    const double nrm = 1.0 / std::sqrt(double(mi.l) * (mi.l + 1));
    Vec3 v = mi.tau == 1 ? Vec3(nrm * (h.dphi_sin * f.that - h.dtheta * f.phat))
                         : Vec3(nrm * (h.dtheta * f.that + h.dphi_sin * f.phat));
    out.row(mi.alpha) = v.transpose();
  }
  return out;
}

/// Evaluates u_alpha^(kind)(k r) for every alpha; row alpha holds the Cartesian field vector.
inline MatrixXc eval_all(const SphericalBasis& basis, WaveKind kind, const Vec3& r) {
  const double rn = r.norm();
  const double x = basis.k() * rn;
  const int L = basis.l_max();
  if (rn == 0.0 && kind != WaveKind::regular)
    throw DomainError("eval_wave: singular wave kinds are undefined at the origin");

  double theta = 0.0, phi = 0.0;
  if (rn > 0.0) {
    theta = std::acos(std::clamp(r.z() / rn, -1.0, 1.0));
    phi = std::atan2(r.y(), r.x());
  }
  const auto f = detail::frame(theta, phi);
  const auto leg = special::legendre_table(L, f.ct, f.st);

  // Radial functions z_l and the companions (x z_l)'/x and z_l/x.
  std::vector<cplx> z(L + 1), zd(L + 1), zx(L + 1);
  if (x == 0.0) {
    for (int l = 0; l <= L; ++l) z[l] = zd[l] = zx[l] = 0.0;
    z[0] = 1.0;
    if (L >= 1) {
      zd[1] = 2.0 / 3.0;
      zx[1] = 1.0 / 3.0;
    }
  } else {
    const auto jl = special::sph_bessel_j(L, x);
    if (kind == WaveKind::regular) {
      for (int l = 0; l <= L; ++l) z[l] = jl[l];
    } else {
      const auto yl = special::sph_bessel_y(L, x);
      const double sgn = kind == WaveKind::outgoing ? -1.0 : 1.0;
      for (int l = 0; l <= L; ++l) z[l] = cplx(jl[l], sgn * yl[l]);
    }
    for (int l = 1; l <= L; ++l) {
      zx[l] = z[l] / x;
      zd[l] = z[l - 1] - double(l) * zx[l];
    }
  }

  std::vector<double> cm(L + 1), sm(L + 1);
  for (int m = 0; m <= L; ++m) {
    cm[m] = std::cos(m * phi);
    sm[m] = std::sin(m * phi);
  }
  MatrixXc out(basis.size(), 3);
  for (const auto& mi : basis.modes()) {
    const auto h = detail::scalar_harmonic(leg, mi.sigma, mi.l, mi.m, cm[mi.m], sm[mi.m]);
    const double ll = double(mi.l) * (mi.l + 1);
    const double nrm = 1.0 / std::sqrt(ll);
    if (mi.tau == 1) {
      const Vec3 a1 = nrm * (h.dphi_sin * f.that - h.dtheta * f.phat);
      out.row(mi.alpha) = (z[mi.l] * a1.cast<cplx>()).transpose();
    } else {
      const Vec3 a2 = nrm * (h.dtheta * f.that + h.dphi_sin * f.phat);
      const Vec3 a3 = h.y * f.rhat;
      out.row(mi.alpha) =
          (zd[mi.l] * a2.cast<cplx>() + (std::sqrt(ll) * zx[mi.l]) * a3.cast<cplx>()).transpose();
    }
  }
  return out;
}

inline CVec3 eval_wave(const SphericalBasis& basis, Index alpha, WaveKind kind, const Vec3& r) {
  basis.mode(alpha);
  return eval_all(basis, kind, r).row(alpha).transpose();
}

/// u_{bar alpha}^(kind): the TE/TM partner, equal to (1/k) curl u_alpha^(kind).
inline CVec3 eval_curl_partner(const SphericalBasis& basis, Index alpha, WaveKind kind, const Vec3& r) {
  return eval_wave(basis, basis.partner(alpha), kind, r);
}

/// Regular-wave coefficients g of the plane wave E0 exp(-j k khat.r), normalized so that
/// E = k sqrt(eta0) sum g_alpha u_alpha^(1). The incoming-wave vector is a = g / 2.
inline VectorXc plane_wave_coefficients(const SphericalBasis& basis, const CVec3& e0, const Vec3& khat) {
  if (std::abs(khat.norm() - 1.0) > 1e-9) throw ArgumentError("plane_wave_coefficients: k_hat must be a unit vector");
  const double e0n = e0.norm();
  if (e0n > 0.0 && std::abs(khat.cast<cplx>().dot(e0)) > 1e-9 * e0n)
    throw ArgumentError("plane_wave_coefficients: E0 must be transverse to k_hat");
  const double theta = std::acos(std::clamp(khat.z(), -1.0, 1.0));
  const double phi = std::atan2(khat.y(), khat.x());
  const MatrixXd a = harmonics_at(basis, theta, phi);
  const double pre = 4.0 * pi / (basis.k() * std::sqrt(constants::eta0));
  VectorXc g(basis.size());
  for (const auto& mi : basis.modes()) {
    const cplx ph = mi.tau == 1 ? std::pow(I, -mi.l) : -std::pow(I, -(mi.l + 1));
    g[mi.alpha] = pre * ph * (a.row(mi.alpha).cast<cplx>() * e0)(0);
  }
  return g;
}

/// Far field r e^{jkr} E(r) of the outgoing expansion E = k sqrt(eta0) sum h_alpha u_alpha^(4).
class FarField {
 public:
  FarField(SphericalBasis basis, VectorXc h) : basis_(std::move(basis)), h_(std::move(h)) {
    if (h_.size() != basis_.size()) throw ArgumentError("farfield_from_outgoing: coefficient length mismatch");
  }

  /// (E_theta, E_phi) in V.
  Eigen::Vector2cd operator()(double theta, double phi) const {
    const MatrixXd a = harmonics_at(basis_, theta, phi);
    const auto f = detail::frame(theta, phi);
    CVec3 e = CVec3::Zero();
    for (const auto& mi : basis_.modes()) {
      const cplx ph = std::pow(I, mi.tau == 1 ? mi.l + 1 : mi.l);
      e += (ph * h_[mi.alpha]) * a.row(mi.alpha).transpose().cast<cplx>();
    }
    e *= std::sqrt(constants::eta0);
    return {f.that.cast<cplx>().dot(e), f.phat.cast<cplx>().dot(e)};
  }

  /// Radiated power in W: (1/2) sum |h|^2.
  double radiated_power() const { return 0.5 * h_.squaredNorm(); }

  const SphericalBasis& basis() const { return basis_; }

 private:
  SphericalBasis basis_;
  VectorXc h_;
};

inline FarField farfield_from_outgoing(const SphericalBasis& basis, const VectorXc& h) { return FarField(basis, h); }

}  // namespace gsmkit::sphwave
