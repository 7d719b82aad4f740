#pragma once

#include "gsmkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gsmkit::special {

/// Spherical Bessel functions j_l(x) for l = 0..lmax.
///
/// Upward recurrence is used when x >= lmax; otherwise Miller's downward
/// recurrence, normalized against whichever of j_0, j_1 is larger in
/// magnitude.
inline std::vector<double> sph_bessel_j(int lmax, double x) {
  std::vector<double> j(static_cast<std::size_t>(lmax) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    // Leading terms of the power series.
    double dfact = 1.0;  // (2l+1)!!
    double xl = 1.0;
    for (int l = 0; l <= lmax; ++l) {
      if (l > 0) {
        dfact *= (2.0 * l + 1.0);
        xl *= x;
      }
      const double x2 = x * x;
      j[l] = xl / dfact * (1.0 - x2 / (2.0 * (2 * l + 3)) + x2 * x2 / (8.0 * (2 * l + 3) * (2 * l + 5)));
    }
    return j;
  }
  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  if (ax >= lmax) {
    j[0] = j0;
    if (lmax >= 1) j[1] = j1;
    for (int l = 1; l < lmax; ++l) j[l + 1] = (2.0 * l + 1.0) / x * j[l] - j[l - 1];
    return j;
  }
  const int start = std::max(lmax, static_cast<int>(ax)) + 30 + lmax / 2;
  double up = 0.0;
  double cur = 1e-300;
  for (int n = start; n > 0; --n) {
    const double down = (2.0 * n + 1.0) / x * cur - up;
    up = cur;
    cur = down;
    // values now: cur = j_{n-1}, up = j_n
    if (n - 1 <= lmax) j[n - 1] = cur;
    if (n <= lmax) j[n] = up;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      up *= 1e-250;
      for (int l = n - 1; l <= lmax; ++l) j[l] *= 1e-250;
    }
  }
  const double scale = (std::abs(j0) >= std::abs(j1) || lmax < 1) ? j0 / j[0] : j1 / j[1];
  for (auto& v : j) v *= scale;
  return j;
}

/// Spherical Neumann functions y_l(x) by upward recurrence (stable for all x > 0).
inline std::vector<double> sph_bessel_y(int lmax, double x) {
  std::vector<double> y(static_cast<std::size_t>(lmax) + 1, 0.0);
  if (x <= 0.0) throw DomainError("spherical Neumann function requires x > 0");
  y[0] = -std::cos(x) / x;
  if (lmax >= 1) y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int l = 1; l < lmax; ++l) y[l + 1] = (2.0 * l + 1.0) / x * y[l] - y[l - 1];
  return y;
}

/// Outgoing spherical Hankel functions h_l^(2)(x) = j_l(x) - j y_l(x) (e^{+jwt} convention).
inline std::vector<cplx> sph_hankel2(int lmax, double x) {
  const auto j = sph_bessel_j(lmax, x);
  const auto y = sph_bessel_y(lmax, x);
  std::vector<cplx> h(j.size());
  for (std::size_t l = 0; l < h.size(); ++l) h[l] = cplx(j[l], -y[l]);
  return h;
}

inline std::size_t lm_index(int l, int m) { return static_cast<std::size_t>(l) * (l + 1) / 2 + m; }

/// Fully normalized associated Legendre functions (no Condon-Shortley phase)
/// with the companions needed for vector harmonics:
///   p     = Pn_l^m(cos t), normalized so that 2*pi*int Pn^2 dx = 1
///   p_sin = Pn_l^m / sin t  (m >= 1; finite at the poles)
///   dp    = d Pn_l^m / dt
struct LegendreTable {
  int lmax = 0;
  std::vector<double> p, p_sin, dp;

  double P(int l, int m) const { return p[lm_index(l, m)]; }
  double Psin(int l, int m) const { return p_sin[lm_index(l, m)]; }
  double dP(int l, int m) const { return dp[lm_index(l, m)]; }
};

inline LegendreTable legendre_table(int lmax, double cos_t, double sin_t) {
  LegendreTable t;
  t.lmax = lmax;
  const std::size_t n = lm_index(lmax, lmax) + 1;
  t.p.assign(n, 0.0);
  t.p_sin.assign(n, 0.0);
  t.dp.assign(n, 0.0);
  const double x = cos_t;

  // Sectoral seeds.
  std::vector<double> pmm(static_cast<std::size_t>(lmax) + 1), qmm(static_cast<std::size_t>(lmax) + 1);
  pmm[0] = 1.0 / std::sqrt(4.0 * pi);
  qmm[0] = 0.0;
  for (int m = 1; m <= lmax; ++m) {
    const double f = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    qmm[m] = f * pmm[m - 1];
    pmm[m] = qmm[m] * sin_t;
  }
  for (int m = 0; m <= lmax; ++m) {
    // Same three-term recurrence in l for Pn and Pn/sin.
    for (int pass = 0; pass < 2; ++pass) {
      if (pass == 1 && m == 0) continue;
      auto& dst = pass == 0 ? t.p : t.p_sin;
      const double seed = pass == 0 ? pmm[m] : qmm[m];
      dst[lm_index(m, m)] = seed;
      if (m + 1 <= lmax) dst[lm_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * seed;
      for (int l = m + 2; l <= lmax; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
        dst[lm_index(l, m)] = a * (x * dst[lm_index(l - 1, m)] - b * dst[lm_index(l - 2, m)]);
      }
    }
  }
  for (int l = 0; l <= lmax; ++l) {
    t.dp[lm_index(l, 0)] = l >= 1 ? -std::sqrt(double(l) * (l + 1)) * t.p[lm_index(l, 1)] : 0.0;
    for (int m = 1; m <= l; ++m) {
      double v = l * x * t.p_sin[lm_index(l, m)];
      if (l - 1 >= m) {
        v -= std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * double(l - m) * double(l + m)) *
             t.p_sin[lm_index(l - 1, m)];
      }
      t.dp[lm_index(l, m)] = v;
    }
  }
  return t;
}

struct GaussRule {
  std::vector<double> x, w;
};

/// Gauss-Legendre nodes/weights on [-1, 1].
inline GaussRule gauss_legendre(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

/// Product rule on the unit sphere, exact for spherical polynomials of degree <= degree.
struct SphereRule {
  std::vector<double> theta, phi, w;
  std::size_t size() const { return w.size(); }
};

inline SphereRule sphere_rule(int degree) {
  const int nt = degree / 2 + 1;
  const int np = degree + 1;
  const auto gl = gauss_legendre(nt);
  SphereRule s;
  for (int i = 0; i < nt; ++i) {
    const double th = std::acos(gl.x[i]);
    for (int j = 0; j < np; ++j) {
      s.theta.push_back(th);
      s.phi.push_back(2.0 * pi * j / np);
      s.w.push_back(gl.w[i] * 2.0 * pi / np);
    }
  }
  return s;
}

}  // namespace gsmkit::special
