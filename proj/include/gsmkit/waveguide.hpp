#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/special.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace gsmkit::waveguide {

/// Port plane frame: origin, outward normal n (into the exterior region) and in-plane axis u.
/// The second in-plane axis is v = n x u.
struct PortFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u = Vec3::UnitX();

  Vec3 v() const { return normal.cross(u); }
  Vec2 local(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {d.dot(u), d.dot(v())};
  }
  Vec3 global_vector(const Vec2& e) const { return e.x() * u + e.y() * v(); }
};

enum class Kind { rectangular, coaxial };
enum class ModeType { TEM, TE, TM };

struct WaveguideSpec {
  Kind kind = Kind::rectangular;
  double a = 0.0;  // rectangular width (along u) or coaxial inner radius
  double b = 0.0;  // rectangular height (along v) or coaxial outer radius
  double eps_r = 1.0;
  double mu_r = 1.0;
  PortFrame frame;
  std::optional<int> mode_count;  // total modes M; default rule when empty

  void check() const {
    if (kind == Kind::rectangular && !(a > b && b > 0.0))
      throw ArgumentError("rectangular waveguide requires a > b > 0");
    if (kind == Kind::coaxial && !(b > a && a > 0.0))
      throw ArgumentError("coaxial waveguide requires r_outer > r_inner > 0");
    if (!(eps_r > 0.0) || !(mu_r > 0.0)) throw ArgumentError("waveguide fill must be lossless and positive");
    if (std::abs(frame.normal.norm() - 1.0) > 1e-9 || std::abs(frame.u.norm() - 1.0) > 1e-9 ||
        std::abs(frame.normal.dot(frame.u)) > 1e-9)
      throw ArgumentError("port frame axes must be orthonormal");
  }
  double fill_wavenumber(double k) const { return k * std::sqrt(eps_r * mu_r); }
  double fill_impedance() const { return constants::eta0 * std::sqrt(mu_r / eps_r); }
};

struct WaveguideMode {
  std::string label;
  ModeType type = ModeType::TE;
  int m = 0, n = 0;  // rectangular indices, or (azimuthal n, radial m) for coax
  bool odd = false;  // coax azimuthal parity (sin n phi)
  double kc = 0.0;
  cplx beta = 0.0;
  cplx eta = 0.0;
  bool propagating = false;
  double norm = 1.0;  // field normalization constant
  double radial_a = 0.0, radial_b = 0.0;  // coax radial cross-product weights
};

namespace detail {

inline double jn(int n, double x) { return std::cyl_bessel_j(double(n), x); }
inline double yn(int n, double x) { return std::cyl_neumann(double(n), x); }
inline double jnp(int n, double x) { return n == 0 ? -jn(1, x) : 0.5 * (jn(n - 1, x) - jn(n + 1, x)); }
inline double ynp(int n, double x) { return n == 0 ? -yn(1, x) : 0.5 * (yn(n - 1, x) - yn(n + 1, x)); }

/// Cross-product whose zeros are the coax cutoffs.
inline double coax_char(ModeType t, int n, double x, double a, double b) {
  if (t == ModeType::TM) return jn(n, x * a) * yn(n, x * b) - jn(n, x * b) * yn(n, x * a);
  return jnp(n, x * a) * ynp(n, x * b) - jnp(n, x * b) * ynp(n, x * a);
}

inline std::vector<double> coax_roots(ModeType t, int n, double a, double b, double x_max) {
  std::vector<double> roots;
  const double step = std::min(pi / (b - a), 1.0 / b) / 40.0;
  double x0 = 1e-3 / b;
  double f0 = coax_char(t, n, x0, a, b);
  for (double x1 = x0 + step; x1 <= x_max + step; x1 += step) {
    const double f1 = coax_char(t, n, x1, a, b);
    if (f0 == 0.0 || (f0 < 0.0) != (f1 < 0.0)) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = coax_char(t, n, mid, a, b);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

/// Radial profile R(rho) and dR/drho for a coax mode.
inline std::pair<double, double> coax_radial(const WaveguideMode& md, double rho) {
  const double x = md.kc * rho;
  const double r = md.radial_a * jn(md.n, x) - md.radial_b * yn(md.n, x);
  const double dr = md.kc * (md.radial_a * jnp(md.n, x) - md.radial_b * ynp(md.n, x));
  return {r, dr};
}

}  // namespace detail

/// Fills beta, eta and the propagating flag for wavenumber k.
inline void set_frequency(const WaveguideSpec& spec, WaveguideMode& md, double k) {
  const double kf = spec.fill_wavenumber(k);
  const double ef = spec.fill_impedance();
  const double d = kf * kf - md.kc * md.kc;
  md.propagating = d > 0.0 || md.type == ModeType::TEM;
  md.beta = md.type == ModeType::TEM ? cplx(kf, 0.0) : (d > 0.0 ? cplx(std::sqrt(d), 0.0) : cplx(0.0, -std::sqrt(-d)));
  if (md.type == ModeType::TEM)
    md.eta = ef;
  else if (md.type == ModeType::TE)
    md.eta = kf * ef / md.beta;
  else
    md.eta = md.beta * ef / kf;
}

namespace detail {

inline std::vector<WaveguideMode> rectangular_candidates(const WaveguideSpec& s, double kc_max) {
  std::vector<WaveguideMode> out;
  const int mmax = static_cast<int>(kc_max * s.a / pi) + 1;
  const int nmax = static_cast<int>(kc_max * s.b / pi) + 1;
  for (int m = 0; m <= mmax; ++m)
    for (int n = 0; n <= nmax; ++n) {
      if (m == 0 && n == 0) continue;
      const double q = std::sqrt(std::pow(m / s.a, 2) + std::pow(n / s.b, 2));
      const double kc = pi * q;
      if (kc > kc_max) continue;
      for (ModeType t : {ModeType::TE, ModeType::TM}) {
        if (t == ModeType::TM && (m == 0 || n == 0)) continue;
        WaveguideMode md;
        md.type = t;
        md.m = m;
        md.n = n;
        md.kc = kc;
        md.label = std::string(t == ModeType::TE ? "TE" : "TM") + std::to_string(m) + std::to_string(n);
        const double em = m == 0 ? 1.0 : 2.0, en = n == 0 ? 1.0 : 2.0;
        md.norm = t == ModeType::TE ? std::sqrt(em * en / (s.a * s.b)) / q : 2.0 / std::sqrt(s.a * s.b) / q;
        out.push_back(md);
      }
    }
  return out;
}

inline std::vector<WaveguideMode> coaxial_candidates(const WaveguideSpec& s, double kc_max) {
  std::vector<WaveguideMode> out;
  WaveguideMode tem;
  tem.type = ModeType::TEM;
  tem.label = "TEM";
  tem.norm = 1.0 / std::sqrt(2.0 * pi * std::log(s.b / s.a));
  out.push_back(tem);
  const auto gl = special::gauss_legendre(64);
  for (int n = 0;; ++n) {
    bool any = false;
    for (ModeType t : {ModeType::TE, ModeType::TM}) {
      const auto roots = coax_roots(t, n, s.a, s.b, kc_max);
      int idx = 0;
      for (double kc : roots) {
        ++idx;
        any = true;
        for (int par = 0; par < (n == 0 ? 1 : 2); ++par) {
          WaveguideMode md;
          md.type = t;
          md.n = n;
          md.m = idx;
          md.odd = par == 1;
          md.kc = kc;
          if (t == ModeType::TM) {
            md.radial_a = yn(n, kc * s.a);
            md.radial_b = jn(n, kc * s.a);
          } else {
            md.radial_a = ynp(n, kc * s.a);
            md.radial_b = jnp(n, kc * s.a);
          }
          double integral = 0.0;
          for (std::size_t q = 0; q < gl.x.size(); ++q) {
            const double rho = s.a + (s.b - s.a) * 0.5 * (gl.x[q] + 1.0);
            const double r = coax_radial(md, rho).first;
            integral += gl.w[q] * 0.5 * (s.b - s.a) * r * r * rho;
          }
          const double ang = n == 0 ? 2.0 * pi : pi;
          md.norm = 1.0 / (kc * std::sqrt(integral * ang));
          md.label = std::string(t == ModeType::TE ? "TE" : "TM") + std::to_string(n) + std::to_string(idx) +
                     (n == 0 ? "" : (par == 0 ? "e" : "o"));
          out.push_back(md);
        }
      }
    }
    if (!any && n > 0) break;
  }
  return out;
}

inline int type_rank(ModeType t) { return t == ModeType::TEM ? 0 : (t == ModeType::TE ? 1 : 2); }

}  // namespace detail

/// Modes sorted by cutoff (ties: TEM, TE, TM, then indices). The default count keeps every
/// mode with k_c <= 2 k and at least three evanescent modes, completing degenerate pairs.
inline std::vector<WaveguideMode> enumerate_modes(const WaveguideSpec& spec, double k) {
  spec.check();
  if (!(k > 0.0)) throw ArgumentError("enumerate_modes: k must be positive");
  const double kf = spec.fill_wavenumber(k);
  const double scale = spec.kind == Kind::rectangular ? pi / spec.b : 2.0 / (spec.a + spec.b);
  double kc_max = std::max(2.0 * kf, 4.0 * scale);
  std::vector<WaveguideMode> all;
  for (int attempt = 0; attempt < 8; ++attempt, kc_max *= 2.0) {
    all = spec.kind == Kind::rectangular ? detail::rectangular_candidates(spec, kc_max)
                                         : detail::coaxial_candidates(spec, kc_max);
    std::stable_sort(all.begin(), all.end(), [](const WaveguideMode& x, const WaveguideMode& y) {
      if (std::abs(x.kc - y.kc) > 1e-9 * std::max(1.0, x.kc)) return x.kc < y.kc;
      if (x.type != y.type) return detail::type_rank(x.type) < detail::type_rank(y.type);
      if (x.n != y.n) return x.n < y.n;
      if (x.m != y.m) return x.m < y.m;
      return x.odd < y.odd;
    });
    for (auto& md : all) set_frequency(spec, md, k);
    const auto n_prop = std::count_if(all.begin(), all.end(), [](const WaveguideMode& md) { return md.propagating; });
    const std::size_t needed = spec.mode_count ? std::size_t(*spec.mode_count) : std::size_t(n_prop + 3);
    if (all.size() >= needed + 2) break;
  }
  const auto n_prop =
      static_cast<int>(std::count_if(all.begin(), all.end(), [](const WaveguideMode& md) { return md.propagating; }));
  std::size_t count;
  if (spec.mode_count) {
    if (*spec.mode_count < n_prop)
      throw ConfigurationError("mode count " + std::to_string(*spec.mode_count) + " is below the " +
                               std::to_string(n_prop) + " propagating modes");
    count = static_cast<std::size_t>(*spec.mode_count);
  } else {
    count = static_cast<std::size_t>(
        std::count_if(all.begin(), all.end(), [&](const WaveguideMode& md) { return md.kc <= 2.0 * kf; }));
    count = std::max(count, static_cast<std::size_t>(n_prop + 3));
    while (count < all.size() && std::abs(all[count].kc - all[count - 1].kc) <= 1e-9 * all[count].kc) ++count;
  }
  if (count > all.size()) throw ConfigurationError("requested more modes than could be enumerated");
  all.resize(count);
  return all;
}

/// Transverse field in local port coordinates without a domain check (used for quadrature on
/// polygonal port meshes that approximate curved boundaries).
inline Vec2 mode_field_unchecked(const WaveguideSpec& s, const WaveguideMode& md, const Vec2& p) {
  if (s.kind == Kind::rectangular) {
    const double x = p.x() + 0.5 * s.a, y = p.y() + 0.5 * s.b;
    const double ma = md.m / s.a, nb = md.n / s.b;
    const double cx = std::cos(pi * ma * x), sx = std::sin(pi * ma * x);
    const double cy = std::cos(pi * nb * y), sy = std::sin(pi * nb * y);
    if (md.type == ModeType::TE) return md.norm * Vec2(nb * cx * sy, -ma * sx * cy);
    return md.norm * Vec2(ma * cx * sy, nb * sx * cy);
  }
  const double rho = p.norm();
  if (!(rho > 0.0)) throw DomainError("coaxial mode evaluated on the axis");
  const Vec2 rh = p / rho, ph(-rh.y(), rh.x());
  if (md.type == ModeType::TEM) return md.norm / rho * rh;
  const double phi = std::atan2(p.y(), p.x());
  const double c = md.odd ? std::sin(md.n * phi) : std::cos(md.n * phi);
  const double dc = md.odd ? md.n * std::cos(md.n * phi) : -md.n * std::sin(md.n * phi);
  const auto [r, dr] = detail::coax_radial(md, rho);
  const Vec2 grad = dr * c * rh + (r * dc / rho) * ph;
  if (md.type == ModeType::TM) return md.norm * grad;
  // TE: e = grad(psi) x z in the transverse plane.
  return md.norm * Vec2(grad.y(), -grad.x());
}

/// Normalized transverse field at a point of the cross-section (local coordinates).
inline Vec2 mode_field(const WaveguideSpec& s, const WaveguideMode& md, const Vec2& p) {
  const double tol = 1e-9 * std::max(s.a, s.b);
  if (s.kind == Kind::rectangular) {
    if (std::abs(p.x()) > 0.5 * s.a + tol || std::abs(p.y()) > 0.5 * s.b + tol)
      throw DomainError("point lies outside the rectangular cross-section");
  } else {
    const double rho = p.norm();
    if (rho < s.a - tol || rho > s.b + tol) throw DomainError("point lies outside the coaxial cross-section");
  }
  return mode_field_unchecked(s, md, p);
}

/// Field as a global 3-vector at a global point in the port plane (no domain check).
inline Vec3 mode_field_global(const WaveguideSpec& s, const WaveguideMode& md, const Vec3& p) {
  return s.frame.global_vector(mode_field_unchecked(s, md, s.frame.local(p)));
}

}  // namespace gsmkit::waveguide
