#pragma once

#include "gsmkit/core.hpp"

#include <cmath>

namespace gsmkit::potential {

/// Closed-form static integrals over a flat triangle for an observation point r:
///   scalar = int 1/R dS',  vector = int (rho' - rho)/R dS',  grad = int (r - r')/R^3 dS'
/// where rho is the projection of r onto the triangle plane.
struct StaticIntegrals {
  double scalar = 0.0;
  Vec3 vector = Vec3::Zero();
  Vec3 grad = Vec3::Zero();
  Vec3 rho = Vec3::Zero();
};

inline StaticIntegrals static_integrals(const Vec3 v[3], const Vec3& r) {
  const Vec3 n = (v[1] - v[0]).cross(v[2] - v[0]).normalized();
  const double h = n.dot(r - v[0]);
  const Vec3 rho = r - h * n;
  const double ah = std::abs(h);
  const double scale = (v[1] - v[0]).norm() + (v[2] - v[1]).norm() + (v[0] - v[2]).norm();
  const double tiny = 1e-12 * scale;

  StaticIntegrals out;
  out.rho = rho;
  double beta_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& pm = v[i];
    const Vec3& pp = v[(i + 1) % 3];
    const Vec3 lhat = (pp - pm).normalized();
    const Vec3 uhat = lhat.cross(n);
    const double lp = (pp - rho).dot(lhat);
    const double lm = (pm - rho).dot(lhat);
    const double p0 = (pp - rho).dot(uhat);
    const double r02 = p0 * p0 + h * h;
    const double rp = std::sqrt(lp * lp + r02);
    const double rm = std::sqrt(lm * lm + r02);
    // Pick the algebraically equivalent form that avoids cancellation.
    const double f = lp + lm >= 0.0 ? std::log((rp + lp) / (rm + lm)) : std::log((rm - lm) / (rp - lp));
    double beta = 0.0;
    if (std::abs(p0) > tiny)
      beta = std::atan(p0 * lp / (r02 + ah * rp)) - std::atan(p0 * lm / (r02 + ah * rm));
    beta_sum += beta;
    // uhat points away from the triangle; p0 is positive for interior projections.
    out.scalar += p0 * f - ah * beta;
    out.vector += 0.5 * uhat * (r02 * f + lp * rp - lm * rm);
    out.grad += uhat * f;
  }
  const double sgn = h > tiny ? 1.0 : (h < -tiny ? -1.0 : 0.0);
  out.grad += n * sgn * beta_sum;
  return out;
}

}  // namespace gsmkit::potential
