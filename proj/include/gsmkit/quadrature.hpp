#pragma once

#include "gsmkit/core.hpp"

#include <array>
#include <vector>

namespace gsmkit::quadrature {

/// Symmetric triangle rule in barycentric coordinates; weights sum to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> w;
  std::size_t size() const { return w.size(); }
};

inline TriangleRule triangle_rule(int points) {
  TriangleRule r;
  auto add3 = [&](double a, double b, double w) {
    r.bary.push_back({a, b, b});
    r.bary.push_back({b, a, b});
    r.bary.push_back({b, b, a});
    r.w.insert(r.w.end(), 3, w);
  };
  switch (points) {
    case 1:
      r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
      r.w.push_back(1.0);
      break;
    case 3:
      add3(2.0 / 3, 1.0 / 6, 1.0 / 3);
      break;
    case 7:
      r.bary.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3});
      r.w.push_back(0.225);
      add3(0.059715871789770, 0.470142064105115, 0.132394152788506);
      add3(0.797426985353087, 0.101286507323456, 0.125939180544827);
      break;
    default:
      throw ArgumentError("triangle_rule: supported point counts are 1, 3 and 7");
  }
  return r;
}

/// Quadrature points mapped onto a physical triangle; weights include the area.
struct MappedRule {
  std::vector<Vec3> p;
  std::vector<double> w;
};

inline MappedRule map_rule(const TriangleRule& rule, const Vec3& a, const Vec3& b, const Vec3& c, double area) {
  MappedRule m;
  m.p.reserve(rule.size());
  m.w.reserve(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    m.p.push_back(rule.bary[i][0] * a + rule.bary[i][1] * b + rule.bary[i][2] * c);
    m.w.push_back(rule.w[i] * area);
  }
  return m;
}

}  // namespace gsmkit::quadrature
