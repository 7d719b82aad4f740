#pragma once

// Invariant report for a stored GSM: unitarity, reciprocity, passivity, spectral circle and,
// for compressed files, reconstruction error.

#include "gsmkit/compression.hpp"
#include "gsmkit/config.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace gsmkit::verify {

struct Check {
  std::string name;
  double value;
  double threshold;
  bool pass;
};

struct Report {
  std::vector<Check> checks;
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

/// max(|R - T^t|, |Gamma - Gamma^t|, |S - S^t|) / max|T|, or / max|S~| when T is empty.
inline double reciprocity_defect(const gsm::Gsm& g) {
  double d = 0.0;
  if (g.R.size() > 0) d = std::max(d, (g.R - g.T.transpose()).cwiseAbs().maxCoeff());
  if (g.Gamma.size() > 0) d = std::max(d, (g.Gamma - g.Gamma.transpose()).cwiseAbs().maxCoeff());
  if (g.S.size() > 0) d = std::max(d, (g.S - g.S.transpose()).cwiseAbs().maxCoeff());
  const double scale = g.T.size() > 0 ? g.T.cwiseAbs().maxCoeff() : g.stacked().cwiseAbs().maxCoeff();
  return scale > 0.0 ? d / scale : d;
}

/// 1 minus the largest singular value of Gamma; negative means active.
inline double passivity_margin(const gsm::Gsm& g) {
  if (g.Gamma.size() == 0) return 1.0;
  return 1.0 - Eigen::JacobiSVD<MatrixXc>(g.Gamma).singularValues()(0);
}

/// max_n ||t_n + 1/2| - 1/2| over the eigenvalues of (S~ - 1)/2.
inline double circle_defect(const gsm::Gsm& g) {
  const MatrixXc s = g.stacked();
  const MatrixXc t = 0.5 * (s - MatrixXc::Identity(s.rows(), s.cols()));
  const VectorXc ev = Eigen::ComplexEigenSolver<MatrixXc>(t, false).eigenvalues();
  double d = 0.0;
  for (Index i = 0; i < ev.size(); ++i) d = std::max(d, std::abs(std::abs(ev[i] + 0.5) - 0.5));
  return d;
}

inline Report run(const io::Container& c, const config::VerifyThresholds& th = {}) {
  const auto& g = c.gsm;
  Report r;
  auto add = [&](std::string name, double v, double limit, bool pass) { r.checks.push_back({std::move(name), v, limit, pass}); };
  const double u = gsm::unitarity_defect(g);
  add("unitarity_defect", u, th.unitarity, u < th.unitarity);
  const double rec = reciprocity_defect(g);
  double rec_limit = th.reciprocity;
  if (c.compressed && c.compressed->retained() < c.compressed->dim) {
    // Discarded modes have |t| <= iota |t_1|, so S~' moves by at most 2 iota |t_1| in operator
    // norm and its antisymmetric part by twice that.
    const double scale = g.T.size() > 0 ? g.T.cwiseAbs().maxCoeff() : 1.0;
    rec_limit += 4.0 * c.compressed->iota * std::abs(c.compressed->values[0]) / scale;
  }
  add("reciprocity_defect", rec, rec_limit, rec < rec_limit);
  const double pm = passivity_margin(g);
  add("passivity_margin", pm, -th.passivity, pm >= -th.passivity);
  const double cd = circle_defect(g);
  add("circle_defect", cd, th.circle, cd < th.circle);
  // A compressed file's dense blocks are its own reconstruction, so the error against the
  // original can only come from the record written at compression time.
  if (c.compressed) {
    if (!c.error) throw ValidationError("compressed container has no reconstruction error record");
    add("reconstruction_error", c.error->err, th.reconstruction, c.error->err < th.reconstruction);
  }
  return r;
}

}  // namespace gsmkit::verify
