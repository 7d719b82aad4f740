#pragma once

#include "gsmkit/compression.hpp"
#include "gsmkit/core.hpp"
#include "gsmkit/gsm.hpp"
#include "gsmkit/mom.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

namespace gsmkit::characteristic {

/// Solution of X I = lambda R I with R = Re Z, X = Im Z.
struct CharacteristicSpectrum {
  VectorXd lambda;    // ascending |lambda|
  MatrixXd currents;  // columns I_n, normalized to I^t R I = 1
  Index null_dim = 0;  // dimension of the dropped null space of R
};

/// t = -1 / (1 + j lambda).
inline cplx t_from_lambda(double lambda) { return -1.0 / cplx(1.0, lambda); }

/// Characteristic modes of a symmetric impedance matrix. The null space of R (eigenvalues below
/// null_tol times the largest) is eliminated by a Schur complement on X.
inline CharacteristicSpectrum characteristic_modes(const MatrixXc& Z, double null_tol = 1e-10) {
  if (Z.rows() != Z.cols() || Z.rows() == 0) throw ArgumentError("characteristic_modes: Z must be square and non-empty");
  const MatrixXd R = 0.5 * (Z.real() + Z.real().transpose());
  const MatrixXd X = 0.5 * (Z.imag() + Z.imag().transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> re(R);
  if (re.info() != Eigen::Success) throw NumericalError("characteristic_modes: eigensolver failed on Re Z");
  const VectorXd& d = re.eigenvalues();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0)) throw NumericalError("characteristic_modes: Re Z vanishes");
  if (d.minCoeff() < -1e-6 * dmax) throw NumericalError("characteristic_modes: Re Z is indefinite");
  std::vector<Index> keep, drop;
  for (Index i = 0; i < d.size(); ++i) (d[i] > null_tol * dmax ? keep : drop).push_back(i);
  const Index r = static_cast<Index>(keep.size()), n0 = static_cast<Index>(drop.size());
  MatrixXd Vr(R.rows(), r), Vn(R.rows(), n0);
  VectorXd dr(r);
  for (Index i = 0; i < r; ++i) {
    Vr.col(i) = re.eigenvectors().col(keep[i]);
    dr[i] = d[keep[i]];
  }
  for (Index i = 0; i < n0; ++i) Vn.col(i) = re.eigenvectors().col(drop[i]);

  // Null-space components follow from Vn^t X I = 0.
  MatrixXd Xs = Vr.transpose() * X * Vr;
  MatrixXd elim = MatrixXd::Zero(n0, r);
  if (n0 > 0) {
    const MatrixXd Xnn = Vn.transpose() * X * Vn;
    const MatrixXd Xnr = Vn.transpose() * X * Vr;
    Eigen::PartialPivLU<MatrixXd> lu(Xnn);
    elim = -lu.solve(Xnr);
    Xs += Xnr.transpose() * elim;
  }
  const VectorXd s = dr.cwiseSqrt().cwiseInverse();
  const MatrixXd A = s.asDiagonal() * Xs * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> ev(0.5 * (A + A.transpose()));
  if (ev.info() != Eigen::Success) throw NumericalError("characteristic_modes: reduced eigenproblem failed");

  std::vector<Index> order(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(ev.eigenvalues()[a]) < std::abs(ev.eigenvalues()[b]); });
  CharacteristicSpectrum out;
  out.null_dim = n0;
  out.lambda.resize(r);
  out.currents.resize(R.rows(), r);
  for (Index i = 0; i < r; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    out.lambda[i] = ev.eigenvalues()[j];
    const VectorXd yr = s.asDiagonal() * ev.eigenvectors().col(j);
    out.currents.col(i) = Vr * yr + (n0 > 0 ? VectorXd(Vn * (elim * yr)) : VectorXd::Zero(R.rows()));
  }
  return out;
}

struct CheckReport {
  std::vector<cplx> t_gsm;     // leading eigenvalues of T~
  std::vector<cplx> t_modes;   // paired -1/(1 + j lambda)
  double max_relative_mismatch = 0.0;  // max |t_gsm - t_modes| / |t_gsm|
  double max_circle_defect = 0.0;      // max ||t + 1/2| - 1/2| over all eigenvalues of T~
  double real_part_defect = 0.0;       // ||Re Z - Re(P~^t P~)||_F / ||Re Z||_F
  Index null_dim = 0;
};

/// Compares the spectrum of T~ with the characteristic numbers of the electric impedance matrix.
inline CheckReport characteristic_check(const mom::ImpedanceSystem& sys, const mom::ProjectionOperators& pr,
                                        const gsm::Gsm& g, Index count = 10) {
  if (sys.formulation() != mom::Formulation::electric)
    throw ArgumentError("characteristic_check: requires the electric formulation");
  if (count < 1) throw ArgumentError("characteristic_check: count must be positive");
  const auto cm = characteristic_modes(sys.Z());
  const auto comp = compression::compress(g, 1e-300);
  if (comp.kind != compression::Kind::eigen) throw NumericalError("characteristic_check: GSM is not normal");

  CheckReport rep;
  rep.null_dim = cm.null_dim;
  for (Index i = 0; i < comp.retained(); ++i)
    rep.max_circle_defect = std::max(rep.max_circle_defect, std::abs(std::abs(comp.values[i] + 0.5) - 0.5));

  const MatrixXc Pt = gsm::stacked_projection(pr, mom::Formulation::electric);
  const MatrixXd Rz = sys.Z().real();
  rep.real_part_defect = (Rz - (Pt.transpose() * Pt).real()).norm() / Rz.norm();

  std::vector<cplx> cand;
  for (Index i = 0; i < cm.lambda.size(); ++i) cand.push_back(t_from_lambda(cm.lambda[i]));
  std::vector<bool> used(cand.size(), false);
  const Index n = std::min<Index>(count, comp.retained());
  for (Index i = 0; i < n; ++i) {
    const cplx t = comp.values[i];
    std::size_t best = cand.size();
    for (std::size_t j = 0; j < cand.size(); ++j) {
      if (used[j]) continue;
      if (best == cand.size() || std::abs(std::abs(cand[j]) - std::abs(t)) < std::abs(std::abs(cand[best]) - std::abs(t)))
        best = j;
    }
    if (best == cand.size()) break;
    used[best] = true;
    rep.t_gsm.push_back(t);
    rep.t_modes.push_back(cand[best]);
    rep.max_relative_mismatch = std::max(rep.max_relative_mismatch, std::abs(t - cand[best]) / std::abs(t));
  }
  return rep;
}

}  // namespace gsmkit::characteristic
