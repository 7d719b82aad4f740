#pragma once

#include "gsmkit/core.hpp"
#include "gsmkit/gsm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>

namespace gsmkit::compression {

/// Default truncation threshold relative to the dominant |t_1|.
inline constexpr double default_iota = 1.53e-5;

/// Unitarity defect above which the eigen route is abandoned for the SVD.
inline constexpr double lossy_threshold = 1e-3;

enum class Kind { eigen, singular };

inline std::string to_string(Kind k) { return k == Kind::eigen ? "eigen" : "singular"; }

inline Kind kind_from_string(const std::string& s) {
  if (s == "eigen") return Kind::eigen;
  if (s == "singular" || s == "svd") return Kind::singular;
  throw ArgumentError("unknown compression kind '" + s + "'");
}

/// Truncated spectral form of T~ = (S~ - 1)/2.
/// eigen:    T~ ~ F diag(t) F^H
/// singular: T~ ~ F diag(sigma) G^H
struct CompressedGsm {
  Kind kind = Kind::eigen;
  VectorXc values;  // t_n, or sigma_n stored as real parts
  MatrixXc F;       // dim x N
  MatrixXc G;       // dim x N, singular kind only
  double iota = default_iota;
  Index num_ports = 0;
  Index dim = 0;
  std::string note;  // fallback reason, empty if none

  Index retained() const { return values.size(); }

  /// S~' x = x + 2 T~' x.
  VectorXc apply(const VectorXc& x) const {
    if (x.size() != dim) throw ArgumentError("CompressedGsm::apply: wrong vector length");
    const MatrixXc& right = kind == Kind::eigen ? F : G;
    const VectorXc c = values.asDiagonal() * (right.adjoint() * x);
    return x + 2.0 * (F * c);
  }

  MatrixXc reconstruct() const {
    const MatrixXc& right = kind == Kind::eigen ? F : G;
    return MatrixXc::Identity(dim, dim) + 2.0 * F * values.asDiagonal() * right.adjoint();
  }

  /// Fraction of complex entries saved relative to the dense dim x dim matrix.
  double memory_saving() const {
    const double d = static_cast<double>(dim);
    const double stored = kind == Kind::eigen ? retained() * (d + 1.0) : retained() * (2.0 * d + 1.0);
    return 1.0 - stored / (d * d);
  }
};

namespace detail {

/// Descending modulus, ties by ascending phase angle.
inline std::vector<Index> spectral_order(const VectorXc& v) {
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double ma = std::abs(v[a]), mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return std::arg(v[a]) < std::arg(v[b]);
  });
  return idx;
}

inline Index retained_count(const VectorXc& sorted, double iota) {
  if (sorted.size() == 0) return 0;
  const double lead = std::abs(sorted[0]);
  Index n = 0;
  while (n < sorted.size() && std::abs(sorted[n]) > iota * lead) ++n;
  return std::max<Index>(n, 1);
}

/// Phase of each column fixed so its largest-modulus entry is real and positive.
inline void normalize_phases(MatrixXc& F, MatrixXc* G = nullptr) {
  for (Index c = 0; c < F.cols(); ++c) {
    Index r;
    F.col(c).cwiseAbs().maxCoeff(&r);
    if (std::abs(F(r, c)) == 0.0) continue;
    const cplx ph = std::conj(F(r, c)) / std::abs(F(r, c));
    F.col(c) *= ph;
    if (G) G->col(c) *= ph;
  }
}

}  // namespace detail

/// Spectral truncation of a GSM. The eigen route uses a complex Schur form, which is
/// diagonal for the normal T~ of a lossless structure; otherwise the SVD is used.
inline CompressedGsm compress(const gsm::Gsm& g, double iota = default_iota, Kind kind = Kind::eigen) {
  if (!(iota > 0.0 && iota <= 1.0)) throw ArgumentError("compress: threshold must lie in (0, 1]");
  const MatrixXc St = g.stacked();
  const Index d = St.rows();
  if (d == 0) throw ArgumentError("compress: empty GSM");
  const MatrixXc T = 0.5 * (St - MatrixXc::Identity(d, d));
  CompressedGsm c;
  c.iota = iota;
  c.num_ports = g.num_ports();
  c.dim = d;

  if (kind == Kind::eigen) {
    const double defect = gsm::unitarity_defect(g);
    if (defect > lossy_threshold) {
      c.note = "unitarity defect " + std::to_string(defect) + " exceeds " + std::to_string(lossy_threshold) +
               "; using singular values";
      kind = Kind::singular;
    } else {
      Eigen::ComplexSchur<MatrixXc> schur(T);
      if (schur.info() != Eigen::Success) {
        c.note = "Schur decomposition did not converge; using singular values";
        kind = Kind::singular;
      } else {
        const MatrixXc& R = schur.matrixT();
        const double off = R.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().norm();
        if (off > 1e-6 * std::max(1.0, R.norm())) {
          c.note = "T~ is not normal (off-diagonal Schur norm " + std::to_string(off) + "); using singular values";
          kind = Kind::singular;
        } else {
          const VectorXc t = R.diagonal();
          const auto order = detail::spectral_order(t);
          VectorXc ts(d);
          for (Index i = 0; i < d; ++i) ts[i] = t[order[i]];
          const Index n = detail::retained_count(ts, iota);
          c.kind = Kind::eigen;
          c.values = ts.head(n);
          c.F.resize(d, n);
          for (Index i = 0; i < n; ++i) c.F.col(i) = schur.matrixU().col(order[i]);
          detail::normalize_phases(c.F);
          return c;
        }
      }
    }
  }

  Eigen::JacobiSVD<MatrixXc> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXc s = svd.singularValues().cast<cplx>();
  const Index n = detail::retained_count(s, iota);
  c.kind = Kind::singular;
  c.values = s.head(n);
  c.F = svd.matrixU().leftCols(n);
  c.G = svd.matrixV().leftCols(n);
  detail::normalize_phases(c.F, &c.G);
  return c;
}

/// Mean relative error of S~' against S~ over random complex Gaussian in-state vectors.
inline double reconstruction_error(const gsm::Gsm& g, const CompressedGsm& c, int trials = 100,
                                   std::uint64_t seed = 20240607) {
  if (trials < 1) throw ArgumentError("reconstruction_error: trials must be positive");
  const MatrixXc St = g.stacked();
  if (St.rows() != c.dim) throw ArgumentError("reconstruction_error: dimension mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double sum = 0.0;
  VectorXc f(c.dim);
  for (int t = 0; t < trials; ++t) {
    for (Index i = 0; i < c.dim; ++i) f[i] = cplx(nd(rng), nd(rng));
    const VectorXc ref = St * f;
    sum += (ref - c.apply(f)).norm() / ref.norm();
  }
  return sum / trials;
}

}  // namespace gsmkit::compression
