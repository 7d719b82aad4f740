#pragma once

#include "gsmkit/compression.hpp"
#include "gsmkit/core.hpp"
#include "gsmkit/gsm.hpp"
#include "gsmkit/translation.hpp"

#include <Eigen/LU>

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace gsmkit::array {

/// One array element: a GSM expanded about its own origin, placed at `center`.
/// When `compressed` is set, S - 1 is applied through its factored form.
struct Element {
  std::string id;
  std::shared_ptr<const gsm::Gsm> gsm;
  std::shared_ptr<const compression::CompressedGsm> compressed;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;  // enclosing sphere radius about the element origin
};

struct Layout {
  std::vector<Element> elements;
};

/// Block form of the coupled array. Coupling blocks G_pq = G(k d_pq) / 2 with d_pq = c_p - c_q
/// (from element q to element p) map outgoing coefficients of q to incident coefficients of p.
/// Only p < q blocks are stored; G_qp = G_pq^t.
class BlockSystem {
 public:
  BlockSystem(Layout layout, std::shared_ptr<const translation::TranslationPlan> plan = nullptr)
      : layout_(std::move(layout)) {
    const auto& el = layout_.elements;
    if (el.empty()) throw ArgumentError("array: layout has no elements");
    for (const auto& e : el)
      if (!e.gsm) throw ArgumentError("array: element '" + e.id + "' has no GSM");
    const auto& g0 = *el.front().gsm;
    for (const auto& e : el) {
      const auto& g = *e.gsm;
      if (g.basis.l_max() != g0.basis.l_max() || std::abs(g.k() - g0.k()) > 1e-12 * g0.k() ||
          std::abs(g.frequency - g0.frequency) > 1e-9 * g0.frequency)
        throw ValidationError("array: element '" + e.id + "' does not share frequency and spherical basis with '" +
                              el.front().id + "'");
      if (e.compressed && e.compressed->dim != g.dim())
        throw ArgumentError("array: compressed form of element '" + e.id + "' has the wrong dimension");
    }
    for (std::size_t p = 0; p < el.size(); ++p)
      for (std::size_t q = p + 1; q < el.size(); ++q) {
        const double d = (el[p].center - el[q].center).norm();
        if (!(d > el[p].radius + el[q].radius))
          throw ValidationError("array: enclosing spheres of '" + el[p].id + "' and '" + el[q].id +
                                "' overlap (distance " + std::to_string(d) + " m, radii " +
                                std::to_string(el[p].radius) + " + " + std::to_string(el[q].radius) + ")");
      }
    k_ = g0.k();
    J_ = g0.basis.size();
    Index off = 0;
    for (const auto& e : el) {
      port_offset_.push_back(off);
      off += e.gsm->num_ports();
    }
    ports_ = off;
    if (!plan || plan->l_max() != g0.basis.l_max())
      plan = std::make_shared<translation::TranslationPlan>(g0.basis.l_max());
    plan_ = std::move(plan);
    // S - 1 is formed once per distinct GSM; S x - x would cancel catastrophically against the
    // large high-degree incident coefficients produced by translation.
    std::map<const gsm::Gsm*, std::shared_ptr<const MatrixXc>> cache;
    for (const auto& e : el) {
      if (e.compressed) {
        sm1_.push_back(nullptr);
        continue;
      }
      auto& c = cache[e.gsm.get()];
      if (!c) c = std::make_shared<const MatrixXc>(e.gsm->S - MatrixXc::Identity(J_, J_));
      sm1_.push_back(c);
    }
    const std::size_t n = el.size();
    upper_.resize(n * (n - 1) / 2);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        upper_[pair_index(p, q)] = 0.5 * plan_->translate(k_, el[p].center - el[q].center);
  }

  const Layout& layout() const { return layout_; }
  std::size_t size() const { return layout_.elements.size(); }
  Index spherical_dim() const { return J_; }
  Index num_ports() const { return ports_; }
  Index port_offset(std::size_t p) const { return port_offset_[p]; }
  double k() const { return k_; }
  const std::shared_ptr<const translation::TranslationPlan>& plan() const { return plan_; }

  /// G_pq (zero for p == q).
  MatrixXc coupling(std::size_t p, std::size_t q) const {
    if (p == q) return MatrixXc::Zero(J_, J_);
    return p < q ? upper_[pair_index(p, q)] : MatrixXc(upper_[pair_index(q, p)].transpose());
  }

  /// a = G h for stacked spherical coefficients (one column per right-hand side).
  MatrixXc apply_coupling(const MatrixXc& h) const {
    check_rows(h, size() * J_);
    MatrixXc a = MatrixXc::Zero(h.rows(), h.cols());
    for (std::size_t p = 0; p < size(); ++p)
      for (std::size_t q = p + 1; q < size(); ++q) {
        const MatrixXc& g = upper_[pair_index(p, q)];
        a.middleRows(Index(p) * J_, J_).noalias() += g * h.middleRows(Index(q) * J_, J_);
        a.middleRows(Index(q) * J_, J_).noalias() += g.transpose() * h.middleRows(Index(p) * J_, J_);
      }
    return a;
  }

  /// (S^ - 1) x, using the factored form for compressed elements.
  MatrixXc apply_s_minus_one(const MatrixXc& x) const {
    check_rows(x, size() * J_);
    MatrixXc y(x.rows(), x.cols());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto& e = layout_.elements[p];
      const auto xp = x.middleRows(Index(p) * J_, J_);
      if (e.compressed) {
        const auto& c = *e.compressed;
        const MatrixXc& right = c.kind == compression::Kind::eigen ? c.F : c.G;
        const MatrixXc coef = c.values.asDiagonal() * (right.bottomRows(J_).adjoint() * xp);
        y.middleRows(Index(p) * J_, J_) = 2.0 * c.F.bottomRows(J_) * coef;
      } else {
        y.middleRows(Index(p) * J_, J_).noalias() = *sm1_[p] * xp;
      }
    }
    return y;
  }

  /// T^ v (stacked outgoing coefficients for port excitation v).
  MatrixXc apply_t(const MatrixXc& v) const {
    check_rows(v, ports_);
    MatrixXc h = MatrixXc::Zero(Index(size()) * J_, v.cols());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto& g = *layout_.elements[p].gsm;
      h.middleRows(Index(p) * J_, J_) = g.T * v.middleRows(port_offset_[p], g.num_ports());
    }
    return h;
  }

  /// Gamma^ v + R^ a.
  MatrixXc port_response(const MatrixXc& v, const MatrixXc& a) const {
    check_rows(v, ports_);
    MatrixXc w(ports_, v.cols());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto& g = *layout_.elements[p].gsm;
      const Index o = port_offset_[p], m = g.num_ports();
      w.middleRows(o, m) = g.Gamma * v.middleRows(o, m) + g.R * a.middleRows(Index(p) * J_, J_);
    }
    return w;
  }

  /// Dense S - 1 of element p.
  MatrixXc s_minus_one(std::size_t p) const {
    const auto& e = layout_.elements[p];
    if (!e.compressed) return *sm1_[p];
    const auto& c = *e.compressed;
    const MatrixXc& right = c.kind == compression::Kind::eigen ? c.F : c.G;
    return 2.0 * c.F.bottomRows(J_) * c.values.asDiagonal() * right.bottomRows(J_).adjoint();
  }

  /// Global port-mode labels "element/mode".
  std::vector<std::string> port_labels() const {
    std::vector<std::string> out;
    for (const auto& e : layout_.elements)
      for (const auto& l : e.gsm->port_modes) out.push_back(e.id + "/" + l);
    return out;
  }

 private:
  std::size_t pair_index(std::size_t p, std::size_t q) const {
    const std::size_t n = size();
    return p * n - p * (p + 1) / 2 + (q - p - 1);
  }
  static void check_rows(const MatrixXc& x, Index rows) {
    if (x.rows() != rows) throw ArgumentError("array: operand has the wrong number of rows");
  }

  Layout layout_;
  std::shared_ptr<const translation::TranslationPlan> plan_;
  double k_ = 0.0;
  Index J_ = 0, ports_ = 0;
  std::vector<Index> port_offset_;
  std::vector<MatrixXc> upper_;
  std::vector<std::shared_ptr<const MatrixXc>> sm1_;
};

/// Gamma = Gamma^ + R^ G [1 - (S^ - 1) G]^-1 T^ by a dense equilibrated in-place LU.
inline MatrixXc compose_direct(const BlockSystem& sys) {
  const std::size_t n = sys.size();
  const Index J = sys.spherical_dim();
  const Index N = Index(n) * J;
  MatrixXc A = MatrixXc::Identity(N, N);
  for (std::size_t p = 0; p < n; ++p) {
    const MatrixXc sm1 = sys.s_minus_one(p);
    for (std::size_t q = 0; q < n; ++q)
      if (p != q) A.block(Index(p) * J, Index(q) * J, J, J).noalias() -= sm1 * sys.coupling(p, q);
  }
  // Translation entries grow steeply with degree; equilibrate rows and columns so the
  // condition estimate reflects the coupling rather than the scaling.
  const VectorXd rs = A.cwiseAbs().rowwise().maxCoeff().cwiseInverse();
  A.array().colwise() *= rs.array().cast<cplx>();
  const VectorXd cs = A.cwiseAbs().colwise().maxCoeff().transpose().cwiseInverse();
  A.array().rowwise() *= cs.transpose().array().cast<cplx>();
  Eigen::PartialPivLU<Eigen::Ref<MatrixXc>> lu(A);
  const double rc = lu.rcond();
  if (!(rc > 1e-12) || !std::isfinite(rc))
    throw NumericalError("compose_direct: coupled system is singular (rcond estimate " + std::to_string(rc) + ")");
  const MatrixXc eye = MatrixXc::Identity(sys.num_ports(), sys.num_ports());
  const MatrixXc h = cs.asDiagonal() * lu.solve(rs.asDiagonal() * sys.apply_t(eye));
  return sys.port_response(eye, sys.apply_coupling(h));
}

struct IterativeResult {
  MatrixXc w;  // port responses, one column per excitation
  MatrixXc h;  // stacked scattered coefficients
  int iterations = 0;
  std::vector<double> term_norms;  // ||h(l)||_F
};

/// Neumann series h = sum_l h(l), h(0) = T^ v, h(l+1) = (S^ - 1) G h(l); stops when
/// ||h(l)|| / ||h(0)|| < tol.
inline IterativeResult compose_iterative(const BlockSystem& sys, const MatrixXc& v, double tol = 1e-8,
                                         int max_iter = 100) {
  if (!(tol > 0.0) || max_iter < 1) throw ArgumentError("compose_iterative: invalid tolerance or iteration limit");
  IterativeResult r;
  MatrixXc term = sys.apply_t(v);
  r.h = term;
  const double h0 = term.norm();
  r.term_norms.push_back(h0);
  r.iterations = 1;
  if (h0 == 0.0) {
    r.w = sys.port_response(v, MatrixXc::Zero(r.h.rows(), v.cols()));
    return r;
  }
  while (r.term_norms.back() >= tol * h0) {
    if (r.iterations >= max_iter)
      throw NumericalError("compose_iterative: no convergence after " + std::to_string(max_iter) +
                           " iterations (last term ratio " + std::to_string(r.term_norms.back() / h0) +
                           "); use compose_direct");
    term = sys.apply_s_minus_one(sys.apply_coupling(term));
    r.h += term;
    r.term_norms.push_back(term.norm());
    ++r.iterations;
    if (!std::isfinite(r.term_norms.back()) || r.term_norms.back() > 1e6 * h0)
      throw NumericalError("compose_iterative: series diverges; use compose_direct");
  }
  r.w = sys.port_response(v, sys.apply_coupling(r.h));
  return r;
}

/// Full array S-parameters by the iterative route, all port excitations at once.
inline MatrixXc compose_iterative_all(const BlockSystem& sys, double tol = 1e-8, int max_iter = 100) {
  return compose_iterative(sys, MatrixXc::Identity(sys.num_ports(), sys.num_ports()), tol, max_iter).w;
}

/// Column of the array S-parameters for excitation of mode `mode` of element `element`.
inline VectorXc compose_sparams_column(const BlockSystem& sys, std::size_t element, Index mode, double tol = 1e-8,
                                       int max_iter = 100) {
  if (element >= sys.size()) throw ArgumentError("compose_sparams_column: element index out of range");
  const Index m = sys.layout().elements[element].gsm->num_ports();
  if (mode < 0 || mode >= m) throw ArgumentError("compose_sparams_column: mode index out of range");
  MatrixXc v = MatrixXc::Zero(sys.num_ports(), 1);
  v(sys.port_offset(element) + mode, 0) = 1.0;
  return compose_iterative(sys, v, tol, max_iter).w.col(0);
}

}  // namespace gsmkit::array
