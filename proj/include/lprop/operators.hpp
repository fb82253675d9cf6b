#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lprop/domain.hpp"
#include "lprop/expr.hpp"
#include "lprop/linalg.hpp"
#include "lprop/sampling.hpp"

namespace lprop {

/// Vector field with symbolic components, one Expr per coordinate.
struct VectorField {
  std::vector<Expr> components;

  int dimension() const { return static_cast<int>(components.size()); }

  std::vector<double> evaluate(std::span<const double> p) const {
    std::vector<double> v(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) v[i] = components[i].evaluate(p);
    return v;
  }
};

/// Second-order operator in divergence form: sum_ij d_i(a_ij d_j u) plus
/// sum_i b_i d_i u. A is stored fully (row-major) and must be symmetric
/// and positive semidefinite on the domain of interest.
struct OperatorSpec {
  int n = 0;
  std::vector<Expr> a;  // n*n, row-major
  std::vector<Expr> b;  // n

  static OperatorSpec make(int n) {
    if (n < 1) throw DomainError("operator dimension must be positive");
    OperatorSpec op;
    op.n = n;
    op.a.assign(static_cast<std::size_t>(n) * n, Expr::constant(0.0));
    op.b.assign(static_cast<std::size_t>(n), Expr::constant(0.0));
    return op;
  }

  const Expr& A(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  Expr& A(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }

  /// True when all off-diagonal entries of A evaluate to ~0 at the given
  /// sample points.
  bool diagonal_at(const std::vector<std::vector<double>>& samples,
                   double tol = 1e-12) const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        for (const auto& p : samples)
          if (std::fabs(A(i, j).evaluate(p)) > tol) return false;
      }
    return true;
  }
};

/// Picone barrier parameters for w(x) = M - exp(lambda * x1).
struct BarrierParams {
  double lambda = 0.0;
  double M = 0.0;
};

struct FieldSet {
  std::vector<VectorField> X;  // X_j = row j of A
  VectorField Y;               // drift
};

/// The defining first-order fields: X_j collects row j of A, Y the drift.
inline FieldSet vector_fields(const OperatorSpec& op) {
  FieldSet fs;
  fs.X.resize(static_cast<std::size_t>(op.n));
  for (int j = 0; j < op.n; ++j) {
    fs.X[static_cast<std::size_t>(j)].components.assign(op.a.begin() + static_cast<std::size_t>(j) * op.n,
                                                        op.a.begin() + static_cast<std::size_t>(j + 1) * op.n);
  }
  fs.Y.components = op.b;
  return fs;
}

/// First-order coefficients of the non-divergence expansion:
/// c_j = sum_i d_i a_ij + b_j, so that L u = sum a_ij d_ij u + sum c_j d_j u.
inline std::vector<Expr> drift_expand(const OperatorSpec& op) {
  std::vector<Expr> c(static_cast<std::size_t>(op.n));
  for (int j = 0; j < op.n; ++j) {
    Expr s = op.b[static_cast<std::size_t>(j)];
    for (int i = 0; i < op.n; ++i) s = s + op.A(i, j).differentiate(i + 1);
    c[static_cast<std::size_t>(j)] = s.simplified();
  }
  return c;
}

struct H2Check {
  bool holds = false;
  double sampled_inf = 0.0;
};

/// Sampled check of inf_Omega a11 > 0.
inline H2Check check_h2(const OperatorSpec& op, const DomainSpec& dom, int samples) {
  QuasiSampler sampler(dom);
  double inf = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    inf = std::min(inf, op.A(0, 0).evaluate(sampler.next()));
  }
  return {inf > 1e-9, inf};
}

/// Barrier parameters such that w = M - exp(lambda*x1) is positive on the
/// closed domain and L w < 0 inside it. lambda comes from the sampled
/// bounds (sup |c1| inflated by 10%, sampled inf a11); the x1-supremum of
/// exp(lambda*x1) is monotone, so M uses the interval endpoint directly.
inline BarrierParams barrier_params(const OperatorSpec& op, const DomainSpec& dom,
                                    int samples) {
  const auto h2 = check_h2(op, dom, samples);
  if (!h2.holds)
    throw H2Violation("sampled inf of a11 is " + std::to_string(h2.sampled_inf) +
                      "; barrier construction requires inf a11 > 0");
  const std::vector<Expr> c = drift_expand(op);
  QuasiSampler sampler(dom);
  double sup_c1 = 0.0;
  for (int s = 0; s < samples; ++s) {
    sup_c1 = std::max(sup_c1, std::fabs(c[0].evaluate(sampler.next())));
  }
  sup_c1 *= 1.1;
  BarrierParams bp;
  bp.lambda = (sup_c1 + 1.0) / h2.sampled_inf;
  const double x1_max = dom.bounding_box()[0].hi;
  bp.M = std::exp(bp.lambda * x1_max) + 1.0;
  return bp;
}

/// Commutator [V, W]^k = sum_i (V^i d_i W^k - W^i d_i V^k), simplified.
inline VectorField lie_bracket(const VectorField& v, const VectorField& w) {
  if (v.dimension() != w.dimension())
    throw DomainError("bracket of fields with mismatched dimensions");
  const int n = v.dimension();
  VectorField out;
  out.components.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Expr s = Expr::constant(0.0);
    for (int i = 0; i < n; ++i) {
      s = s + v.components[static_cast<std::size_t>(i)] *
                  w.components[static_cast<std::size_t>(k)].differentiate(i + 1);
      s = s - w.components[static_cast<std::size_t>(i)] *
                  v.components[static_cast<std::size_t>(k)].differentiate(i + 1);
    }
    out.components.push_back(s.simplified());
  }
  return out;
}

namespace detail {

inline bool field_vanishes_at(const VectorField& f,
                              const std::vector<std::vector<double>>& samples,
                              double tol = 1e-12) {
  for (const auto& p : samples) {
    for (const auto& comp : f.components)
      if (std::fabs(comp.evaluate(p)) > tol) return false;
  }
  return true;
}

/// 50 low-discrepancy points in the unit-radius box around p, used to
/// detect structurally zero fields near a point of interest.
inline std::vector<std::vector<double>> box_samples_around(std::span<const double> p,
                                                           int count = 50) {
  std::vector<Interval> box;
  box.reserve(p.size());
  for (double c : p) box.push_back({c - 1.0, c + 1.0});
  return QuasiSampler(DomainSpec::box(box)).take(static_cast<std::size_t>(count));
}

}  // namespace detail

struct HoermanderResult {
  int rank = 0;
  double smallest_pivot = 0.0;
  int fields_used = 0;
};

/// Rank at p of the nonzero defining fields together with iterated
/// brackets up to `depth` (depth 1 = the fields themselves). Zero fields
/// are detected by sampling near p and excluded. Rank uses pivoted
/// elimination with tolerance 1e-9.
inline HoermanderResult hoermander_rank_full(const OperatorSpec& op,
                                             std::span<const double> p, int depth) {
  if (depth < 1 || depth > 5) throw DomainError("bracket depth must be in 1..5");
  const auto samples = detail::box_samples_around(p);
  const FieldSet fs = vector_fields(op);

  std::vector<VectorField> base;
  for (const auto& x : fs.X)
    if (!detail::field_vanishes_at(x, samples)) base.push_back(x);
  if (!detail::field_vanishes_at(fs.Y, samples)) base.push_back(fs.Y);

  std::vector<VectorField> all = base;
  std::vector<VectorField> layer = base;
  for (int d = 2; d <= depth; ++d) {
    std::vector<VectorField> next;
    for (const auto& v : layer) {
      for (const auto& w : base) {
        VectorField br = lie_bracket(v, w);
        if (!detail::field_vanishes_at(br, samples)) next.push_back(std::move(br));
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    layer = std::move(next);
    if (layer.empty()) break;
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(all.size());
  for (const auto& f : all) rows.push_back(f.evaluate(p));
  const RankResult rr = numeric_rank(std::move(rows), 1e-9);
  return {rr.rank, rr.smallest_pivot, static_cast<int>(all.size())};
}

inline int hoermander_rank(const OperatorSpec& op, std::span<const double> p, int depth) {
  return hoermander_rank_full(op, p, depth).rank;
}

/// Append one uniformly elliptic axis: A gains a trailing unit diagonal
/// entry, the drift a trailing zero.
inline OperatorSpec lift(const OperatorSpec& op) {
  OperatorSpec out = OperatorSpec::make(op.n + 1);
  for (int i = 0; i < op.n; ++i)
    for (int j = 0; j < op.n; ++j) out.A(i, j) = op.A(i, j);
  out.A(op.n, op.n) = Expr::constant(1.0);
  for (int i = 0; i < op.n; ++i) out.b[static_cast<std::size_t>(i)] = op.b[static_cast<std::size_t>(i)];
  return out;
}

/// Velocity field of one constant control choice, evaluated from the
/// operator coefficients: component k is sum_j lambda_j a_jk + mu b_k.
class ControlField {
 public:
  ControlField(const OperatorSpec& op, std::span<const double> lambda, double mu)
      : op_(&op), mu_(mu) {
    if (static_cast<int>(lambda.size()) != op.n)
      throw DomainError("control vector dimension mismatch");
    for (int j = 0; j < op.n; ++j)
      if (lambda[static_cast<std::size_t>(j)] != 0.0)
        rows_.push_back({j, lambda[static_cast<std::size_t>(j)]});
  }

  void evaluate(std::span<const double> p, std::vector<double>& out) const {
    const int n = op_->n;
    for (int k = 0; k < n; ++k) {
      double v = 0.0;
      for (const auto& [j, l] : rows_) v += l * op_->A(j, k).evaluate(p);
      if (mu_ != 0.0) v += mu_ * op_->b[static_cast<std::size_t>(k)].evaluate(p);
      out[static_cast<std::size_t>(k)] = v;
    }
  }

  std::vector<double> evaluate(std::span<const double> p) const {
    std::vector<double> v(static_cast<std::size_t>(op_->n));
    evaluate(p, v);
    return v;
  }

  double speed(std::span<const double> p) const {
    double s = 0.0;
    for (double c : evaluate(p)) s += c * c;
    return std::sqrt(s);
  }

 private:
  const OperatorSpec* op_;
  double mu_;
  std::vector<std::pair<int, double>> rows_;
};

struct OperatorCheck {
  bool symmetric = true;
  double max_asymmetry = 0.0;
  bool positive_semidefinite = true;
  double min_eigenvalue = 0.0;
};

/// Sampled validation of the coefficient matrix: symmetry to 1e-12 and
/// smallest eigenvalue >= -1e-9 at low-discrepancy points of the domain.
inline OperatorCheck check_operator(const OperatorSpec& op, const DomainSpec& dom,
                                    int samples) {
  OperatorCheck res;
  res.min_eigenvalue = std::numeric_limits<double>::infinity();
  QuasiSampler sampler(dom);
  std::vector<double> mat(static_cast<std::size_t>(op.n) * op.n);
  for (int s = 0; s < samples; ++s) {
    const auto p = sampler.next();
    for (int i = 0; i < op.n; ++i)
      for (int j = 0; j < op.n; ++j)
        mat[static_cast<std::size_t>(i) * op.n + j] = op.A(i, j).evaluate(p);
    for (int i = 0; i < op.n; ++i)
      for (int j = i + 1; j < op.n; ++j) {
        const double asym = std::fabs(mat[static_cast<std::size_t>(i) * op.n + j] -
                                      mat[static_cast<std::size_t>(j) * op.n + i]);
        res.max_asymmetry = std::max(res.max_asymmetry, asym);
      }
    res.min_eigenvalue = std::min(res.min_eigenvalue, symmetric_min_eigenvalue(mat, op.n));
  }
  res.symmetric = res.max_asymmetry <= 1e-12;
  res.positive_semidefinite = res.min_eigenvalue >= -1e-9;
  return res;
}

}  // namespace lprop
