#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lprop/grid.hpp"
#include "lprop/numfmt.hpp"
#include "lprop/operators.hpp"

namespace lprop {

/// Monotone upwind finite-difference operator on the inside cells of a
/// grid. Nodes are the inside cells; boundary nodes are the inside cells
/// face-adjacent to an outside cell (or to the box edge). Each interior
/// node carries one row with nonnegative off-diagonal weights, negative
/// diagonal and zero row sum.
struct DiscreteOperator {
  Grid grid;
  std::vector<std::int64_t> node_cell;   // node -> cell
  std::vector<std::int64_t> cell_node;   // cell -> node, -1 outside
  std::vector<std::uint8_t> node_is_boundary;
  std::vector<std::int64_t> boundary_nodes;  // ascending node ids
  std::vector<std::int64_t> interior_nodes;  // ascending node ids
  std::vector<std::int64_t> interior_row;    // node -> row index, -1 for boundary

  // CSR rows over interior nodes; columns are node ids.
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int64_t> col;
  std::vector<double> weight;
  std::vector<double> diag;

  std::int64_t node_count() const { return static_cast<std::int64_t>(node_cell.size()); }
};

struct DiscreteSolution {
  std::vector<double> value;  // per node
  double residual = 0.0;
  std::int64_t iterations = 0;
};

struct HarmonicMeasureRow {
  std::int64_t node = -1;
  std::vector<double> weight;  // per boundary node, in boundary_nodes order
  double sum = 0.0;
};

struct HarnackEstimate {
  bool infinite = false;
  double ratio = 1.0;
  std::int64_t witness_boundary_node = -1;
  std::int64_t witness_k_node = -1;
  double eps = 0.0;
};

struct BarrierReport {
  double min_w = 0.0;
  double max_interior_Lw = 0.0;
  bool pass = false;
};

/// Assemble the upwind stencil: central second differences weighted by
/// the diagonal a_jj, first differences one-sided by the sign of the
/// expanded drift c_j (forward for c_j > 0, backward for c_j < 0), all
/// evaluated at cell centers. Requires diagonal A.
inline DiscreteOperator discretize(const OperatorSpec& op, const Grid& grid) {
  if (op.n != grid.n) throw DomainError("operator and grid dimensions differ");
  if (!op.diagonal_at(detail::inside_center_samples(grid, 50)))
    throw NonDiagonalError("discretize requires a diagonal coefficient matrix");

  DiscreteOperator L;
  L.grid = grid;
  L.cell_node.assign(static_cast<std::size_t>(grid.total_cells), -1);
  for (std::int64_t c = 0; c < grid.total_cells; ++c) {
    if (!grid.is_inside(c)) continue;
    L.cell_node[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(L.node_cell.size());
    L.node_cell.push_back(c);
  }
  const auto nodes = L.node_count();
  L.node_is_boundary.assign(static_cast<std::size_t>(nodes), 0);
  L.interior_row.assign(static_cast<std::size_t>(nodes), -1);

  for (std::int64_t v = 0; v < nodes; ++v) {
    const std::int64_t c = L.node_cell[static_cast<std::size_t>(v)];
    bool boundary = false;
    for (int d = 0; d < grid.n && !boundary; ++d) {
      for (int sign : {-1, +1}) {
        const std::int64_t nb = grid.neighbor(c, d, sign);
        if (nb < 0 || !grid.is_inside(nb)) {
          boundary = true;
          break;
        }
      }
    }
    if (boundary) {
      L.node_is_boundary[static_cast<std::size_t>(v)] = 1;
      L.boundary_nodes.push_back(v);
    } else {
      L.interior_row[static_cast<std::size_t>(v)] = static_cast<std::int64_t>(L.interior_nodes.size());
      L.interior_nodes.push_back(v);
    }
  }

  const std::vector<Expr> c_expr = drift_expand(op);
  const double h = grid.h;
  const double inv_h2 = 1.0 / (h * h);
  const double inv_h = 1.0 / h;

  L.row_ptr.push_back(0);
  for (const std::int64_t v : L.interior_nodes) {
    const std::int64_t cell = L.node_cell[static_cast<std::size_t>(v)];
    const auto x = grid.center(cell);
    double diag = 0.0;
    const std::size_t row_start = L.col.size();
    for (int d = 0; d < grid.n; ++d) {
      const double add = op.A(d, d).evaluate(x);
      if (add < -1e-12)
        throw MonotonicityError("negative diffusion coefficient a" + std::to_string(d + 1) +
                                std::to_string(d + 1) + " at node " + format_point(x));
      const std::int64_t nb_plus = grid.neighbor(cell, d, +1);
      const std::int64_t nb_minus = grid.neighbor(cell, d, -1);
      // interior nodes have both face neighbors inside by construction
      const std::int64_t node_plus = L.cell_node[static_cast<std::size_t>(nb_plus)];
      const std::int64_t node_minus = L.cell_node[static_cast<std::size_t>(nb_minus)];
      double w_plus = 0.0, w_minus = 0.0;
      if (add > 0.0) {
        w_plus += add * inv_h2;
        w_minus += add * inv_h2;
        diag -= 2.0 * add * inv_h2;
      }
      const double cd = c_expr[static_cast<std::size_t>(d)].evaluate(x);
      if (cd > 0.0) {
        w_plus += cd * inv_h;
        diag -= cd * inv_h;
      } else if (cd < 0.0) {
        w_minus += -cd * inv_h;
        diag -= -cd * inv_h;
      }
      if (w_plus > 0.0) {
        L.col.push_back(node_plus);
        L.weight.push_back(w_plus);
      }
      if (w_minus > 0.0) {
        L.col.push_back(node_minus);
        L.weight.push_back(w_minus);
      }
    }
    if (L.col.size() == row_start)
      throw DegeneracyError("all coefficients vanish at node " + format_point(x));
    L.diag.push_back(diag);
    L.row_ptr.push_back(static_cast<std::int64_t>(L.col.size()));
  }

  // Every interior node must connect to a boundary node through positive
  // weights, otherwise the Dirichlet problem is singular there.
  {
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(nodes), 0);
    for (const std::int64_t v : L.boundary_nodes) ok[static_cast<std::size_t>(v)] = 1;
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
        const std::int64_t v = L.interior_nodes[r];
        if (ok[static_cast<std::size_t>(v)]) continue;
        for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
          if (ok[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])]) {
            ok[static_cast<std::size_t>(v)] = 1;
            changed = true;
            break;
          }
        }
      }
    }
    for (const std::int64_t v : L.interior_nodes) {
      if (!ok[static_cast<std::size_t>(v)])
        throw DegeneracyError("node " +
                              format_point(grid.center(L.node_cell[static_cast<std::size_t>(v)])) +
                              " is cut off from the boundary");
    }
  }
  return L;
}

/// Boundary data sampled from a function of the node center.
inline std::vector<double> boundary_data(const DiscreteOperator& L,
                                         const std::function<double(std::span<const double>)>& g) {
  std::vector<double> out;
  out.reserve(L.boundary_nodes.size());
  for (const std::int64_t v : L.boundary_nodes)
    out.push_back(g(L.grid.center(L.node_cell[static_cast<std::size_t>(v)])));
  return out;
}

/// Jacobi relaxation with simultaneous displacement: every interior node
/// is updated from the previous iterate, so the sweep order cannot change
/// the result and reruns are bit-identical. Interior start value is zero,
/// which keeps nodes that no boundary data can influence at exactly zero.
inline DiscreteSolution solve(const DiscreteOperator& L, const std::vector<double>& g,
                              double tol, std::int64_t maxiter) {
  if (g.size() != L.boundary_nodes.size())
    throw DomainError("boundary data size does not match boundary node count");
  const auto nodes = L.node_count();
  std::vector<double> u(static_cast<std::size_t>(nodes), 0.0);
  for (std::size_t i = 0; i < L.boundary_nodes.size(); ++i)
    u[static_cast<std::size_t>(L.boundary_nodes[i])] = g[i];
  std::vector<double> next = u;

  DiscreteSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  double checkpoint = std::numeric_limits<double>::infinity();
  std::int64_t it = 0;
  while (it < maxiter) {
    residual = 0.0;
    for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
      double s = 0.0;
      for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k)
        s += L.weight[static_cast<std::size_t>(k)] *
             u[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])];
      const std::int64_t v = L.interior_nodes[r];
      const double un = s / (-L.diag[r]);
      residual = std::max(residual, std::fabs(un - u[static_cast<std::size_t>(v)]));
      next[static_cast<std::size_t>(v)] = un;
    }
    u.swap(next);
    ++it;
    if (residual <= tol) break;
    if (it % 1000 == 0) {
      if (residual >= checkpoint)
        throw NonConvergence("relaxation stagnated at residual " + format_real(residual),
                             residual);
      checkpoint = residual;
    }
  }
  if (residual > tol)
    throw NonConvergence("relaxation did not reach tolerance " + format_real(tol) +
                             " after " + std::to_string(maxiter) + " sweeps (residual " +
                             format_real(residual) + ")",
                         residual);
  sol.value = std::move(u);
  sol.residual = residual;
  sol.iterations = it;
  return sol;
}

namespace detail {

/// Transposed interior-interior adjacency for the adjoint solve.
struct AdjointRows {
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int64_t> col;  // interior row indices
  std::vector<double> weight;
};

inline AdjointRows build_adjoint(const DiscreteOperator& L) {
  const std::size_t m = L.interior_nodes.size();
  std::vector<std::int64_t> counts(m, 0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
      const std::int64_t row = L.interior_row[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])];
      if (row >= 0) ++counts[static_cast<std::size_t>(row)];
    }
  }
  AdjointRows adj;
  adj.row_ptr.assign(m + 1, 0);
  for (std::size_t r = 0; r < m; ++r) adj.row_ptr[r + 1] = adj.row_ptr[r] + counts[r];
  adj.col.assign(static_cast<std::size_t>(adj.row_ptr[m]), 0);
  adj.weight.assign(static_cast<std::size_t>(adj.row_ptr[m]), 0.0);
  std::vector<std::int64_t> fill(m, 0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
      const std::int64_t row = L.interior_row[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])];
      if (row < 0) continue;
      const std::int64_t pos = adj.row_ptr[static_cast<std::size_t>(row)] + fill[static_cast<std::size_t>(row)]++;
      adj.col[static_cast<std::size_t>(pos)] = static_cast<std::int64_t>(r);
      adj.weight[static_cast<std::size_t>(pos)] = L.weight[static_cast<std::size_t>(k)];
    }
  }
  return adj;
}

}  // namespace detail

/// Harmonic-measure row of an interior node by one adjoint solve: z with
/// A_II^T z = e_x, then mu_x(y) = -sum_i z_i w_{i->y}. Equivalent to
/// solving the Dirichlet problem with indicator data at every boundary
/// node, at the cost of a single relaxation.
inline HarmonicMeasureRow harmonic_measure(const DiscreteOperator& L, std::int64_t node,
                                           double tol = 1e-12, std::int64_t maxiter = 1000000) {
  if (node < 0 || node >= L.node_count() || L.node_is_boundary[static_cast<std::size_t>(node)])
    throw DomainError("harmonic measure requires an interior node");
  const std::int64_t x_row = L.interior_row[static_cast<std::size_t>(node)];
  const auto adj = detail::build_adjoint(L);
  const std::size_t m = L.interior_nodes.size();

  std::vector<double> z(m, 0.0), next(m, 0.0);
  double residual = std::numeric_limits<double>::infinity();
  double checkpoint = std::numeric_limits<double>::infinity();
  for (std::int64_t it = 0; it < maxiter; ++it) {
    residual = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      double s = (static_cast<std::int64_t>(r) == x_row) ? 1.0 : 0.0;
      for (std::int64_t k = adj.row_ptr[r]; k < adj.row_ptr[r + 1]; ++k)
        s -= adj.weight[static_cast<std::size_t>(k)] * z[static_cast<std::size_t>(adj.col[static_cast<std::size_t>(k)])];
      const double zn = s / L.diag[r];
      // measure changes in row-residual units so the stop rule matches
      // the magnitude of the assembled weights
      residual = std::max(residual, std::fabs(zn - z[r]) * std::fabs(L.diag[r]));
      next[r] = zn;
    }
    z.swap(next);
    if (residual <= tol) break;
    if ((it + 1) % 1000 == 0) {
      if (residual >= checkpoint)
        throw NonConvergence("adjoint relaxation stagnated at " + format_real(residual), residual);
      checkpoint = residual;
    }
  }
  if (residual > tol)
    throw NonConvergence("adjoint relaxation did not converge (residual " +
                             format_real(residual) + ")",
                         residual);

  HarmonicMeasureRow row;
  row.node = node;
  row.weight.assign(L.boundary_nodes.size(), 0.0);
  std::vector<std::int64_t> boundary_index(static_cast<std::size_t>(L.node_count()), -1);
  for (std::size_t i = 0; i < L.boundary_nodes.size(); ++i)
    boundary_index[static_cast<std::size_t>(L.boundary_nodes[i])] = static_cast<std::int64_t>(i);
  for (std::size_t r = 0; r < m; ++r) {
    if (z[r] == 0.0) continue;
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
      const std::int64_t bi = boundary_index[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])];
      if (bi >= 0) row.weight[static_cast<std::size_t>(bi)] -= z[r] * L.weight[static_cast<std::size_t>(k)];
    }
  }
  for (double w : row.weight) row.sum += w;
  return row;
}

/// Best discrete Harnack constant for (x0, K): every nonnegative discrete
/// solution is a nonnegative combination of the indicator-data solutions,
/// so the ratio max over boundary atoms of max_K u_y / u_y(x0) is exact.
/// Atoms invisible from x0 (u_y(x0) <= eps) but visible from K raise the
/// infinite flag instead of a huge finite number.
inline HarnackEstimate harnack_ratio(const DiscreteOperator& L, std::int64_t x0_cell,
                                     const std::vector<std::int64_t>& k_cells, double eps,
                                     double tol = 1e-10, std::int64_t maxiter = 1000000) {
  const std::int64_t x0_node = L.cell_node[static_cast<std::size_t>(x0_cell)];
  if (x0_node < 0 || L.node_is_boundary[static_cast<std::size_t>(x0_node)])
    throw DomainError("x0 must map to an interior node");
  if (k_cells.empty()) throw DomainError("K is empty");
  std::vector<std::int64_t> k_nodes;
  k_nodes.reserve(k_cells.size());
  for (const std::int64_t c : k_cells) {
    const std::int64_t v = (c >= 0 && c < L.grid.total_cells)
                               ? L.cell_node[static_cast<std::size_t>(c)]
                               : -1;
    if (v < 0 || L.node_is_boundary[static_cast<std::size_t>(v)])
      throw DomainError("K must consist of interior cells");
    k_nodes.push_back(v);
  }

  HarnackEstimate est;
  est.eps = eps;
  std::vector<double> g(L.boundary_nodes.size(), 0.0);
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y) {
    g[y] = 1.0;
    const DiscreteSolution u = solve(L, g, tol, maxiter);
    g[y] = 0.0;

    const double at_x0 = u.value[static_cast<std::size_t>(x0_node)];
    double max_k = -std::numeric_limits<double>::infinity();
    std::int64_t argmax = -1;
    for (const std::int64_t v : k_nodes) {
      const double val = u.value[static_cast<std::size_t>(v)];
      if (val > max_k) {
        max_k = val;
        argmax = v;
      }
    }
    if (at_x0 > eps) {
      const double ratio = max_k / at_x0;
      if (ratio > est.ratio) {
        est.ratio = ratio;
        est.witness_boundary_node = L.boundary_nodes[y];
        est.witness_k_node = argmax;
      }
    } else if (max_k > eps && !est.infinite) {
      est.infinite = true;
      est.witness_boundary_node = L.boundary_nodes[y];
      est.witness_k_node = argmax;
    }
  }
  return est;
}

/// Forward closure of x0 in the stencil dependency graph along edges with
/// weight above 1e-12: the smallest node set containing x0 that contains
/// the support of the one-step measures of all its members. Returned as
/// cell indices.
inline std::vector<std::int64_t> absorbent_hull(const DiscreteOperator& L,
                                                std::int64_t x0_cell) {
  const std::int64_t x0_node = L.cell_node[static_cast<std::size_t>(x0_cell)];
  if (x0_node < 0 || L.node_is_boundary[static_cast<std::size_t>(x0_node)])
    throw DomainError("x0 must map to an interior node");
  std::vector<std::uint8_t> in(static_cast<std::size_t>(L.node_count()), 0);
  std::deque<std::int64_t> queue{x0_node};
  in[static_cast<std::size_t>(x0_node)] = 1;
  while (!queue.empty()) {
    const std::int64_t v = queue.front();
    queue.pop_front();
    const std::int64_t r = L.interior_row[static_cast<std::size_t>(v)];
    if (r < 0) continue;  // boundary nodes terminate the closure
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
      if (L.weight[static_cast<std::size_t>(k)] <= 1e-12) continue;
      const std::int64_t w = L.col[static_cast<std::size_t>(k)];
      if (!in[static_cast<std::size_t>(w)]) {
        in[static_cast<std::size_t>(w)] = 1;
        queue.push_back(w);
      }
    }
  }
  std::vector<std::int64_t> cells;
  for (std::int64_t v = 0; v < L.node_count(); ++v)
    if (in[static_cast<std::size_t>(v)]) cells.push_back(L.node_cell[static_cast<std::size_t>(v)]);
  return cells;
}

/// Evaluate w = M - exp(lambda x1) on the nodes and the discrete operator
/// on the interior: a valid barrier has min w > 0 and max interior Lw < 0.
inline BarrierReport check_barrier(const DiscreteOperator& L, const BarrierParams& bp) {
  BarrierReport rep;
  const auto nodes = L.node_count();
  std::vector<double> w(static_cast<std::size_t>(nodes), 0.0);
  rep.min_w = std::numeric_limits<double>::infinity();
  for (std::int64_t v = 0; v < nodes; ++v) {
    const auto x = L.grid.center(L.node_cell[static_cast<std::size_t>(v)]);
    w[static_cast<std::size_t>(v)] = bp.M - std::exp(bp.lambda * x[0]);
    rep.min_w = std::min(rep.min_w, w[static_cast<std::size_t>(v)]);
  }
  rep.max_interior_Lw = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
    double s = L.diag[r] * w[static_cast<std::size_t>(L.interior_nodes[r])];
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k)
      s += L.weight[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(L.col[static_cast<std::size_t>(k)])];
    rep.max_interior_Lw = std::max(rep.max_interior_Lw, s);
  }
  rep.pass = rep.min_w > 0.0 && rep.max_interior_Lw < 0.0;
  return rep;
}

/// Maximum-propagation check: when u attains its global maximum at x0,
/// the solution must be constant on the cells of P (up to tol).
/// Vacuously true when the maximum sits elsewhere.
inline bool check_amano(const DiscreteOperator& L, const DiscreteSolution& u,
                        std::int64_t x0_cell, const std::vector<std::int64_t>& p_cells,
                        double tol) {
  const std::int64_t x0_node = L.cell_node[static_cast<std::size_t>(x0_cell)];
  if (x0_node < 0) throw DomainError("x0 is not a grid node");
  double global_max = -std::numeric_limits<double>::infinity();
  for (double v : u.value) global_max = std::max(global_max, v);
  const double at_x0 = u.value[static_cast<std::size_t>(x0_node)];
  if (at_x0 < global_max - 1e-12 * (1.0 + std::fabs(global_max))) return true;
  for (const std::int64_t c : p_cells) {
    const std::int64_t v = (c >= 0 && c < L.grid.total_cells)
                               ? L.cell_node[static_cast<std::size_t>(c)]
                               : -1;
    if (v < 0) continue;
    if (std::fabs(u.value[static_cast<std::size_t>(v)] - at_x0) > tol) return false;
  }
  return true;
}

}  // namespace lprop
