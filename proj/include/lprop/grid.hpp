#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lprop/domain.hpp"

namespace lprop {

/// Uniform cell grid over the bounding box of a domain. Cell centers sit
/// at origin + (i + 1/2) h per axis; the inside mask records which cell
/// centers satisfy the (open) domain predicate.
struct Grid {
  int n = 0;
  double h = 0.0;
  std::vector<double> origin;
  std::vector<int> counts;
  std::vector<std::uint8_t> inside;
  std::int64_t total_cells = 0;
  std::int64_t inside_cells = 0;

  std::vector<int> multi_index(std::int64_t cell) const {
    std::vector<int> mi(static_cast<std::size_t>(n));
    for (int d = n - 1; d >= 0; --d) {
      mi[static_cast<std::size_t>(d)] = static_cast<int>(cell % counts[static_cast<std::size_t>(d)]);
      cell /= counts[static_cast<std::size_t>(d)];
    }
    return mi;
  }

  std::int64_t linear_index(std::span<const int> mi) const {
    std::int64_t idx = 0;
    for (int d = 0; d < n; ++d) {
      idx = idx * counts[static_cast<std::size_t>(d)] + mi[static_cast<std::size_t>(d)];
    }
    return idx;
  }

  std::vector<double> center(std::int64_t cell) const {
    const auto mi = multi_index(cell);
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
      p[static_cast<std::size_t>(d)] = origin[static_cast<std::size_t>(d)] +
                                       (mi[static_cast<std::size_t>(d)] + 0.5) * h;
    return p;
  }

  /// Cell containing p (equivalently: nearest cell center), or nullopt
  /// outside the bounding box.
  std::optional<std::int64_t> locate(std::span<const double> p) const {
    std::int64_t idx = 0;
    for (int d = 0; d < n; ++d) {
      const double t = (p[static_cast<std::size_t>(d)] - origin[static_cast<std::size_t>(d)]) / h;
      const auto i = static_cast<std::int64_t>(std::floor(t));
      if (i < 0 || i >= counts[static_cast<std::size_t>(d)]) return std::nullopt;
      idx = idx * counts[static_cast<std::size_t>(d)] + i;
    }
    return idx;
  }

  bool is_inside(std::int64_t cell) const {
    return inside[static_cast<std::size_t>(cell)] != 0;
  }

  /// Face neighbor along axis d in direction sign, or -1 off the grid.
  std::int64_t neighbor(std::int64_t cell, int d, int sign) const {
    auto mi = multi_index(cell);
    mi[static_cast<std::size_t>(d)] += sign;
    if (mi[static_cast<std::size_t>(d)] < 0 ||
        mi[static_cast<std::size_t>(d)] >= counts[static_cast<std::size_t>(d)])
      return -1;
    return linear_index(mi);
  }
};

namespace detail {

/// Deterministic spread of inside cell centers used for sampled checks.
inline std::vector<std::vector<double>> inside_center_samples(const Grid& grid,
                                                              std::size_t want) {
  std::vector<std::vector<double>> out;
  if (grid.inside_cells == 0) return out;
  const std::int64_t stride =
      std::max<std::int64_t>(1, grid.inside_cells / static_cast<std::int64_t>(want));
  std::int64_t seen = 0;
  for (std::int64_t c = 0; c < grid.total_cells; ++c) {
    if (!grid.is_inside(c)) continue;
    if (seen % stride == 0) out.push_back(grid.center(c));
    ++seen;
    if (out.size() >= want) break;
  }
  return out;
}

}  // namespace detail

/// Cover the bounding box of `dom` with cells of spacing h and mark the
/// cells whose centers lie in the domain.
inline Grid build_grid(const DomainSpec& dom, double h) {
  if (!(h > 0.0)) throw ResolutionError("grid spacing must be positive");
  Grid g;
  g.n = dom.dimension();
  g.h = h;
  const auto bb = dom.bounding_box();
  g.total_cells = 1;
  for (const auto& iv : bb) {
    g.origin.push_back(iv.lo);
    const int m = static_cast<int>(std::ceil(iv.length() / h - 1e-9));
    if (m < 3)
      throw ResolutionError("axis with extent " + std::to_string(iv.length()) +
                            " has fewer than 3 cells at h = " + std::to_string(h));
    g.counts.push_back(m);
    g.total_cells *= m;
  }
  g.inside.assign(static_cast<std::size_t>(g.total_cells), 0);
  for (std::int64_t c = 0; c < g.total_cells; ++c) {
    if (dom.contains(g.center(c))) {
      g.inside[static_cast<std::size_t>(c)] = 1;
      ++g.inside_cells;
    }
  }
  return g;
}

}  // namespace lprop
