#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace lprop {

struct RankResult {
  int rank = 0;
  double smallest_pivot = 0.0;  // smallest surviving pivot magnitude
};

/// Numerical rank of a set of row vectors by Gaussian elimination with
/// partial pivoting. A pivot below `tol` ends the elimination.
inline RankResult numeric_rank(std::vector<std::vector<double>> rows, double tol) {
  RankResult res;
  if (rows.empty()) return res;
  const std::size_t ncols = rows[0].size();
  std::size_t r = 0;
  double smallest = 0.0;
  for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t piv = r;
    for (std::size_t i = r + 1; i < rows.size(); ++i) {
      if (std::fabs(rows[i][c]) > std::fabs(rows[piv][c])) piv = i;
    }
    const double p = std::fabs(rows[piv][c]);
    if (p <= tol) continue;
    std::swap(rows[piv], rows[r]);
    for (std::size_t i = r + 1; i < rows.size(); ++i) {
      const double f = rows[i][c] / rows[r][c];
      for (std::size_t j = c; j < ncols; ++j) rows[i][j] -= f * rows[r][j];
    }
    smallest = (r == 0) ? p : std::min(smallest, p);
    ++r;
  }
  res.rank = static_cast<int>(r);
  res.smallest_pivot = smallest;
  return res;
}

/// Smallest eigenvalue of a small symmetric matrix (row-major, n*n) by
/// cyclic Jacobi rotations. Intended for the PSD spot checks; n is the
/// operator dimension, so a handful at most.
inline double symmetric_min_eigenvalue(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double mn = at(0, 0);
  for (int i = 1; i < n; ++i) mn = std::min(mn, at(i, i));
  return mn;
}

}  // namespace lprop
