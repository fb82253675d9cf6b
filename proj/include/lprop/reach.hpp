#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "lprop/grid.hpp"
#include "lprop/operators.hpp"

namespace lprop {

struct ReachConfig {
  double dt = 0.0;          // fixed hop duration; 0 selects per-hop automatic
  int substeps = 2;         // containment checks per hop
  int max_iterations = 100000;
  std::vector<double> magnitudes = {1.0};
  bool combined_directions = false;
};

/// One admissible control choice: velocity sum_j lambda_j X_j + mu Y.
struct DirectionSpec {
  std::string label;
  std::vector<double> lambda;
  double mu = 0.0;
};

struct ReachSet {
  Grid grid;
  std::vector<DirectionSpec> directions;
  std::vector<std::uint8_t> reached;    // per cell
  std::vector<std::int64_t> parent;     // per cell, -1 if none
  std::vector<std::int32_t> direction;  // per cell, index into directions, -1
  std::vector<double> hop_duration;     // per cell
  std::vector<std::int32_t> iteration;  // flood wave at which marked, -1
  std::vector<double> x0;               // the start point itself
  std::int64_t start_cell = -1;
  std::int64_t reached_count = 0;
  bool iteration_cap_hit = false;
};

namespace detail {

/// Classical 4-stage one-step integration of the direction field over
/// `duration` in `substeps` equal pieces. Every substep endpoint must
/// land in an inside cell, otherwise the hop is discarded entirely.
inline bool integrate_hop(const ControlField& f, const Grid& grid,
                          std::vector<double>& pos, double duration, int substeps) {
  const int n = static_cast<int>(pos.size());
  const double dt = duration / substeps;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < substeps; ++s) {
    f.evaluate(pos, k1);
    for (int d = 0; d < n; ++d) tmp[d] = pos[d] + 0.5 * dt * k1[d];
    f.evaluate(tmp, k2);
    for (int d = 0; d < n; ++d) tmp[d] = pos[d] + 0.5 * dt * k2[d];
    f.evaluate(tmp, k3);
    for (int d = 0; d < n; ++d) tmp[d] = pos[d] + dt * k3[d];
    f.evaluate(tmp, k4);
    for (int d = 0; d < n; ++d)
      pos[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    const auto cell = grid.locate(pos);
    if (!cell || !grid.is_inside(*cell)) return false;
  }
  return true;
}

inline std::vector<DirectionSpec> build_directions(const OperatorSpec& op,
                                                   const Grid& grid,
                                                   const ReachConfig& cfg) {
  const auto samples = inside_center_samples(grid, 50);
  const FieldSet fs = vector_fields(op);

  std::vector<int> active;  // indices of X_j not identically zero on Omega
  for (int j = 0; j < op.n; ++j)
    if (!field_vanishes_at(fs.X[static_cast<std::size_t>(j)], samples)) active.push_back(j);
  const bool has_drift = !field_vanishes_at(fs.Y, samples);

  std::vector<DirectionSpec> dirs;
  auto zero_lambda = [&] { return std::vector<double>(static_cast<std::size_t>(op.n), 0.0); };
  for (double m : cfg.magnitudes) {
    for (int j : active) {
      for (int sign : {+1, -1}) {
        DirectionSpec d;
        d.label = "X" + std::to_string(j + 1) + (sign > 0 ? "+" : "-");
        if (m != 1.0) d.label += "*" + std::to_string(m);
        d.lambda = zero_lambda();
        d.lambda[static_cast<std::size_t>(j)] = sign * m;
        dirs.push_back(std::move(d));
      }
    }
    if (has_drift) {
      DirectionSpec d;
      d.label = "Y";
      if (m != 1.0) d.label += "*" + std::to_string(m);
      d.lambda = zero_lambda();
      d.mu = m;
      dirs.push_back(std::move(d));
    }
  }

  if (cfg.combined_directions && !active.empty()) {
    // Every sign pattern over the active X fields, with and without the
    // drift, normalized to a unit coefficient vector.
    const std::size_t k = active.size();
    const std::size_t patterns = 1;
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= 3;
    (void)patterns;
    for (double m : cfg.magnitudes) {
      for (std::size_t code = 0; code < total; ++code) {
        std::size_t rest = code;
        std::vector<int> signs(k);
        int nonzero = 0;
        for (std::size_t i = 0; i < k; ++i) {
          signs[i] = static_cast<int>(rest % 3) - 1;
          rest /= 3;
          if (signs[i] != 0) ++nonzero;
        }
        for (int mu_on : {0, 1}) {
          if (nonzero == 0) continue;  // pure moves already present
          if (nonzero + mu_on < 2) continue;
          if (mu_on && !has_drift) continue;
          double norm2 = static_cast<double>(nonzero) + (mu_on ? 1.0 : 0.0);
          const double scale = m / std::sqrt(norm2);
          DirectionSpec d;
          d.lambda = zero_lambda();
          for (std::size_t i = 0; i < k; ++i) {
            if (signs[i] == 0) continue;
            d.lambda[static_cast<std::size_t>(active[i])] = signs[i] * scale;
            d.label += "X" + std::to_string(active[i] + 1) + (signs[i] > 0 ? "+" : "-");
          }
          if (mu_on) {
            d.mu = scale;
            d.label += "Y";
          }
          dirs.push_back(std::move(d));
        }
      }
    }
  }
  return dirs;
}

}  // namespace detail

/// Fixed-point flood fill of the cells reachable from x0 by short
/// integral-curve hops in the admissible directions. Hops start at cell
/// centers; the landing cell is the one containing the hop endpoint. A
/// hop whose duration is not fixed by the config is scaled per hop so its
/// arc length is about 1.2 h, which keeps dt * |field| <= 2h and lands in
/// the neighboring cell band.
inline ReachSet compute(const OperatorSpec& op, const Grid& grid,
                        std::span<const double> x0, const ReachConfig& cfg) {
  if (cfg.substeps < 1) throw DomainError("substeps must be >= 1");
  ReachSet rs;
  rs.grid = grid;
  rs.directions = detail::build_directions(op, grid, cfg);

  const auto start = grid.locate(x0);
  if (!start || !grid.is_inside(*start))
    throw DomainError("start point is not inside the domain grid");
  rs.start_cell = *start;
  rs.x0.assign(x0.begin(), x0.end());

  std::vector<ControlField> fields;
  fields.reserve(rs.directions.size());
  for (const auto& d : rs.directions) fields.emplace_back(op, d.lambda, d.mu);

  if (cfg.dt > 0.0) {
    // Fixed hop duration: enforce the neighboring-cell-band invariant.
    double max_speed = 0.0;
    for (const auto& p : detail::inside_center_samples(grid, 200))
      for (const auto& f : fields) max_speed = std::max(max_speed, f.speed(p));
    if (cfg.dt * max_speed > 2.0 * grid.h * (1.0 + 1e-9))
      throw DomainError("hop duration dt violates dt * max field magnitude <= 2h");
  }

  const std::size_t ncells = static_cast<std::size_t>(grid.total_cells);
  rs.reached.assign(ncells, 0);
  rs.parent.assign(ncells, -1);
  rs.direction.assign(ncells, -1);
  rs.hop_duration.assign(ncells, 0.0);
  rs.iteration.assign(ncells, -1);

  rs.reached[static_cast<std::size_t>(*start)] = 1;
  rs.iteration[static_cast<std::size_t>(*start)] = 0;
  rs.reached_count = 1;

  std::vector<std::int64_t> frontier{*start};
  std::vector<std::int64_t> next;
  std::vector<double> pos;
  int wave = 0;
  while (!frontier.empty()) {
    if (wave >= cfg.max_iterations) {
      rs.iteration_cap_hit = true;
      break;
    }
    ++wave;
    next.clear();
    for (const std::int64_t cell : frontier) {
      const auto center = rs.grid.center(cell);
      for (std::size_t di = 0; di < fields.size(); ++di) {
        const double speed = fields[di].speed(center);
        if (speed <= 1e-14) continue;
        double duration = cfg.dt;
        if (duration <= 0.0) {
          duration = 1.2 * grid.h / speed;
          duration = std::min(std::max(duration, 1e-4), 1.0);
        }
        pos = center;
        if (!detail::integrate_hop(fields[di], rs.grid, pos, duration, cfg.substeps))
          continue;
        const auto land = rs.grid.locate(pos);
        if (!land || !rs.grid.is_inside(*land)) continue;
        auto& mark = rs.reached[static_cast<std::size_t>(*land)];
        if (mark) continue;
        mark = 1;
        rs.parent[static_cast<std::size_t>(*land)] = cell;
        rs.direction[static_cast<std::size_t>(*land)] = static_cast<std::int32_t>(di);
        rs.hop_duration[static_cast<std::size_t>(*land)] = duration;
        rs.iteration[static_cast<std::size_t>(*land)] = wave;
        ++rs.reached_count;
        next.push_back(*land);
      }
    }
    frontier.swap(next);
  }
  return rs;
}

/// Discrete interior of the one-cell closure of the reachable set: dilate
/// the set by one face-adjacent inside cell, then keep cells all of whose
/// face neighbors belong to the dilated set.
inline std::vector<std::int64_t> interior_of_closure(const ReachSet& rs) {
  const Grid& g = rs.grid;
  std::vector<std::uint8_t> dilated = rs.reached;
  for (std::int64_t c = 0; c < g.total_cells; ++c) {
    if (!rs.reached[static_cast<std::size_t>(c)]) continue;
    for (int d = 0; d < g.n; ++d) {
      for (int sign : {-1, +1}) {
        const std::int64_t nb = g.neighbor(c, d, sign);
        if (nb >= 0 && g.is_inside(nb)) dilated[static_cast<std::size_t>(nb)] = 1;
      }
    }
  }
  std::vector<std::int64_t> out;
  for (std::int64_t c = 0; c < g.total_cells; ++c) {
    if (!g.is_inside(c) || !dilated[static_cast<std::size_t>(c)]) continue;
    bool interior = true;
    for (int d = 0; d < g.n && interior; ++d) {
      for (int sign : {-1, +1}) {
        const std::int64_t nb = g.neighbor(c, d, sign);
        if (nb < 0 || !g.is_inside(nb) || !dilated[static_cast<std::size_t>(nb)]) {
          interior = false;
          break;
        }
      }
    }
    if (interior) out.push_back(c);
  }
  return out;
}

inline bool contains(const ReachSet& rs, std::span<const double> p) {
  const auto cell = rs.grid.locate(p);
  if (!cell) throw OutOfBox("point outside the grid bounding box");
  return rs.reached[static_cast<std::size_t>(*cell)] != 0;
}

}  // namespace lprop
