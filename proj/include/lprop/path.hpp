#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "lprop/domain.hpp"
#include "lprop/operators.hpp"
#include "lprop/reach.hpp"

namespace lprop {

/// One constant-control piece of a propagation path.
struct ControlSegment {
  std::vector<double> lambda;
  double mu = 0.0;       // drift weight, >= 0 for admissible paths
  double duration = 0.0;
  std::vector<double> start;
};

struct PathSample {
  double t = 0.0;
  std::vector<double> x;
  std::int32_t segment = -1;
};

struct PropagationPath {
  std::vector<ControlSegment> segments;
  std::vector<PathSample> samples;
  std::vector<double> origin;
  std::vector<double> target;
  double sample_dt = 1e-3;

  double total_time() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }
};

namespace detail {

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline std::vector<double> zero_vec(int n) {
  return std::vector<double>(static_cast<std::size_t>(n), 0.0);
}

/// Append a straight segment sampled in closed form from start to end.
/// Used by the explicit constructions, whose per-segment velocity fields
/// are constant along their own flow.
inline void append_linear_segment(PropagationPath& path, std::vector<double> lambda,
                                  double mu, const std::vector<double>& start,
                                  const std::vector<double>& end, double duration) {
  ControlSegment seg;
  seg.lambda = std::move(lambda);
  seg.mu = mu;
  seg.duration = duration;
  seg.start = start;
  const auto seg_index = static_cast<std::int32_t>(path.segments.size());
  const double t0 = path.samples.empty() ? 0.0 : path.samples.back().t;

  const int steps = std::max(1, static_cast<int>(std::ceil(duration / path.sample_dt)));
  for (int k = 0; k <= steps; ++k) {
    const double f = static_cast<double>(k) / steps;
    PathSample s;
    s.t = t0 + f * duration;
    s.segment = seg_index;
    s.x.resize(start.size());
    for (std::size_t d = 0; d < start.size(); ++d)
      s.x[d] = start[d] + f * (end[d] - start[d]);
    path.samples.push_back(std::move(s));
  }
  path.segments.push_back(std::move(seg));
}

inline void seed_origin_sample(PropagationPath& path) {
  PathSample s;
  s.t = 0.0;
  s.x = path.origin;
  s.segment = -1;
  path.samples.push_back(std::move(s));
}

}  // namespace detail

/// Explicit propagation path from the origin to z for the operator
/// d11 + sin(x1) d2 + cos(x1) d3 on (-a,a) x B(0,r): slide along x1 to
/// the angle t* = atan2(z2, z3), ride the drift radially for
/// sqrt(z2^2+z3^2), then slide along x1 to z1. The middle segment's
/// velocity equals the drift field at x1 = t* by this angle convention.
inline PropagationPath mumford_path(double a, double r, std::span<const double> z,
                                    double sample_dt = 1e-3) {
  if (!(a > 3.14159265358979323846))
    throw DomainError("mumford domain requires a > pi");
  const DomainSpec dom =
      DomainSpec::box_ball({{-a, a}}, {0.0, 0.0}, r);
  if (z.size() < 3 || !dom.contains(z))
    throw DomainError("target outside (-a,a) x B(0,r)");

  PropagationPath path;
  path.sample_dt = sample_dt;
  path.origin = {0.0, 0.0, 0.0};
  path.target = {z[0], z[1], z[2]};
  detail::seed_origin_sample(path);

  const double rho = std::hypot(z[1], z[2]);
  const double t_star = (rho > 0.0) ? std::atan2(z[1], z[2]) : 0.0;

  std::vector<double> pos = path.origin;
  if (t_star != 0.0) {
    const double sgn = (t_star > 0.0) ? 1.0 : -1.0;
    std::vector<double> lambda = detail::zero_vec(3);
    lambda[0] = sgn;
    std::vector<double> end = {t_star, 0.0, 0.0};
    detail::append_linear_segment(path, std::move(lambda), 0.0, pos, end, std::fabs(t_star));
    pos = end;
  }
  if (rho > 0.0) {
    std::vector<double> end = {t_star, z[1], z[2]};
    detail::append_linear_segment(path, detail::zero_vec(3), 1.0, pos, end, rho);
    pos = end;
  }
  if (z[0] != t_star) {
    const double sgn = (z[0] > t_star) ? 1.0 : -1.0;
    std::vector<double> lambda = detail::zero_vec(3);
    lambda[0] = sgn;
    std::vector<double> end = {z[0], z[1], z[2]};
    detail::append_linear_segment(path, std::move(lambda), 0.0, pos, end,
                                  std::fabs(z[0] - t_star));
  }
  return path;
}

/// Explicit propagation path for d11 + x1 d2 on x1_range x (-b,b),
/// staircase style: slide along x1 to an intermediate abscissa whose sign
/// matches the required vertical motion, ride the drift, slide to z1.
inline PropagationPath ou_path(const Interval& x1_range, double b,
                               std::span<const double> x0, std::span<const double> z,
                               double sample_dt = 1e-3) {
  const DomainSpec dom = DomainSpec::box({x1_range, {-b, b}});
  if (x0.size() < 2 || !dom.contains(x0))
    throw DomainError("start point outside the domain");
  if (z.size() < 2 || !dom.contains(z)) throw DomainError("target outside the domain");

  PropagationPath path;
  path.sample_dt = sample_dt;
  path.origin = {x0[0], x0[1]};
  path.target = {z[0], z[1]};
  detail::seed_origin_sample(path);

  const double dz2 = z[1] - x0[1];
  std::vector<double> pos = path.origin;
  if (dz2 != 0.0) {
    double c;
    if (dz2 > 0.0) {
      if (!(x1_range.hi > 0.0))
        throw NotReachable("x2 cannot increase when x1 stays negative");
      c = 0.5 * (std::max(x1_range.lo, 0.0) + x1_range.hi);
    } else {
      if (!(x1_range.lo < 0.0))
        throw NotReachable("x2 cannot decrease when x1 stays positive");
      c = 0.5 * (x1_range.lo + std::min(x1_range.hi, 0.0));
    }
    if (c != pos[0]) {
      std::vector<double> lambda = detail::zero_vec(2);
      lambda[0] = (c > pos[0]) ? 1.0 : -1.0;
      std::vector<double> end = {c, pos[1]};
      detail::append_linear_segment(path, std::move(lambda), 0.0, pos, end,
                                    std::fabs(c - pos[0]));
      pos = end;
    }
    std::vector<double> end = {c, z[1]};
    detail::append_linear_segment(path, detail::zero_vec(2), 1.0, pos, end,
                                  std::fabs(dz2) / std::fabs(c));
    pos = end;
  }
  if (z[0] != pos[0]) {
    std::vector<double> lambda = detail::zero_vec(2);
    lambda[0] = (z[0] > pos[0]) ? 1.0 : -1.0;
    std::vector<double> end = {z[0], pos[1]};
    detail::append_linear_segment(path, std::move(lambda), 0.0, pos, end,
                                  std::fabs(z[0] - pos[0]));
  }
  return path;
}

/// Symmetric-domain form: domain (-a,a) x (-b,b), start at the origin.
inline PropagationPath ou_path(double a, double b, std::span<const double> z,
                               double sample_dt = 1e-3) {
  const std::vector<double> origin = {0.0, 0.0};
  return ou_path(Interval{-a, a}, b, origin, z, sample_dt);
}

/// Backtrack the flood-fill parent chain to the target cell and replay
/// the recorded controls as one segment per hop. The replay is anchored
/// at the start cell center (the recorded chain's own anchor, within half
/// a cell diagonal of x0) and each hop's duration is re-fitted so the
/// exactly chained path tracks the recorded cell centers instead of
/// accumulating rounding drift; the endpoint error stays within one cell
/// diagonal.
inline PropagationPath extract(const ReachSet& rs, std::span<const double> target,
                               const OperatorSpec& op, const Grid& grid,
                               double sample_dt = 0.0) {
  const auto cell = grid.locate(target);
  if (!cell) throw OutOfBox("target outside the grid bounding box");
  if (!rs.reached[static_cast<std::size_t>(*cell)])
    throw NotReachable("target cell was not reached by the flood fill");

  struct Hop {
    std::int64_t child;
    std::int32_t dir;
    double duration;
  };
  std::vector<Hop> hops;
  for (std::int64_t c = *cell; c != rs.start_cell;) {
    hops.push_back({c, rs.direction[static_cast<std::size_t>(c)],
                    rs.hop_duration[static_cast<std::size_t>(c)]});
    c = rs.parent[static_cast<std::size_t>(c)];
  }
  std::reverse(hops.begin(), hops.end());

  PropagationPath path;
  path.sample_dt = (sample_dt > 0.0) ? sample_dt : std::min(0.01, grid.h);
  path.origin = rs.grid.center(rs.start_cell);
  path.target.assign(target.begin(), target.end());
  detail::seed_origin_sample(path);

  const int n = op.n;
  std::vector<double> pos = path.origin;
  std::vector<double> vel(static_cast<std::size_t>(n));
  for (const Hop& hop : hops) {
    const DirectionSpec& dir = rs.directions[static_cast<std::size_t>(hop.dir)];
    const ControlField field(op, dir.lambda, dir.mu);
    field.evaluate(pos, vel);
    const double speed2 = [&] {
      double s = 0.0;
      for (double v : vel) s += v * v;
      return s;
    }();
    double duration = hop.duration;
    if (speed2 > 1e-28) {
      const auto child_center = grid.center(hop.child);
      double proj = 0.0;
      for (int d = 0; d < n; ++d)
        proj += (child_center[static_cast<std::size_t>(d)] - pos[static_cast<std::size_t>(d)]) *
                vel[static_cast<std::size_t>(d)];
      duration = proj / speed2;
      duration = std::min(std::max(duration, 0.0), 3.0 * hop.duration);
    }
    if (duration <= 1e-14) continue;

    ControlSegment seg;
    seg.lambda = dir.lambda;
    seg.mu = dir.mu;
    seg.duration = duration;
    seg.start = pos;
    const auto seg_index = static_cast<std::int32_t>(path.segments.size());
    const double t0 = path.samples.back().t;

    const int steps = std::max(1, static_cast<int>(std::ceil(duration / path.sample_dt)));
    const double dt = duration / steps;
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    {
      PathSample s0;
      s0.t = t0;
      s0.x = pos;
      s0.segment = seg_index;
      path.samples.push_back(std::move(s0));
    }
    for (int k = 0; k < steps; ++k) {
      field.evaluate(pos, k1);
      for (int d = 0; d < n; ++d) tmp[static_cast<std::size_t>(d)] = pos[static_cast<std::size_t>(d)] + 0.5 * dt * k1[static_cast<std::size_t>(d)];
      field.evaluate(tmp, k2);
      for (int d = 0; d < n; ++d) tmp[static_cast<std::size_t>(d)] = pos[static_cast<std::size_t>(d)] + 0.5 * dt * k2[static_cast<std::size_t>(d)];
      field.evaluate(tmp, k3);
      for (int d = 0; d < n; ++d) tmp[static_cast<std::size_t>(d)] = pos[static_cast<std::size_t>(d)] + dt * k3[static_cast<std::size_t>(d)];
      field.evaluate(tmp, k4);
      for (int d = 0; d < n; ++d)
        pos[static_cast<std::size_t>(d)] +=
            dt / 6.0 * (k1[static_cast<std::size_t>(d)] + 2.0 * k2[static_cast<std::size_t>(d)] +
                        2.0 * k3[static_cast<std::size_t>(d)] + k4[static_cast<std::size_t>(d)]);
      PathSample s;
      s.t = t0 + (k + 1) * dt;
      s.x = pos;
      s.segment = seg_index;
      path.samples.push_back(std::move(s));
    }
    path.segments.push_back(std::move(seg));
  }
  return path;
}

/// Admissibility report for a path against the control system of `op`.
struct PathValidation {
  double max_velocity_error = 0.0;
  bool velocity_ok = true;
  bool contained = true;
  bool chained = true;
  bool mu_nonnegative = true;
  double chaining_error = 0.0;
  double start_error = 0.0;
  double endpoint_error = 0.0;

  bool pass() const { return velocity_ok && contained && chained && mu_nonnegative; }
};

/// Compare finite-difference sample velocities (per segment) with the
/// declared control field, check containment in the open domain, segment
/// chaining, and the sign constraint on the drift weight. Failures are
/// report fields, not errors.
inline PathValidation validate(const PropagationPath& path, const OperatorSpec& op,
                               const DomainSpec& dom, double tol) {
  PathValidation rep;
  for (const auto& seg : path.segments)
    if (seg.mu < 0.0) rep.mu_nonnegative = false;

  for (const auto& s : path.samples)
    if (!dom.contains(s.x)) rep.contained = false;

  std::vector<ControlField> fields;
  fields.reserve(path.segments.size());
  for (const auto& seg : path.segments) fields.emplace_back(op, seg.lambda, seg.mu);

  const int n = op.n;
  std::vector<double> mid(static_cast<std::size_t>(n)), expect(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i + 1 < path.samples.size(); ++i) {
    const auto& a = path.samples[i];
    const auto& b = path.samples[i + 1];
    if (a.segment != b.segment || a.segment < 0) continue;
    const double dt = b.t - a.t;
    if (dt <= 0.0) continue;
    for (int d = 0; d < n; ++d)
      mid[static_cast<std::size_t>(d)] = 0.5 * (a.x[static_cast<std::size_t>(d)] + b.x[static_cast<std::size_t>(d)]);
    fields[static_cast<std::size_t>(a.segment)].evaluate(mid, expect);
    double err2 = 0.0;
    for (int d = 0; d < n; ++d) {
      const double fd = (b.x[static_cast<std::size_t>(d)] - a.x[static_cast<std::size_t>(d)]) / dt;
      const double e = fd - expect[static_cast<std::size_t>(d)];
      err2 += e * e;
    }
    rep.max_velocity_error = std::max(rep.max_velocity_error, std::sqrt(err2));
  }
  rep.velocity_ok = rep.max_velocity_error <= tol;

  // Segment chaining: each segment must start where the previous one ends.
  for (std::size_t k = 0; k < path.segments.size(); ++k) {
    const auto& seg = path.segments[k];
    const std::vector<double>* prev_end = nullptr;
    if (k == 0) {
      prev_end = &path.origin;
    } else {
      for (std::size_t i = path.samples.size(); i-- > 0;) {
        if (path.samples[i].segment == static_cast<std::int32_t>(k - 1)) {
          prev_end = &path.samples[i].x;
          break;
        }
      }
    }
    if (!prev_end) continue;
    double d2 = 0.0;
    for (int d = 0; d < n; ++d) {
      const double e = seg.start[static_cast<std::size_t>(d)] - (*prev_end)[static_cast<std::size_t>(d)];
      d2 += e * e;
    }
    rep.chaining_error = std::max(rep.chaining_error, std::sqrt(d2));
  }
  rep.chained = rep.chaining_error <= 1e-8;

  if (!path.samples.empty()) {
    double d2 = 0.0, e2 = 0.0;
    for (int d = 0; d < n; ++d) {
      const double s = path.samples.front().x[static_cast<std::size_t>(d)] - path.origin[static_cast<std::size_t>(d)];
      const double e = path.samples.back().x[static_cast<std::size_t>(d)] - path.target[static_cast<std::size_t>(d)];
      d2 += s * s;
      e2 += e * e;
    }
    rep.start_error = std::sqrt(d2);
    rep.endpoint_error = std::sqrt(e2);
  }
  return rep;
}

}  // namespace lprop
