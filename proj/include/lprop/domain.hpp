#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lprop/errors.hpp"

namespace lprop {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Bounded open domain. Either a box (product of open intervals) or a
/// box-times-ball: a leading block of box axes followed by a euclidean
/// ball over the trailing axes.
class DomainSpec {
 public:
  enum class Kind { Box, BoxBall };

  static DomainSpec box(std::vector<Interval> intervals) {
    DomainSpec d;
    d.kind_ = Kind::Box;
    d.intervals_ = std::move(intervals);
    d.validate();
    return d;
  }

  static DomainSpec box_ball(std::vector<Interval> leading,
                             std::vector<double> ball_center, double radius) {
    DomainSpec d;
    d.kind_ = Kind::BoxBall;
    d.intervals_ = std::move(leading);
    d.ball_center_ = std::move(ball_center);
    d.ball_radius_ = radius;
    d.validate();
    return d;
  }

  Kind kind() const { return kind_; }

  int dimension() const {
    return static_cast<int>(intervals_.size() + ball_center_.size());
  }

  const std::vector<Interval>& box_intervals() const { return intervals_; }
  const std::vector<double>& ball_center() const { return ball_center_; }
  double ball_radius() const { return ball_radius_; }

  /// Open-set membership predicate (strict inequalities everywhere).
  bool contains(std::span<const double> p) const {
    if (static_cast<int>(p.size()) < dimension()) return false;
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (!(p[i] > intervals_[i].lo && p[i] < intervals_[i].hi)) return false;
    }
    if (kind_ == Kind::BoxBall) {
      double r2 = 0.0;
      for (std::size_t k = 0; k < ball_center_.size(); ++k) {
        const double d = p[intervals_.size() + k] - ball_center_[k];
        r2 += d * d;
      }
      if (!(r2 < ball_radius_ * ball_radius_)) return false;
    }
    return true;
  }

  /// Axis-aligned bounding box of the closure.
  std::vector<Interval> bounding_box() const {
    std::vector<Interval> bb = intervals_;
    for (std::size_t k = 0; k < ball_center_.size(); ++k) {
      bb.push_back({ball_center_[k] - ball_radius_, ball_center_[k] + ball_radius_});
    }
    return bb;
  }

 private:
  void validate() const {
    if (intervals_.empty() && ball_center_.empty())
      throw DomainError("domain has dimension zero");
    for (const auto& iv : intervals_) {
      if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw DomainError("empty or unbounded interval [" + std::to_string(iv.lo) +
                          "," + std::to_string(iv.hi) + "]");
    }
    if (kind_ == Kind::BoxBall) {
      if (ball_center_.empty()) throw DomainError("ball block has dimension zero");
      if (!(ball_radius_ > 0.0) || !std::isfinite(ball_radius_))
        throw DomainError("ball radius must be positive and finite");
    }
  }

  Kind kind_ = Kind::Box;
  std::vector<Interval> intervals_;
  std::vector<double> ball_center_;
  double ball_radius_ = 0.0;
};

}  // namespace lprop
