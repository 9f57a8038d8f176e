#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lapgrowth/types.hpp"

namespace lapgrowth {

/// Value and first three parameter derivatives of a spline at one point.
template <typename T>
struct Jet {
    T value{};
    T d1{};
    T d2{};
    T d3{};
};

/// Interpolating periodic cubic spline (C^2) through samples at strictly
/// increasing knots u_0 < ... < u_{n-1} < u_0 + period.
class PeriodicSpline {
  public:
    PeriodicSpline() = default;
    PeriodicSpline(std::span<const double> knots, double period, std::span<const double> values);

    bool fitted() const noexcept { return !knots_.empty(); }
    std::size_t size() const noexcept { return knots_.size(); }
    double period() const noexcept { return period_; }

    double operator()(double u) const { return eval(u).value; }
    Jet<double> eval(double u) const;
    /// Exact derivatives at knot `i` (no segment search).
    Jet<double> eval_knot(std::size_t i) const;

    /// Segment index containing u (after wrapping) and the offset from its knot.
    std::pair<std::size_t, double> locate(double u) const;
    /// Wrap u into [u_0, u_0 + period).
    double wrap(double u) const noexcept;
    /// Derivatives at offset t from knot i, as returned by locate.
    Jet<double> eval_at(std::size_t i, double t) const;

  private:

    std::vector<double> knots_;
    double period_ = 0.0;
    std::vector<double> values_;
    std::vector<double> second_;  // second derivatives at knots
};

/// Planar periodic curve built from two coordinate splines sharing knots.
class PeriodicCurve {
  public:
    PeriodicCurve() = default;
    PeriodicCurve(std::span<const double> knots, double period, std::span<const Vec2> points);

    bool fitted() const noexcept { return x_.fitted(); }
    Vec2 operator()(double u) const { return {x_(u), y_(u)}; }
    Jet<Vec2> eval(double u) const;
    Jet<Vec2> eval_knot(std::size_t i) const;
    std::pair<std::size_t, double> locate(double u) const { return x_.locate(u); }
    double wrap(double u) const noexcept { return x_.wrap(u); }
    double period() const noexcept { return x_.period(); }

  private:
    PeriodicSpline x_;
    PeriodicSpline y_;
};

/// Solve a cyclic tridiagonal system (sub, diag, super with wrap-around
/// corners a_0 and c_{n-1}) by Sherman-Morrison on top of the Thomas
/// algorithm. Requires n >= 3 and diagonal dominance.
std::vector<double> solve_cyclic_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                             std::span<const double> super, std::span<const double> rhs);

}  // namespace lapgrowth
