#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lapgrowth {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// A point on the reference boundary: component index plus the periodic
/// arclength parameter of that component.
struct BoundaryPoint {
    std::size_t component = 0;
    double u = 0.0;
};

/// Rotate by -90 degrees. Applied to a unit tangent of a curve that keeps the
/// domain on its left, this gives the outward normal.
inline Vec2 rotate_cw(const Vec2& v) { return {v.y(), -v.x()}; }
/// Rotate by +90 degrees (inward normal for the same convention).
inline Vec2 rotate_ccw(const Vec2& v) { return {-v.y(), v.x()}; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Precondition or argument validation failure.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Operation requested on an object that is not in a usable state.
class StateError : public Error {
  public:
    using Error::Error;
};

class DegenerateJacobian : public Error {
  public:
    DegenerateJacobian(std::size_t node, double value)
        : Error("degenerate Jacobian at node " + std::to_string(node) + " (|det Jac| = " +
                std::to_string(value) + ")"),
          node_(node) {}
    std::size_t node() const noexcept { return node_; }

  private:
    std::size_t node_;
};

/// Picard iterate left the set of valid interfaces before converging.
class ContractionEscaped : public Error {
  public:
    using Error::Error;
};

class NoConvergence : public Error {
  public:
    using Error::Error;
};

class BudgetExceeded : public Error {
  public:
    using Error::Error;
};

/// Configuration problem; `key()` is the dotted path of the offending entry.
class ConfigError : public Error {
  public:
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

}  // namespace lapgrowth
