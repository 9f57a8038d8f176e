#pragma once

#include <functional>
#include <memory>
#include <string>

#include "lapgrowth/boundary_geometry.hpp"

namespace lapgrowth {

/// Smooth monotone cutoff. The profile p maps [0, 1] onto [0, 1]; the cutoff
/// is chi(r) = p((r / l - 1/2) / (1/2)) clamped, so chi = 0 for r <= l/2 and
/// chi = 1 for r >= l.
class Cutoff {
  public:
    using Profile = std::function<double(double)>;

    /// 6t^5 - 15t^4 + 10t^3
    static Cutoff quintic();
    /// -20t^7 + 70t^6 - 84t^5 + 35t^4
    static Cutoff septic();
    static Cutoff by_name(const std::string& name);
    /// Validates p(0) = 0, p(1) = 1, flat ends, values in [0, 1] and
    /// monotonicity on a dense grid; throws InvalidArgument otherwise.
    static Cutoff custom(std::string name, Profile p, Profile dp);

    double operator()(double r, double collar_length) const;
    double derivative(double r, double collar_length) const;
    const std::string& name() const noexcept { return name_; }

  private:
    Cutoff(std::string name, Profile p, Profile dp) : name_(std::move(name)), p_(std::move(p)), dp_(std::move(dp)) {}

    std::string name_;
    Profile p_;
    Profile dp_;
};

double chi_eval(const Cutoff& chi, double r, double collar_length);

/// Collar coordinates (foot point on the reference boundary, depth) for the
/// one-sided tubular neighborhood of width collar_length.
class CollarChart {
  public:
    struct Coords {
        BoundaryPoint foot;
        double depth = 0.0;
    };

    /// Rejects collars wider than the reference reach.
    CollarChart(std::shared_ptr<const BoundaryMesh> mesh, double collar_length);

    const BoundaryMesh& mesh() const noexcept { return *mesh_; }
    const std::shared_ptr<const BoundaryMesh>& mesh_ptr() const noexcept { return mesh_; }
    double collar_length() const noexcept { return collar_length_; }
    double reach() const noexcept { return reach_; }
    /// Depth beyond which the SDE leaves collar coordinates.
    double switch_depth() const noexcept { return switch_depth_; }

    /// Nearest reference boundary point and distance to it. Throws
    /// InvalidArgument for points outside the reference domain.
    Coords project(const Vec2& x) const;
    /// Inward unit normal of the reference curve.
    Vec2 inward_normal(const BoundaryPoint& p) const;
    Vec2 embed(const BoundaryPoint& foot, double depth) const;

  private:
    std::shared_ptr<const BoundaryMesh> mesh_;
    double collar_length_;
    double reach_;
    double switch_depth_;
};

enum class Frame { ambient, collar };

/// Metric g = h t t^T + nu nu^T in the collar (t unit tangent, nu inward
/// normal of the reference curve), with tangential factor
/// h = chi(depth) + (1 - chi(depth)) |det Jac Phi(foot)|^2, and the identity
/// outside the collar.
class MetricField {
  public:
    /// Coefficients of the metric diag(a, 1) in the (u, depth) chart.
    struct ChartCoefficients {
        double h = 1.0;
        double a = 1.0;    // h * P^2, P = |gamma'| - depth * k
        double a_u = 0.0;
        double a_d = 0.0;
        double drift_u = 0.0;  // -a_u / (2 a^2)
        double drift_d = 0.0;  // a_d / (2 a)
    };

    MetricField(InterfaceMap phi, std::shared_ptr<const CollarChart> chart, Cutoff chi);

    const InterfaceMap& phi() const noexcept { return phi_; }
    const CollarChart& chart() const noexcept { return *chart_; }
    const Cutoff& chi() const noexcept { return chi_; }

    /// Tangential factor h and its partial derivatives at (u, depth).
    double tangential_factor(const BoundaryPoint& foot, double depth) const;
    ChartCoefficients coefficients(const BoundaryPoint& foot, double depth) const;

    Mat2 metric_eval(const Vec2& x, Frame frame = Frame::ambient) const;
    Mat2 diffusion_matrix(const Vec2& x, Frame frame = Frame::ambient) const;
    /// m_j = |g|^{-1/2} sum_i d_i(|g|^{1/2} g^{ij}) in ambient coordinates.
    Vec2 drift_vector(const Vec2& x) const;

  private:
    InterfaceMap phi_;
    std::shared_ptr<const CollarChart> chart_;
    Cutoff chi_;
    bool identity_ = false;  // phi equals the reference nodes, so h = 1
};

}  // namespace lapgrowth
