#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lapgrowth/spline.hpp"
#include "lapgrowth/types.hpp"

namespace lapgrowth {

/// Reference boundary: a disjoint union of closed planar curves. Each curve
/// keeps the domain on its left (outer components counterclockwise, holes
/// clockwise) and is parameterized by arclength u in [0, length).
class BoundaryMesh {
  public:
    struct Component {
        std::vector<Vec2> points;
        std::vector<double> knots;    // arclength coordinate of each node
        std::vector<double> weights;  // trapezoid arclength weight of each node
        double length = 0.0;
        int orientation = 1;  // +1 counterclockwise, -1 clockwise
        PeriodicCurve curve;
    };

    static constexpr std::size_t kMinNodes = 16;

    /// Counterclockwise circle with nodes at uniform angles starting at angle `phase`.
    static BoundaryMesh circle(double radius, std::size_t nodes, Vec2 center = Vec2::Zero(), double phase = 0.0);
    /// Concentric annulus: component 0 is the outer circle, component 1 the hole.
    static BoundaryMesh annulus(double r_inner, double r_outer, std::size_t n_inner, std::size_t n_outer,
                                Vec2 center = Vec2::Zero());
    /// Generic polygons; arclength coordinates are recomputed from a spline fit.
    static BoundaryMesh from_polygons(std::vector<std::vector<Vec2>> polygons, std::vector<int> orientations);
    /// {"components": [{"nodes": [[x, y], ...], "orientation": 1}, ...]}
    static BoundaryMesh parse_json(std::string_view text);
    static BoundaryMesh load(const std::filesystem::path& path);
    std::string to_json() const;

    std::size_t component_count() const noexcept { return components_.size(); }
    const Component& component(std::size_t c) const { return components_.at(c); }
    std::size_t node_count() const noexcept { return points_.size(); }
    std::size_t offset(std::size_t c) const { return offsets_.at(c); }
    std::size_t global_index(std::size_t c, std::size_t i) const { return offsets_.at(c) + i; }
    /// (component, local index) of a global node index.
    std::pair<std::size_t, std::size_t> split_index(std::size_t node) const;
    BoundaryPoint node_point(std::size_t node) const;

    const std::vector<Vec2>& points() const noexcept { return points_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double total_length() const noexcept { return total_length_; }
    double mean_spacing() const noexcept { return total_length_ / static_cast<double>(points_.size()); }

    Vec2 point(const BoundaryPoint& p) const;
    Jet<Vec2> curve_jet(const BoundaryPoint& p) const;
    /// Periodic arclength distance; infinite for points on different components.
    double arclength_distance(const BoundaryPoint& a, const BoundaryPoint& b) const;
    /// Reach estimate: min of the curvature radius and half the bottleneck and
    /// cross-component distances.
    double reach() const;

  private:
    BoundaryMesh() = default;
    void finalize();

    std::vector<Component> components_;
    std::vector<std::size_t> offsets_;
    std::vector<Vec2> points_;
    std::vector<double> weights_;
    double total_length_ = 0.0;
};

struct InterfaceNorms {
    std::array<double, 4> c_norm_k{};        // cumulative sup-norms of derivatives up to order k
    double inv_jac_norm = 0.0;               // sup 1 / |det Jac|
    std::array<double, 4> bracket_norm{};    // c_norm_k + inv_jac_norm
    int k = 0;
};

enum class BlowupReason { none, jacobian_floor, clearance_floor };
std::string to_string(BlowupReason reason);

struct ValidityReport {
    double min_abs_jacobian = 0.0;
    std::size_t min_jacobian_node = 0;
    double clearance = 0.0;
    std::size_t clearance_component = 0;  // component owning the closest pair (first of the two)
    bool self_intersection = false;
    bool valid = false;
    BlowupReason reason = BlowupReason::none;
};

/// Interface state Phi: one image point per mesh node plus periodic spline fits
/// in the reference arclength parameter.
class InterfaceMap {
  public:
    InterfaceMap(std::shared_ptr<const BoundaryMesh> mesh, std::vector<Vec2> values);
    static InterfaceMap identity(std::shared_ptr<const BoundaryMesh> mesh);

    const BoundaryMesh& mesh() const noexcept { return *mesh_; }
    const std::shared_ptr<const BoundaryMesh>& mesh_ptr() const noexcept { return mesh_; }
    const std::vector<Vec2>& values() const noexcept { return values_; }
    std::size_t node_count() const noexcept { return values_.size(); }

    /// d Phi / ds at a node (s = reference arclength).
    Vec2 tangent_derivative(std::size_t node) const;
    /// Signed det Jac: |d Phi / ds|, negative when the component's orientation flips.
    double jacobian(std::size_t node) const;
    double abs_jacobian(std::size_t node) const { return abs_jac_.at(node); }
    /// Outward unit normal of the image domain at a node.
    Vec2 normal(std::size_t node) const;

    Vec2 value_at(const BoundaryPoint& p) const;
    Jet<Vec2> jet_at(const BoundaryPoint& p) const;
    double abs_jacobian_at(const BoundaryPoint& p) const;
    Vec2 normal_at(const BoundaryPoint& p) const;

    /// Probability weights w_i proportional to |det Jac(x_i)| ds_i.
    std::vector<double> surface_measure() const;
    InterfaceNorms norms(int k) const;
    ValidityReport diffeo_check(double jac_floor, double clearance_floor) const;
    /// Area of the image domain (holes subtract), integrated on the spline.
    double enclosed_area() const;

    InterfaceMap scaled(double c) const;
    /// Phi + step * displacement, refitted.
    InterfaceMap displaced(const std::vector<Vec2>& displacement, double step) const;

  private:
    std::shared_ptr<const BoundaryMesh> mesh_;
    std::vector<Vec2> values_;
    std::vector<PeriodicCurve> curves_;
    std::vector<Vec2> tangent_;
    std::vector<double> abs_jac_;
    std::vector<int> image_orientation_;
};

/// Shortest distance between segments [a0, a1] and [b0, b1].
double segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);
/// Closed-segment intersection test with collinear handling.
bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);
double polygon_signed_area(const std::vector<Vec2>& polygon);

/// Clearance of a set of closed polygons: 0 if any two non-adjacent segments
/// intersect, otherwise the minimum distance over cross-component segment
/// pairs and same-component pairs at cyclic gap >= max(2, n/4).
struct ClearanceResult {
    double clearance = 0.0;
    bool intersects = false;
    std::size_t component = 0;
};
ClearanceResult polygon_clearance(const std::vector<std::vector<Vec2>>& polygons);

/// Minimal same-component cyclic segment gap entering the clearance.
inline std::size_t clearance_gap(std::size_t n) { return std::max<std::size_t>(2, n / 4); }

}  // namespace lapgrowth
