#include "lapgrowth/collar_metric.hpp"

#include <cmath>
#include <limits>

namespace lapgrowth {

namespace {

constexpr std::size_t kProfileGrid = 4096;

double unit_coordinate(double r, double collar_length) { return 2.0 * r / collar_length - 1.0; }

struct CurveFrame {
    double speed;
    double speed_u;
    double k;  // d(unit tangent)/du = k * inward normal
    double k_u;
    Vec2 tangent;
    Vec2 normal;  // inward
};

CurveFrame curve_frame(const Jet<Vec2>& g) {
    CurveFrame f{};
    f.speed = g.d1.norm();
    const double s2 = f.speed * f.speed;
    const double dot12 = g.d1.dot(g.d2);
    const double cr12 = cross(g.d1, g.d2);
    f.speed_u = dot12 / f.speed;
    f.k = cr12 / s2;
    f.k_u = cross(g.d1, g.d3) / s2 - 2.0 * cr12 * dot12 / (s2 * s2);
    f.tangent = g.d1 / f.speed;
    f.normal = rotate_ccw(f.tangent);
    return f;
}

}  // namespace

Cutoff Cutoff::quintic() {
    return Cutoff(
        "quintic", [](double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); },
        [](double t) { return 30.0 * t * t * (t - 1.0) * (t - 1.0); });
}

Cutoff Cutoff::septic() {
    return Cutoff(
        "septic", [](double t) { return t * t * t * t * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t))); },
        [](double t) { return 140.0 * t * t * t * std::pow(1.0 - t, 3); });
}

Cutoff Cutoff::by_name(const std::string& name) {
    if (name == "quintic") return quintic();
    if (name == "septic") return septic();
    throw InvalidArgument("unknown cutoff profile '" + name + "'");
}

Cutoff Cutoff::custom(std::string name, Profile p, Profile dp) {
    if (!p || !dp) throw InvalidArgument("cutoff profile and derivative required");
    constexpr double tol = 1e-9;
    if (std::abs(p(0.0)) > tol) throw InvalidArgument("cutoff profile must vanish on the inner plateau (p(0) = 0)");
    if (std::abs(p(1.0) - 1.0) > tol) throw InvalidArgument("cutoff profile must equal 1 on the outer plateau (p(1) = 1)");
    if (std::abs(dp(0.0)) > tol || std::abs(dp(1.0)) > tol) {
        throw InvalidArgument("cutoff profile must join its plateaus smoothly (p'(0) = p'(1) = 0)");
    }
    double prev = p(0.0);
    for (std::size_t i = 1; i <= kProfileGrid; ++i) {
        const double t = static_cast<double>(i) / kProfileGrid;
        const double v = p(t);
        if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) throw InvalidArgument("cutoff profile must map into [0, 1]");
        if (v < prev - tol) throw InvalidArgument("cutoff profile must be nondecreasing");
        const double fd = (v - prev) * kProfileGrid;
        const double mid = dp(t - 0.5 / kProfileGrid);
        if (std::abs(fd - mid) > 1e-4 * std::max(1.0, std::abs(mid))) {
            throw InvalidArgument("cutoff derivative inconsistent with profile near t = " + std::to_string(t));
        }
        prev = v;
    }
    return Cutoff(std::move(name), std::move(p), std::move(dp));
}

double Cutoff::operator()(double r, double collar_length) const {
    const double t = unit_coordinate(r, collar_length);
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return p_(t);
}

double Cutoff::derivative(double r, double collar_length) const {
    const double t = unit_coordinate(r, collar_length);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return dp_(t) * 2.0 / collar_length;
}

double chi_eval(const Cutoff& chi, double r, double collar_length) { return chi(r, collar_length); }

CollarChart::CollarChart(std::shared_ptr<const BoundaryMesh> mesh, double collar_length)
    : mesh_(std::move(mesh)), collar_length_(collar_length) {
    if (!mesh_) throw InvalidArgument("collar chart needs a mesh");
    if (!(collar_length_ > 0.0)) throw InvalidArgument("collar length must be > 0");
    reach_ = mesh_->reach();
    if (!(collar_length_ < reach_)) {
        throw InvalidArgument("collar length " + std::to_string(collar_length_) + " must be below the reach " +
                              std::to_string(reach_));
    }
    switch_depth_ = std::min(1.25 * collar_length_, 0.5 * (collar_length_ + reach_));
}

CollarChart::Coords CollarChart::project(const Vec2& x) const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    double best_u = 0.0;
    for (std::size_t c = 0; c < mesh_->component_count(); ++c) {
        const auto& comp = mesh_->component(c);
        const std::size_t n = comp.points.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = comp.points[i];
            const Vec2& b = comp.points[(i + 1) % n];
            const Vec2 ab = b - a;
            const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
            const double d2 = (a + t * ab - x).squaredNorm();
            if (d2 < best) {
                best = d2;
                best_c = c;
                const double u1 = (i + 1 < n) ? comp.knots[i + 1] : comp.length;
                best_u = comp.knots[i] + t * (u1 - comp.knots[i]);
            }
        }
    }

    // Newton on (gamma(u) - x) . gamma'(u) = 0.
    const auto& comp = mesh_->component(best_c);
    double u = best_u;
    for (int it = 0; it < 50; ++it) {
        const auto g = comp.curve.eval(u);
        const Vec2 r = g.value - x;
        const double f = r.dot(g.d1);
        double df = g.d1.squaredNorm() + r.dot(g.d2);
        if (!(df > 0.0)) df = g.d1.squaredNorm();
        const double step = f / df;
        u -= step;
        if (std::abs(step) <= 1e-15 * comp.length) break;
    }
    u = comp.curve.wrap(u);
    if (u < 0.0) u += comp.length;

    const auto g = comp.curve.eval(u);
    const Vec2 nu = rotate_ccw(g.d1.normalized());
    const Vec2 r = x - g.value;
    const double signed_depth = r.dot(nu);
    // Allow for the spline sitting a little off the node polygon.
    const double tol = 1e-3 * mesh_->mean_spacing() * mesh_->mean_spacing();
    if (signed_depth < -tol) {
        throw InvalidArgument("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                              ") lies outside the reference domain");
    }
    return {BoundaryPoint{best_c, u}, signed_depth <= 0.0 ? 0.0 : r.norm()};
}

Vec2 CollarChart::inward_normal(const BoundaryPoint& p) const {
    return rotate_ccw(mesh_->curve_jet(p).d1.normalized());
}

Vec2 CollarChart::embed(const BoundaryPoint& foot, double depth) const {
    const auto g = mesh_->curve_jet(foot);
    return g.value + depth * rotate_ccw(g.d1.normalized());
}

MetricField::MetricField(InterfaceMap phi, std::shared_ptr<const CollarChart> chart, Cutoff chi)
    : phi_(std::move(phi)), chart_(std::move(chart)), chi_(std::move(chi)) {
    if (!chart_) throw InvalidArgument("metric field needs a collar chart");
    if (&phi_.mesh() != &chart_->mesh()) throw InvalidArgument("interface map and collar chart use different meshes");
    identity_ = phi_.values() == chart_->mesh().points();
}

double MetricField::tangential_factor(const BoundaryPoint& foot, double depth) const {
    const double ell = chart_->collar_length();
    if (identity_) return 1.0;
    const double c = chi_(depth, ell);
    if (c >= 1.0) return 1.0;
    const double j = phi_.abs_jacobian_at(foot);
    return c + (1.0 - c) * j * j;
}

MetricField::ChartCoefficients MetricField::coefficients(const BoundaryPoint& foot, double depth) const {
    const double ell = chart_->collar_length();
    const CurveFrame fr = curve_frame(chart_->mesh().curve_jet(foot));
    const double c = identity_ ? 1.0 : chi_(depth, ell);
    const double c_d = identity_ ? 0.0 : chi_.derivative(depth, ell);

    double h = 1.0, h_u = 0.0, h_d = 0.0;
    if (c < 1.0 && !identity_) {
        const auto f = phi_.jet_at(foot);
        const double s2 = fr.speed * fr.speed;
        const double j2 = f.d1.squaredNorm() / s2;
        const double j2_u = 2.0 * f.d1.dot(f.d2) / s2 - 2.0 * j2 * fr.speed_u / fr.speed;
        h = c + (1.0 - c) * j2;
        h_u = (1.0 - c) * j2_u;
        h_d = c_d * (1.0 - j2);
        if (!(h > 0.0)) throw DegenerateJacobian(chart_->mesh().offset(foot.component), std::sqrt(std::max(j2, 0.0)));
    }
    const double p = fr.speed - depth * fr.k;
    const double p_u = fr.speed_u - depth * fr.k_u;
    const double p_d = -fr.k;

    ChartCoefficients out;
    out.h = h;
    out.a = h * p * p;
    out.a_u = h_u * p * p + 2.0 * h * p * p_u;
    out.a_d = h_d * p * p + 2.0 * h * p * p_d;
    out.drift_u = -out.a_u / (2.0 * out.a * out.a);
    out.drift_d = out.a_d / (2.0 * out.a);
    return out;
}

Mat2 MetricField::metric_eval(const Vec2& x, Frame frame) const {
    const auto coords = chart_->project(x);
    const double h = tangential_factor(coords.foot, coords.depth);
    if (frame == Frame::collar) return Mat2{{h, 0.0}, {0.0, 1.0}};
    if (h == 1.0) return Mat2::Identity();
    const Vec2 t = chart_->mesh().curve_jet(coords.foot).d1.normalized();
    const Vec2 nu = rotate_ccw(t);
    return h * t * t.transpose() + nu * nu.transpose();
}

Mat2 MetricField::diffusion_matrix(const Vec2& x, Frame frame) const {
    const auto coords = chart_->project(x);
    const double h = tangential_factor(coords.foot, coords.depth);
    if (!(h > 0.0)) throw InvalidArgument("metric is not positive definite");
    const double s = 1.0 / std::sqrt(h);
    if (frame == Frame::collar) return Mat2{{s, 0.0}, {0.0, 1.0}};
    if (h == 1.0) return Mat2::Identity();
    const Vec2 t = chart_->mesh().curve_jet(coords.foot).d1.normalized();
    const Vec2 nu = rotate_ccw(t);
    return s * t * t.transpose() + nu * nu.transpose();
}

Vec2 MetricField::drift_vector(const Vec2& x) const {
    const auto coords = chart_->project(x);
    if (coords.depth >= chart_->collar_length()) return Vec2::Zero();
    const double d = coords.depth;
    const auto g = chart_->mesh().curve_jet(coords.foot);
    const CurveFrame fr = curve_frame(g);
    const auto co = coefficients(coords.foot, d);
    // Generator applied to the coordinate functions of x = gamma(u) + d nu(u).
    const Vec2 x_u = g.d1 - d * fr.k * fr.tangent;
    const Vec2 x_uu = g.d2 - d * (fr.k_u * fr.tangent + fr.k * fr.k * fr.normal);
    return x_uu / co.a + co.drift_u * x_u + co.drift_d * fr.normal;
}

}  // namespace lapgrowth
