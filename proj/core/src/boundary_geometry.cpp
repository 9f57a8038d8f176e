#include "lapgrowth/boundary_geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "quadrature.hpp"

namespace lapgrowth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDegenerateJacobian = 1e-12;

std::vector<double> trapezoid_weights(const std::vector<double>& knots, double period) {
    const std::size_t n = knots.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = (i + 1 < n) ? knots[i + 1] : knots[0] + period;
        const double prev = (i > 0) ? knots[i - 1] : knots[n - 1] - period;
        w[i] = 0.5 * (next - prev);
    }
    return w;
}

// Arclength of each spline segment by 5-point Gauss-Legendre.
std::vector<double> segment_lengths(const PeriodicCurve& curve, const std::vector<double>& knots, double period) {
    const std::size_t n = knots.size();
    std::vector<double> len(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = knots[i];
        const double h = ((i + 1 < n) ? knots[i + 1] : knots[0] + period) - a;
        double acc = 0.0;
        for (std::size_t q = 0; q < 5; ++q) {
            acc += detail::GaussRule5::w[q] * curve.eval(a + h * detail::GaussRule5::x[q]).d1.norm();
        }
        len[i] = acc * h;
    }
    return len;
}

// Long-double fallback when the double determinant is within rounding of 0.
int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double l = (b.x() - a.x()) * (c.y() - a.y());
    const double r = (b.y() - a.y()) * (c.x() - a.x());
    const double det = l - r;
    const double bound = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(l) + std::abs(r));
    if (det > bound) return 1;
    if (det < -bound) return -1;
    const long double lx = static_cast<long double>(b.x()) - a.x();
    const long double ly = static_cast<long double>(b.y()) - a.y();
    const long double mx = static_cast<long double>(c.x()) - a.x();
    const long double my = static_cast<long double>(c.y()) - a.y();
    const long double d = lx * my - ly * mx;
    return (d > 0) - (d < 0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
           p.y() <= std::max(a.y(), b.y());
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

}  // namespace

std::string to_string(BlowupReason reason) {
    switch (reason) {
        case BlowupReason::none: return "none";
        case BlowupReason::jacobian_floor: return "jacobian_floor";
        case BlowupReason::clearance_floor: return "clearance_floor";
    }
    return "none";
}

// ---------------------------------------------------------------------------
// segment geometry

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const int o1 = orientation(a0, a1, b0);
    const int o2 = orientation(a0, a1, b1);
    const int o3 = orientation(b0, b1, a0);
    const int o4 = orientation(b0, b1, a1);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a0, a1, b0)) return true;
    if (o2 == 0 && on_segment(a0, a1, b1)) return true;
    if (o3 == 0 && on_segment(b0, b1, a0)) return true;
    if (o4 == 0 && on_segment(b0, b1, a1)) return true;
    return false;
}

double segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    if (segments_intersect(a0, a1, b0, b1)) return 0.0;
    return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                     point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

double polygon_signed_area(const std::vector<Vec2>& polygon) {
    double acc = 0.0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) acc += cross(polygon[i], polygon[(i + 1) % n]);
    return 0.5 * acc;
}

ClearanceResult polygon_clearance(const std::vector<std::vector<Vec2>>& polygons) {
    struct Segment {
        Vec2 a, b;
        double xmin, xmax, ymin, ymax;
        std::size_t comp, idx, n;
    };
    std::vector<Segment> segs;
    for (std::size_t c = 0; c < polygons.size(); ++c) {
        const auto& poly = polygons[c];
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[(i + 1) % n];
            segs.push_back({a, b, std::min(a.x(), b.x()), std::max(a.x(), b.x()), std::min(a.y(), b.y()),
                            std::max(a.y(), b.y()), c, i, n});
        }
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& l, const Segment& r) { return l.xmin < r.xmin; });

    ClearanceResult out;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const Segment& s = segs[i];
        for (std::size_t j = i + 1; j < segs.size() && segs[j].xmin <= s.xmax + best; ++j) {
            const Segment& t = segs[j];
            if (t.ymin > s.ymax + best || s.ymin > t.ymax + best) continue;
            const bool same = s.comp == t.comp;
            std::size_t gap = 0;
            if (same) {
                const std::size_t d = s.idx > t.idx ? s.idx - t.idx : t.idx - s.idx;
                gap = std::min(d, s.n - d);
                if (gap <= 1) continue;
            }
            const bool boxes_touch = t.xmin <= s.xmax && t.ymin <= s.ymax && s.ymin <= t.ymax;
            if (boxes_touch && segments_intersect(s.a, s.b, t.a, t.b)) {
                return {0.0, true, std::min(s.comp, t.comp)};
            }
            if (same && gap < clearance_gap(s.n)) continue;
            const double d = segment_distance(s.a, s.b, t.a, t.b);
            if (d < best) {
                best = d;
                out.component = same ? s.comp : std::max(s.comp, t.comp);
            }
        }
    }
    out.clearance = best;
    return out;
}

// ---------------------------------------------------------------------------
// BoundaryMesh

BoundaryMesh BoundaryMesh::circle(double radius, std::size_t nodes, Vec2 center, double phase) {
    if (!(radius > 0.0)) throw InvalidArgument("circle radius must be positive");
    if (nodes < kMinNodes) throw InvalidArgument("circle needs at least 16 nodes");
    BoundaryMesh mesh;
    Component comp;
    comp.orientation = 1;
    comp.length = kTwoPi * radius;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(nodes);
        comp.points.push_back(center + radius * Vec2(std::cos(phase + theta), std::sin(phase + theta)));
        comp.knots.push_back(radius * theta);
    }
    mesh.components_.push_back(std::move(comp));
    mesh.finalize();
    return mesh;
}

BoundaryMesh BoundaryMesh::annulus(double r_inner, double r_outer, std::size_t n_inner, std::size_t n_outer,
                                   Vec2 center) {
    if (!(r_inner > 0.0) || !(r_outer > r_inner)) throw InvalidArgument("annulus needs 0 < r_inner < r_outer");
    if (n_inner < kMinNodes || n_outer < kMinNodes) throw InvalidArgument("annulus needs at least 16 nodes per circle");
    BoundaryMesh mesh = circle(r_outer, n_outer, center);
    Component hole;
    hole.orientation = -1;
    hole.length = kTwoPi * r_inner;
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(n_inner);
        hole.points.push_back(center + r_inner * Vec2(std::cos(-theta), std::sin(-theta)));
        hole.knots.push_back(r_inner * theta);
    }
    mesh.components_.push_back(std::move(hole));
    mesh.finalize();
    return mesh;
}

BoundaryMesh BoundaryMesh::from_polygons(std::vector<std::vector<Vec2>> polygons, std::vector<int> orientations) {
    if (polygons.empty()) throw InvalidArgument("mesh needs at least one component");
    if (orientations.size() != polygons.size()) throw InvalidArgument("one orientation per component required");
    const ClearanceResult clear = polygon_clearance(polygons);
    if (clear.intersects) throw InvalidArgument("mesh components are not simple disjoint polygons");

    BoundaryMesh mesh;
    for (std::size_t c = 0; c < polygons.size(); ++c) {
        auto& pts = polygons[c];
        const std::size_t n = pts.size();
        if (n < kMinNodes) throw InvalidArgument("component " + std::to_string(c) + " has fewer than 16 nodes");
        if (orientations[c] != 1 && orientations[c] != -1) throw InvalidArgument("orientation must be +1 or -1");
        const double area = polygon_signed_area(pts);
        if ((area > 0.0 ? 1 : -1) != orientations[c]) {
            throw InvalidArgument("component " + std::to_string(c) + " orientation does not match its signed area");
        }
        std::vector<double> knots(n, 0.0);
        double period = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double chord = (pts[(i + 1) % n] - pts[i]).norm();
            if (!(chord > 0.0)) throw InvalidArgument("consecutive nodes coincide in component " + std::to_string(c));
            if (i + 1 < n) knots[i + 1] = knots[i] + chord;
            period += chord;
        }
        // Chord-length knots, then a few passes so that knots match spline arclength.
        for (int pass = 0; pass < 3; ++pass) {
            const PeriodicCurve curve(knots, period, pts);
            const std::vector<double> len = segment_lengths(curve, knots, period);
            period = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i + 1 < n) knots[i + 1] = knots[i] + len[i];
                period += len[i];
            }
        }
        Component comp;
        comp.points = std::move(pts);
        comp.knots = std::move(knots);
        comp.length = period;
        comp.orientation = orientations[c];
        mesh.components_.push_back(std::move(comp));
    }
    mesh.finalize();
    return mesh;
}

void BoundaryMesh::finalize() {
    offsets_.clear();
    points_.clear();
    weights_.clear();
    total_length_ = 0.0;
    for (auto& comp : components_) {
        comp.curve = PeriodicCurve(comp.knots, comp.length, comp.points);
        comp.weights = trapezoid_weights(comp.knots, comp.length);
        offsets_.push_back(points_.size());
        points_.insert(points_.end(), comp.points.begin(), comp.points.end());
        weights_.insert(weights_.end(), comp.weights.begin(), comp.weights.end());
        total_length_ += comp.length;
    }
}

BoundaryMesh BoundaryMesh::parse_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("mesh JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("components") || !doc["components"].is_array()) {
        throw InvalidArgument("mesh JSON needs a \"components\" array");
    }
    std::vector<std::vector<Vec2>> polys;
    std::vector<int> orient;
    for (const auto& comp : doc["components"]) {
        if (!comp.contains("nodes") || !comp["nodes"].is_array()) throw InvalidArgument("component without nodes");
        std::vector<Vec2> pts;
        for (const auto& p : comp["nodes"]) {
            if (!p.is_array() || p.size() != 2) throw InvalidArgument("node must be [x, y]");
            pts.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        polys.push_back(std::move(pts));
        orient.push_back(comp.value("orientation", 1));
    }
    return from_polygons(std::move(polys), std::move(orient));
}

BoundaryMesh BoundaryMesh::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open mesh file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_json(buf.str());
}

std::string BoundaryMesh::to_json() const {
    nlohmann::json doc;
    doc["components"] = nlohmann::json::array();
    for (const auto& comp : components_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& p : comp.points) nodes.push_back({p.x(), p.y()});
        doc["components"].push_back({{"nodes", nodes}, {"orientation", comp.orientation}});
    }
    return doc.dump();
}

std::pair<std::size_t, std::size_t> BoundaryMesh::split_index(std::size_t node) const {
    if (node >= points_.size()) throw InvalidArgument("node index out of range");
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), node);
    const std::size_t c = static_cast<std::size_t>(std::distance(offsets_.begin(), it)) - 1;
    return {c, node - offsets_[c]};
}

BoundaryPoint BoundaryMesh::node_point(std::size_t node) const {
    const auto [c, i] = split_index(node);
    return {c, components_[c].knots[i]};
}

Vec2 BoundaryMesh::point(const BoundaryPoint& p) const { return component(p.component).curve(p.u); }

Jet<Vec2> BoundaryMesh::curve_jet(const BoundaryPoint& p) const { return component(p.component).curve.eval(p.u); }

double BoundaryMesh::arclength_distance(const BoundaryPoint& a, const BoundaryPoint& b) const {
    if (a.component != b.component) return std::numeric_limits<double>::infinity();
    const double len = component(a.component).length;
    double d = std::fmod(std::abs(a.u - b.u), len);
    return std::min(d, len - d);
}

double BoundaryMesh::reach() const {
    double kappa_max = 0.0;
    for (const auto& comp : components_) {
        const std::size_t n = comp.knots.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double h = ((i + 1 < n) ? comp.knots[i + 1] : comp.length) - comp.knots[i];
            for (int q = 0; q < 8; ++q) {
                const auto jet = comp.curve.eval(comp.knots[i] + h * q / 8.0);
                const double speed = jet.d1.norm();
                kappa_max = std::max(kappa_max, std::abs(cross(jet.d1, jet.d2)) / (speed * speed * speed));
            }
        }
    }
    double r = kappa_max > 0.0 ? 1.0 / kappa_max : std::numeric_limits<double>::infinity();
    const double local_arc = kappa_max > 0.0 ? std::numbers::pi / kappa_max : 0.0;
    for (std::size_t a = 0; a < components_.size(); ++a) {
        const auto& ca = components_[a];
        for (std::size_t i = 0; i < ca.points.size(); ++i) {
            for (std::size_t b = a; b < components_.size(); ++b) {
                const auto& cb = components_[b];
                for (std::size_t j = (a == b ? i + 1 : 0); j < cb.points.size(); ++j) {
                    if (a == b) {
                        double s = std::abs(ca.knots[i] - ca.knots[j]);
                        s = std::min(s, ca.length - s);
                        if (s < local_arc) continue;
                    }
                    r = std::min(r, 0.5 * (ca.points[i] - cb.points[j]).norm());
                }
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// InterfaceMap

InterfaceMap::InterfaceMap(std::shared_ptr<const BoundaryMesh> mesh, std::vector<Vec2> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw InvalidArgument("interface map needs a mesh");
    if (values_.size() != mesh_->node_count()) throw InvalidArgument("one value per mesh node required");
    for (const auto& v : values_) {
        if (!std::isfinite(v.x()) || !std::isfinite(v.y())) throw InvalidArgument("interface values must be finite");
    }
    tangent_.resize(values_.size());
    abs_jac_.resize(values_.size());
    for (std::size_t c = 0; c < mesh_->component_count(); ++c) {
        const auto& comp = mesh_->component(c);
        const std::size_t off = mesh_->offset(c);
        const std::vector<Vec2> slice(values_.begin() + static_cast<std::ptrdiff_t>(off),
                                      values_.begin() + static_cast<std::ptrdiff_t>(off + comp.points.size()));
        curves_.emplace_back(comp.knots, comp.length, slice);
        const double area = polygon_signed_area(slice);
        image_orientation_.push_back((area >= 0.0 ? 1 : -1) * comp.orientation);
        for (std::size_t i = 0; i < slice.size(); ++i) {
            const Vec2 dphi = curves_.back().eval_knot(i).d1;
            const double speed = comp.curve.eval_knot(i).d1.norm();
            tangent_[off + i] = dphi / speed;
            abs_jac_[off + i] = tangent_[off + i].norm();
        }
    }
}

InterfaceMap InterfaceMap::identity(std::shared_ptr<const BoundaryMesh> mesh) {
    std::vector<Vec2> values = mesh->points();
    return InterfaceMap(std::move(mesh), std::move(values));
}

Vec2 InterfaceMap::tangent_derivative(std::size_t node) const { return tangent_.at(node); }

double InterfaceMap::jacobian(std::size_t node) const {
    const auto [c, i] = mesh_->split_index(node);
    (void)i;
    return image_orientation_[c] * abs_jac_[node];
}

Vec2 InterfaceMap::normal(std::size_t node) const {
    const double j = abs_jac_.at(node);
    if (!(j > kDegenerateJacobian)) throw DegenerateJacobian(node, j);
    const auto [c, i] = mesh_->split_index(node);
    (void)i;
    const Vec2 t = tangent_[node] / j;
    return image_orientation_[c] > 0 ? rotate_cw(t) : rotate_ccw(t);
}

Vec2 InterfaceMap::value_at(const BoundaryPoint& p) const { return curves_.at(p.component)(p.u); }

Jet<Vec2> InterfaceMap::jet_at(const BoundaryPoint& p) const { return curves_.at(p.component).eval(p.u); }

double InterfaceMap::abs_jacobian_at(const BoundaryPoint& p) const {
    return jet_at(p).d1.norm() / mesh_->curve_jet(p).d1.norm();
}

Vec2 InterfaceMap::normal_at(const BoundaryPoint& p) const {
    const Vec2 d = jet_at(p).d1;
    const double speed = d.norm();
    const double j = speed / mesh_->curve_jet(p).d1.norm();
    if (!(j > kDegenerateJacobian)) {
        throw DegenerateJacobian(mesh_->offset(p.component), j);
    }
    const Vec2 t = d / speed;
    return image_orientation_.at(p.component) > 0 ? rotate_cw(t) : rotate_ccw(t);
}

std::vector<double> InterfaceMap::surface_measure() const {
    const auto& ds = mesh_->weights();
    std::vector<double> w(values_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = abs_jac_[i] * ds[i];
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) throw StateError("surface measure undefined: all Jacobians vanish");
    for (double& x : w) x /= total;
    return w;
}

InterfaceNorms InterfaceMap::norms(int k) const {
    if (k < 0 || k > 3) throw InvalidArgument("norms available for k in [0, 3]");
    std::array<double, 4> sup{};
    InterfaceNorms out;
    out.k = k;
    for (std::size_t c = 0; c < curves_.size(); ++c) {
        const std::size_t n = mesh_->component(c).points.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto jet = curves_[c].eval_knot(i);
            sup[0] = std::max(sup[0], jet.value.norm());
            sup[1] = std::max(sup[1], jet.d1.norm());
            sup[2] = std::max(sup[2], jet.d2.norm());
            sup[3] = std::max(sup[3], jet.d3.norm());
        }
    }
    for (double j : abs_jac_) {
        out.inv_jac_norm = std::max(out.inv_jac_norm, j > 0.0 ? 1.0 / j : std::numeric_limits<double>::infinity());
    }
    double acc = 0.0;
    for (int m = 0; m <= k; ++m) {
        acc += sup[static_cast<std::size_t>(m)];
        out.c_norm_k[static_cast<std::size_t>(m)] = acc;
        out.bracket_norm[static_cast<std::size_t>(m)] = acc + out.inv_jac_norm;
    }
    return out;
}

ValidityReport InterfaceMap::diffeo_check(double jac_floor, double clearance_floor) const {
    ValidityReport rep;
    rep.min_abs_jacobian = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < abs_jac_.size(); ++i) {
        if (abs_jac_[i] < rep.min_abs_jacobian) {
            rep.min_abs_jacobian = abs_jac_[i];
            rep.min_jacobian_node = i;
        }
    }
    std::vector<std::vector<Vec2>> polys;
    for (std::size_t c = 0; c < mesh_->component_count(); ++c) {
        const auto off = static_cast<std::ptrdiff_t>(mesh_->offset(c));
        const auto n = static_cast<std::ptrdiff_t>(mesh_->component(c).points.size());
        polys.emplace_back(values_.begin() + off, values_.begin() + off + n);
    }
    const ClearanceResult clear = polygon_clearance(polys);
    rep.clearance = clear.clearance;
    rep.clearance_component = clear.component;
    rep.self_intersection = clear.intersects;
    const bool jac_ok = rep.min_abs_jacobian >= jac_floor;
    const bool clear_ok = !clear.intersects && rep.clearance >= clearance_floor;
    rep.valid = jac_ok && clear_ok;
    if (!jac_ok) {
        rep.reason = BlowupReason::jacobian_floor;
    } else if (!clear_ok) {
        rep.reason = BlowupReason::clearance_floor;
    }
    return rep;
}

double InterfaceMap::enclosed_area() const {
    for (std::size_t i = 0; i < abs_jac_.size(); ++i) {
        if (!(abs_jac_[i] > kDegenerateJacobian)) throw DegenerateJacobian(i, abs_jac_[i]);
    }
    double area = 0.0;
    for (std::size_t c = 0; c < curves_.size(); ++c) {
        const auto& comp = mesh_->component(c);
        const std::size_t n = comp.knots.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double a = comp.knots[i];
            const double h = ((i + 1 < n) ? comp.knots[i + 1] : comp.length) - a;
            double acc = 0.0;
            for (std::size_t q = 0; q < 3; ++q) {
                const auto jet = curves_[c].eval(a + h * detail::GaussRule3::x[q]);
                acc += detail::GaussRule3::w[q] * cross(jet.value, jet.d1);
            }
            area += 0.5 * h * acc;
        }
    }
    return area;
}

InterfaceMap InterfaceMap::scaled(double c) const {
    std::vector<Vec2> v = values_;
    for (auto& x : v) x *= c;
    return InterfaceMap(mesh_, std::move(v));
}

InterfaceMap InterfaceMap::displaced(const std::vector<Vec2>& displacement, double step) const {
    if (displacement.size() != values_.size()) throw InvalidArgument("displacement size mismatch");
    std::vector<Vec2> v = values_;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += step * displacement[i];
    return InterfaceMap(mesh_, std::move(v));
}

}  // namespace lapgrowth
