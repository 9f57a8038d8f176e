#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "lapgrowth/boundary_geometry.hpp"
#include "lapgrowth/kernels.hpp"
#include "lapgrowth/rng.hpp"
#include "support/continuity.hpp"

using namespace lapgrowth;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const BoundaryMesh> unit_circle(std::size_t n, double phase = 0.0) {
    return std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(1.0, n, Vec2::Zero(), phase));
}

InterfaceMap map_by(const std::shared_ptr<const BoundaryMesh>& mesh, auto&& f) {
    std::vector<Vec2> v;
    for (std::size_t i = 0; i < mesh->node_count(); ++i) v.push_back(f(mesh->node_point(i).u));
    return InterfaceMap(mesh, std::move(v));
}

InterfaceMap ellipse(const std::shared_ptr<const BoundaryMesh>& mesh) {
    return map_by(mesh, [](double t) { return Vec2(2.0 * std::cos(t), std::sin(t)); });
}

double ellipse_speed(double t) { return std::sqrt(4.0 * std::sin(t) * std::sin(t) + std::cos(t) * std::cos(t)); }

// Independent O(N^2) check for crossings of non-adjacent polygon edges.
bool brute_force_self_intersects(const std::vector<Vec2>& p) {
    auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        const double d = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        return (d > 0) - (d < 0);
    };
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            const Vec2 &a = p[i], &b = p[(i + 1) % n], &c = p[j], &d = p[(j + 1) % n];
            if (orient(a, b, c) * orient(a, b, d) < 0 && orient(c, d, a) * orient(c, d, b) < 0) return true;
        }
    }
    return false;
}

}  // namespace

TEST(BoundaryMesh, CircleBasics) {
    auto mesh = unit_circle(64);
    EXPECT_EQ(mesh->component_count(), 1u);
    EXPECT_EQ(mesh->node_count(), 64u);
    EXPECT_NEAR(mesh->total_length(), 2 * kPi, 1e-14);
    double total = 0.0;
    for (double w : mesh->weights()) total += w;
    EXPECT_NEAR(total, 2 * kPi, 1e-12);
    EXPECT_NEAR(mesh->reach(), 1.0, 1e-3);
}

TEST(BoundaryMesh, RejectsBadInput) {
    EXPECT_THROW(BoundaryMesh::circle(1.0, 8), InvalidArgument);
    EXPECT_THROW(BoundaryMesh::annulus(2.0, 1.0, 32, 32), InvalidArgument);
    std::vector<Vec2> cw;
    for (int i = 0; i < 32; ++i) cw.emplace_back(std::cos(-2 * kPi * i / 32), std::sin(-2 * kPi * i / 32));
    EXPECT_THROW(BoundaryMesh::from_polygons({cw}, {1}), InvalidArgument);
    EXPECT_NO_THROW(BoundaryMesh::from_polygons({cw}, {-1}));
}

TEST(BoundaryMesh, JsonRoundTripRecomputesArclength) {
    auto mesh = BoundaryMesh::annulus(1.0, 2.0, 32, 64);
    auto loaded = BoundaryMesh::parse_json(mesh.to_json());
    ASSERT_EQ(loaded.component_count(), 2u);
    EXPECT_EQ(loaded.component(1).orientation, -1);
    EXPECT_NEAR(loaded.component(0).length, 4 * kPi, 1e-4);
    EXPECT_NEAR(loaded.component(1).length, 2 * kPi, 1e-4);
    // knots match spline arclength: unit speed.
    for (double u : {0.1, 2.0, 5.0}) {
        EXPECT_NEAR(loaded.curve_jet({1, u}).d1.norm(), 1.0, 1e-4);
    }
    EXPECT_THROW(BoundaryMesh::parse_json("{\"nodes\": []}"), InvalidArgument);
}

TEST(InterfaceMap, IdentityJacobianIsOne) {
    auto mesh = unit_circle(128);
    auto phi = InterfaceMap::identity(mesh);
    for (std::size_t i = 0; i < mesh->node_count(); ++i) EXPECT_NEAR(phi.jacobian(i), 1.0, 1e-14);
    auto phi2 = phi.scaled(2.0);
    for (std::size_t i = 0; i < mesh->node_count(); ++i) EXPECT_NEAR(phi2.abs_jacobian(i), 2.0, 1e-13);
}

TEST(InterfaceMap, EllipseJacobianMatchesAnalyticSpeed) {
    auto mesh = unit_circle(256);
    auto phi = ellipse(mesh);
    const std::size_t n = mesh->node_count();
    const double h = 2 * kPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = mesh->node_point(i).u;
        EXPECT_NEAR(phi.abs_jacobian(i), ellipse_speed(t), 1e-6);
        const Vec2 fd = (phi.values()[(i + 1) % n] - phi.values()[(i + n - 1) % n]) / (2 * h);
        EXPECT_NEAR(phi.abs_jacobian(i), fd.norm(), 1e-3);
    }
}

TEST(InterfaceMap, NormalsCircleAndEllipse) {
    auto mesh = unit_circle(256);
    auto id = InterfaceMap::identity(mesh);
    auto el = ellipse(mesh);
    for (std::size_t i = 0; i < mesh->node_count(); i += 7) {
        const double t = mesh->node_point(i).u;
        EXPECT_NEAR((id.normal(i) - Vec2(std::cos(t), std::sin(t))).norm(), 0.0, 1e-12);
        const Vec2 expect = Vec2(std::cos(t), 2 * std::sin(t)) / std::sqrt(std::cos(t) * std::cos(t) + 4 * std::sin(t) * std::sin(t));
        EXPECT_NEAR((el.normal(i) - expect).norm(), 0.0, 1e-6);
    }
}

TEST(InterfaceMap, HoleNormalPointsToCenter) {
    auto mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(1.0, 2.0, 32, 64));
    auto phi = InterfaceMap::identity(mesh);
    for (std::size_t i = 0; i < 32; ++i) {
        const std::size_t node = mesh->global_index(1, i);
        const Vec2 p = phi.values()[node];
        EXPECT_NEAR((phi.normal(node) + p.normalized()).norm(), 0.0, 1e-12);
    }
    for (std::size_t i = 0; i < 64; ++i) {
        const Vec2 p = phi.values()[i];
        EXPECT_NEAR((phi.normal(i) - p.normalized()).norm(), 0.0, 1e-12);
    }
}

TEST(InterfaceMap, DegenerateNormalNamesNode) {
    auto mesh = unit_circle(32);
    std::vector<Vec2> v(32, Vec2(1.0, 1.0));
    InterfaceMap phi(mesh, v);
    try {
        (void)phi.normal(5);
        FAIL() << "expected DegenerateJacobian";
    } catch (const DegenerateJacobian& e) {
        EXPECT_EQ(e.node(), 5u);
    }
    EXPECT_THROW(phi.surface_measure(), StateError);
}

TEST(InterfaceMap, SurfaceMeasureUniformAndEllipse) {
    auto mesh = unit_circle(256);
    for (const auto& phi : {InterfaceMap::identity(mesh), InterfaceMap::identity(mesh).scaled(2.0)}) {
        const auto w = phi.surface_measure();
        for (double x : w) EXPECT_NEAR(x, 1.0 / 256, 1e-15);
    }
    const auto w = ellipse(mesh).surface_measure();
    // Perimeter by trapezoid at 10x resolution.
    const std::size_t fine = 2560;
    double perimeter = 0.0;
    for (std::size_t k = 0; k < fine; ++k) perimeter += ellipse_speed(2 * kPi * k / fine) * 2 * kPi / fine;
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += w[i];
        const double expect = ellipse_speed(mesh->node_point(i).u) * (2 * kPi / 256) / perimeter;
        EXPECT_NEAR(w[i], expect, 1e-8);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(InterfaceMap, Norms) {
    auto mesh = unit_circle(128);
    auto id = InterfaceMap::identity(mesh);
    auto n0 = id.norms(0);
    EXPECT_NEAR(n0.c_norm_k[0], 1.0, 1e-14);
    EXPECT_NEAR(n0.inv_jac_norm, 1.0, 1e-12);
    EXPECT_NEAR(id.scaled(2.0).norms(1).inv_jac_norm, 0.5, 1e-12);
    auto n3 = id.norms(3);
    for (int k = 0; k < 4; ++k) EXPECT_GE(n3.bracket_norm[k], n3.c_norm_k[k]);
    EXPECT_THROW(id.norms(4), InvalidArgument);
}

TEST(InterfaceMap, BumpPerturbedDerivativesMatchFiniteDifferences) {
    auto mesh = unit_circle(128);
    Kernel kernel({KernelFamily::wrapped_gaussian, 0.3, 0.0, KernelNormalization::raw}, mesh);
    const BoundaryPoint y0{0, 1.0};
    std::vector<Vec2> v;
    for (std::size_t i = 0; i < mesh->node_count(); ++i) {
        v.push_back(mesh->points()[i] + 0.1 * kernel(mesh->node_point(i), y0) * Vec2(std::cos(1.0), std::sin(1.0)));
    }
    InterfaceMap phi(mesh, v);
    const auto norms = phi.norms(3);
    EXPECT_GT(norms.c_norm_k[3], norms.c_norm_k[2]);
    const double h = 1e-4;
    for (double u : {0.37, 1.01, 2.5, 4.4}) {
        const auto jet = phi.jet_at({0, u});
        const auto lo = phi.jet_at({0, u - h});
        const auto hi = phi.jet_at({0, u + h});
        EXPECT_LT(((hi.value - lo.value) / (2 * h) - jet.d1).norm(), 1e-6);
        EXPECT_LT(((hi.d1 - lo.d1) / (2 * h) - jet.d2).norm(), 1e-6);
        EXPECT_LT(((hi.d2 - lo.d2) / (2 * h) - jet.d3).norm(), 1e-6);
    }
}

TEST(InterfaceMap, DiffeoCheckIdentityAndCollapsedHole) {
    auto mesh = unit_circle(64);
    auto rep = InterfaceMap::identity(mesh).diffeo_check(1e-3, 2 * mesh->mean_spacing());
    EXPECT_TRUE(rep.valid);
    EXPECT_NEAR(rep.min_abs_jacobian, 1.0, 1e-12);

    auto ann = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(1.0, 2.0, 64, 128));
    auto phi = InterfaceMap::identity(ann);
    std::vector<Vec2> v = phi.values();
    const double shrink = 0.01 * ann->mean_spacing();
    for (std::size_t i = 0; i < 64; ++i) v[ann->global_index(1, i)] *= shrink;
    auto rep2 = InterfaceMap(ann, v).diffeo_check(0.0, 2 * ann->mean_spacing());
    EXPECT_FALSE(rep2.valid);
    EXPECT_EQ(rep2.reason, BlowupReason::clearance_floor);
    EXPECT_EQ(rep2.clearance_component, 1u);
}

TEST(InterfaceMap, RoseImmersionSelfIntersects) {
    const std::size_t n = 256;
    auto mesh = unit_circle(n, kPi / n);  // no node at the double points
    auto phi = map_by(mesh, [](double t) {
        const double r = std::sin(2 * (t + kPi / 256));
        return Vec2(r * std::cos(t + kPi / 256), r * std::sin(t + kPi / 256));
    });
    const auto rep = phi.diffeo_check(1e-3, 0.0);
    EXPECT_TRUE(brute_force_self_intersects(phi.values()));
    EXPECT_TRUE(rep.self_intersection);
    EXPECT_FALSE(rep.valid);
    EXPECT_GT(rep.min_abs_jacobian, 1e-3);
}

TEST(Clearance, SweepMatchesBruteForceOnRandomPolygons) {
    CounterRng rng(17, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec2> poly;
        const std::size_t n = 24;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = 2 * kPi * i / n;
            const double r = 1.0 + 0.6 * (rng.uniform() - 0.5) * (trial % 5);
            poly.emplace_back(r * std::cos(t), r * std::sin(t));
        }
        const auto res = polygon_clearance({poly});
        const bool brute = brute_force_self_intersects(poly);
        EXPECT_EQ(res.intersects, brute) << "trial " << trial;
        if (!brute) {
            double best = 1e300;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    const std::size_t d = j - i;
                    if (std::min(d, n - d) < clearance_gap(n)) continue;
                    best = std::min(best, segment_distance(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]));
                }
            }
            EXPECT_NEAR(res.clearance, best, 1e-14);
        }
    }
}

TEST(InterfaceMap, EnclosedArea) {
    auto mesh = unit_circle(256);
    EXPECT_NEAR(InterfaceMap::identity(mesh).enclosed_area(), kPi, 1e-4);
    EXPECT_NEAR(InterfaceMap::identity(mesh).scaled(2.0).enclosed_area(), 4 * kPi, 4e-4);
    auto ann = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(1.0, 2.0, 128, 256));
    EXPECT_NEAR(InterfaceMap::identity(ann).enclosed_area(), 3 * kPi, 1e-3);
}

TEST(InterfaceMap, Orthogonality) {
    auto mesh = unit_circle(128);
    auto phi = ellipse(mesh);
    for (std::size_t i = 0; i < mesh->node_count(); ++i) {
        EXPECT_NEAR(phi.normal(i).dot(phi.tangent_derivative(i)), 0.0, 1e-10);
    }
}

TEST(InterfaceMap, ScalingLeavesNormalUnchanged) {
    auto mesh = unit_circle(128);
    auto phi = ellipse(mesh);
    for (double c : {2.0, 0.5, 8.0}) {
        auto scaled = phi.scaled(c);
        for (std::size_t i = 0; i < mesh->node_count(); ++i) EXPECT_EQ(scaled.normal(i), phi.normal(i));
    }
    auto odd = phi.scaled(3.7);
    for (std::size_t i = 0; i < mesh->node_count(); ++i) EXPECT_LT((odd.normal(i) - phi.normal(i)).norm(), 32 * std::numeric_limits<double>::epsilon());
}

TEST(InterfaceMap, RefinementConvergence) {
    double prev_area = 0.0, prev_diff = 0.0;
    for (std::size_t n : {32u, 64u, 128u}) {
        auto mesh = unit_circle(n);
        const double area = ellipse(mesh).enclosed_area();
        if (prev_area != 0.0) {
            const double diff = std::abs(area - prev_area);
            EXPECT_LT(diff, 50.0 / (n * n));
            if (prev_diff != 0.0) EXPECT_LT(diff, prev_diff);
            prev_diff = diff;
        }
        prev_area = area;
    }
}

TEST(InterfaceMap, NormalAndMeasureContinuityConstantsStableUnderRefinement) {
    const auto coarse = props::continuity_constants(64, 20, 1e-3, 5);
    EXPECT_GT(coarse.normal, 0.0);
    EXPECT_GT(coarse.measure, 0.0);
    for (std::size_t n : {128u, 256u, 512u}) {
        const auto fine = props::continuity_constants(n, 20, 1e-3, 5);
        EXPECT_LE(fine.normal, 1.05 * coarse.normal) << n;
        EXPECT_LE(fine.measure, 1.05 * coarse.measure) << n;
    }
}
