#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "lapgrowth/collar_metric.hpp"
#include "lapgrowth/rng.hpp"

using namespace lapgrowth;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const BoundaryMesh> disk(std::size_t n = 256) {
    return std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(1.0, n));
}

// Smooth perturbation of the identity with |det Jac| well away from 0.
InterfaceMap wobbly(const std::shared_ptr<const BoundaryMesh>& mesh, std::uint64_t seed) {
    CounterRng rng(seed, 7);
    const double a2 = 0.08 * rng.uniform(), a3 = 0.05 * rng.uniform(), ph = 2 * kPi * rng.uniform();
    std::vector<Vec2> v;
    for (const auto& p : mesh->points()) {
        const double th = std::atan2(p.y(), p.x());
        const double r = 1.0 + a2 * std::cos(2 * th + ph) + a3 * std::sin(3 * th);
        v.emplace_back(r * std::cos(th + 0.1 * std::sin(th)), r * std::sin(th + 0.1 * std::sin(th)));
    }
    return InterfaceMap(mesh, std::move(v));
}

MetricField field(const InterfaceMap& phi, double ell = 0.5) {
    return MetricField(phi, std::make_shared<const CollarChart>(phi.mesh_ptr(), ell), Cutoff::quintic());
}

// m_j = |g|^{-1/2} sum_i d_i (|g|^{1/2} g^{ij}) by central differences.
Vec2 drift_fd(const MetricField& f, const Vec2& x, double h) {
    auto flux = [&](const Vec2& y, int i, int j) {
        const Mat2 g = f.metric_eval(y);
        return std::sqrt(g.determinant()) * g.inverse()(i, j);
    };
    const double sg = std::sqrt(f.metric_eval(x).determinant());
    Vec2 m = Vec2::Zero();
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            Vec2 e = Vec2::Zero();
            e(i) = h;
            m(j) += (flux(x + e, i, j) - flux(x - e, i, j)) / (2 * h);
        }
    }
    return m / sg;
}

}  // namespace

TEST(Cutoff, PlateausAndInterpolation) {
    for (const auto& chi : {Cutoff::quintic(), Cutoff::septic()}) {
        const double ell = 0.5;
        EXPECT_EQ(chi(0.0, ell), 0.0);
        EXPECT_EQ(chi(0.25, ell), 0.0);
        EXPECT_EQ(chi(ell, ell), 1.0);
        EXPECT_EQ(chi(2.0, ell), 1.0);
        const double mid = chi(0.75 * ell, ell);
        EXPECT_GT(mid, 0.0);
        EXPECT_LT(mid, 1.0);
        EXPECT_LT(chi(0.74 * ell, ell), mid);
        EXPECT_GT(chi(0.76 * ell, ell), mid);
    }
}

TEST(Cutoff, C2AtJunctions) {
    for (const auto& chi : {Cutoff::quintic(), Cutoff::septic()}) {
        const double ell = 1.0, h = 1e-5;
        for (double r : {0.5, 1.0}) {
            // one-sided second differences from inside the transition
            const double s = r == 0.5 ? 1.0 : -1.0;
            const double d2 = (chi(r + 2 * s * h, ell) - 2 * chi(r + s * h, ell) + chi(r, ell)) / (h * h);
            // chi'' vanishes at the junction, so the difference is O(h)
            EXPECT_NEAR(d2, 0.0, 1e3 * h) << chi.name() << " r=" << r;
            EXPECT_NEAR(chi.derivative(r + s * h, ell), 0.0, 1e-7);
        }
        for (double r = 0.51; r < 1.0; r += 0.01) {
            const double fd = (chi(r + 1e-6, ell) - chi(r - 1e-6, ell)) / 2e-6;
            EXPECT_NEAR(chi.derivative(r, ell), fd, 1e-6);
        }
    }
}

TEST(Cutoff, CustomValidation) {
    EXPECT_THROW(Cutoff::custom("shifted", [](double t) { return 0.1 + 0.9 * t * t * (3 - 2 * t); },
                                [](double t) { return 0.9 * 6 * t * (1 - t); }),
                 InvalidArgument);
    EXPECT_THROW(Cutoff::custom("linear", [](double t) { return t; }, [](double) { return 1.0; }), InvalidArgument);
    EXPECT_THROW(Cutoff::by_name("cubic-ish"), InvalidArgument);
    const auto c = Cutoff::custom("smoothstep", [](double t) { return t * t * t * (t * (6 * t - 15) + 10); },
                                  [](double t) { return 30 * t * t * (t - 1) * (t - 1); });
    EXPECT_DOUBLE_EQ(c(0.375, 0.5), Cutoff::quintic()(0.375, 0.5));
}

TEST(CollarChart, RejectsCollarBeyondReach) {
    auto ann = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(1.0, 2.0, 128, 256));
    EXPECT_NO_THROW(CollarChart(ann, 0.3));
    EXPECT_THROW(CollarChart(ann, 0.6), InvalidArgument);
    EXPECT_THROW(CollarChart(disk(), 1.2), InvalidArgument);
    EXPECT_THROW(CollarChart(disk(), 0.0), InvalidArgument);
}

TEST(CollarChart, DepthIsDistanceToReferenceCurve) {
    auto mesh = std::make_shared<const BoundaryMesh>(
        BoundaryMesh::from_polygons({[] {
                                        std::vector<Vec2> p;
                                        for (int i = 0; i < 200; ++i) {
                                            const double t = 2 * kPi * i / 200;
                                            p.emplace_back(1.5 * std::cos(t), std::sin(t));
                                        }
                                        return p;
                                    }()},
                                    {1}));
    CollarChart chart(mesh, 0.4);
    // Dense sampling of the spline curve, then local refinement, as the oracle.
    const auto& comp = mesh->component(0);
    const std::size_t m = 20000;
    CounterRng rng(3, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const double th = 2 * kPi * rng.uniform();
        const double rad = 0.55 + 0.45 * rng.uniform();
        const Vec2 x(1.5 * rad * std::cos(th), rad * std::sin(th));
        double best = 1e300, best_u = 0;
        for (std::size_t k = 0; k < m; ++k) {
            const double u = comp.length * k / m;
            const double d = (comp.curve(u) - x).norm();
            if (d < best) best = d, best_u = u;
        }
        double lo = best_u - comp.length / m, hi = best_u + comp.length / m;
        for (int it = 0; it < 200; ++it) {
            const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
            if ((comp.curve(a) - x).norm() < (comp.curve(b) - x).norm()) hi = b; else lo = a;
        }
        const double oracle = (comp.curve(0.5 * (lo + hi)) - x).norm();
        const auto c = chart.project(x);
        EXPECT_NEAR(c.depth, oracle, 1e-8);
        EXPECT_LT((chart.embed(c.foot, c.depth) - x).norm(), 1e-10);
    }
    EXPECT_THROW(chart.project(Vec2(1.6, 0.0)), InvalidArgument);
}

TEST(CollarChart, AnnulusHoleSide) {
    auto ann = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(1.0, 2.0, 128, 256));
    CollarChart chart(ann, 0.3);
    const auto c = chart.project(Vec2(0.0, 1.2));
    EXPECT_EQ(c.foot.component, 1u);
    EXPECT_NEAR(c.depth, 0.2, 1e-8);
    EXPECT_THROW(chart.project(Vec2(0.0, 0.5)), InvalidArgument);
}

TEST(MetricField, IdentityIsEuclidean) {
    auto mesh = disk();
    const auto f = field(InterfaceMap::identity(mesh));
    CounterRng rng(1, 1);
    for (int i = 0; i < 200; ++i) {
        const double r = std::sqrt(rng.uniform()), th = 2 * kPi * rng.uniform();
        const Vec2 x(r * std::cos(th), r * std::sin(th));
        EXPECT_LT((f.metric_eval(x) - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((f.diffusion_matrix(x) - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(f.drift_vector(x).norm(), 1e-9);
    }
}

TEST(MetricField, DoubledMapAtBoundary) {
    auto mesh = disk();
    const auto f = field(InterfaceMap::identity(mesh).scaled(2.0));
    const Vec2 x(std::cos(0.3), std::sin(0.3));
    const Mat2 g = f.metric_eval(x, Frame::collar);
    EXPECT_NEAR(g(0, 0), 4.0, 1e-10);
    EXPECT_EQ(g(1, 1), 1.0);
    EXPECT_EQ(g(0, 1), 0.0);
    const Mat2 a = f.diffusion_matrix(x, Frame::collar);
    EXPECT_NEAR(a(0, 0), 0.5, 1e-10);
    EXPECT_EQ(a(1, 1), 1.0);

    // Finite-difference pullback: squared length of a short image arc over the
    // squared reference arclength.
    const auto& chart = f.chart();
    const auto foot = chart.project(x).foot;
    const double du = 1e-5;
    const Vec2 d = f.phi().value_at({0, foot.u + du}) - f.phi().value_at({0, foot.u - du});
    EXPECT_NEAR(d.squaredNorm() / (4 * du * du), g(0, 0), 1e-6);
}

TEST(MetricField, BoundaryPullbackMatchesNodeJacobian) {
    auto mesh = disk(128);
    const auto phi = wobbly(mesh, 11);
    const auto f = field(phi);
    for (std::size_t i = 0; i < mesh->node_count(); i += 7) {
        const double j = phi.abs_jacobian(i);
        EXPECT_NEAR(f.tangential_factor(mesh->node_point(i), 0.0), j * j, 1e-10);
    }
}

TEST(MetricField, IdentityAtCollarEdgeAndBeyond) {
    auto mesh = disk();
    const auto f = field(wobbly(mesh, 5));
    for (double th = 0.0; th < 2 * kPi; th += 0.37) {
        const Vec2 dir(std::cos(th), std::sin(th));
        for (double depth : {0.5 - 1e-12, 0.5, 0.6, 0.9}) {
            const Vec2 x = (1.0 - depth) * dir;
            EXPECT_LT((f.metric_eval(x) - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT(f.drift_vector(x).norm(), 1e-12);
        }
    }
}

TEST(MetricField, SpdAndSquareRootResidual) {
    auto mesh = disk(128);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto phi = wobbly(mesh, seed);
        const auto f = field(phi);
        double jmin = 1e300;
        for (std::size_t i = 0; i < phi.node_count(); ++i) jmin = std::min(jmin, phi.abs_jacobian(i));
        CounterRng rng(seed, 2);
        for (int k = 0; k < 300; ++k) {
            const double r = 1.0 - 0.6 * rng.uniform(), th = 2 * kPi * rng.uniform();
            const Vec2 x(r * std::cos(th), r * std::sin(th));
            const Mat2 g = f.metric_eval(x);
            EXPECT_LT(std::abs(g(0, 1) - g(1, 0)), 1e-15);
            Eigen::SelfAdjointEigenSolver<Mat2> es(g);
            EXPECT_GE(es.eigenvalues().minCoeff(), std::min(jmin * jmin, 1.0) * (1 - 1e-3));
            const Mat2 a = f.diffusion_matrix(x);
            EXPECT_LT((a * a - g.inverse()).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
}

TEST(MetricField, DriftMatchesFiniteDifferences) {
    auto mesh = disk(128);
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto f = field(wobbly(mesh, seed));
        CounterRng rng(seed, 3);
        for (int k = 0; k < 20; ++k) {
            const double depth = 0.02 + 0.46 * rng.uniform(), th = 2 * kPi * rng.uniform();
            const Vec2 x = (1.0 - depth) * Vec2(std::cos(th), std::sin(th));
            const Vec2 m = f.drift_vector(x);
            const Vec2 fd = drift_fd(f, x, 1e-5);
            EXPECT_LT((m - fd).norm(), 1e-6 * std::max(1.0, m.norm())) << "seed " << seed << " depth " << depth;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 100);
}

TEST(MetricField, ChartCoefficientsConsistentWithAmbientMetric) {
    auto mesh = disk(128);
    const auto f = field(wobbly(mesh, 9));
    const BoundaryPoint foot{0, 1.234};
    const double d = 0.31;
    const auto c = f.coefficients(foot, d);
    // a is the squared ambient length of the chart vector d/du.
    const double du = 1e-6;
    const Vec2 xu = (f.chart().embed({0, foot.u + du}, d) - f.chart().embed({0, foot.u - du}, d)) / (2 * du);
    const Vec2 x = f.chart().embed(foot, d);
    EXPECT_NEAR(xu.dot(f.metric_eval(x) * xu), c.a, 1e-7);
    const double h = 1e-6;
    EXPECT_NEAR(c.a_u, (f.coefficients({0, foot.u + h}, d).a - f.coefficients({0, foot.u - h}, d).a) / (2 * h), 1e-6);
    EXPECT_NEAR(c.a_d, (f.coefficients(foot, d + h).a - f.coefficients(foot, d - h).a) / (2 * h), 1e-6);
}
