#include "lapgrowth/spline.hpp"

#include <algorithm>
#include <cmath>

namespace lapgrowth {

std::vector<double> solve_cyclic_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                             std::span<const double> super, std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (n < 3 || sub.size() != n || super.size() != n || rhs.size() != n) {
        throw InvalidArgument("cyclic tridiagonal system needs n >= 3 matching bands");
    }
    // A = B + w v^T with B tridiagonal; corners sub[0] (row 0, col n-1) and
    // super[n-1] (row n-1, col 0).
    const double gamma = -diag[0];
    std::vector<double> b(diag.begin(), diag.end());
    b[0] -= gamma;
    b[n - 1] -= super[n - 1] * sub[0] / gamma;

    auto thomas = [&](std::span<const double> r) {
        std::vector<double> c(n), x(n);
        double denom = b[0];
        c[0] = super[0] / denom;
        x[0] = r[0] / denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = b[i] - sub[i] * c[i - 1];
            c[i] = (i + 1 < n) ? super[i] / denom : 0.0;
            x[i] = (r[i] - sub[i] * x[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
        return x;
    };

    std::vector<double> w(n, 0.0);
    w[0] = gamma;
    w[n - 1] = super[n - 1];
    const std::vector<double> y = thomas(rhs);
    const std::vector<double> z = thomas(w);
    const double vy = y[0] + sub[0] / gamma * y[n - 1];
    const double vz = z[0] + sub[0] / gamma * z[n - 1];
    const double factor = vy / (1.0 + vz);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] - factor * z[i];
    return out;
}

PeriodicSpline::PeriodicSpline(std::span<const double> knots, double period, std::span<const double> values)
    : knots_(knots.begin(), knots.end()), period_(period), values_(values.begin(), values.end()) {
    const std::size_t n = knots_.size();
    if (n < 3 || values_.size() != n) throw InvalidArgument("periodic spline needs >= 3 matching samples");
    if (!(period_ > knots_.back() - knots_.front())) throw InvalidArgument("spline period too short");
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = (i + 1 < n) ? knots_[i + 1] : knots_[0] + period_;
        h[i] = next - knots_[i];
        if (!(h[i] > 0.0)) throw InvalidArgument("spline knots must be strictly increasing");
    }
    // Row i: h_{i-1} M_{i-1} + 2(h_{i-1}+h_i) M_i + h_i M_{i+1} = 6 (slope_i - slope_{i-1})
    std::vector<double> sub(n), diag(n), super(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t im = (i + n - 1) % n;
        const std::size_t ip = (i + 1) % n;
        const double slope_prev = (values_[i] - values_[im]) / h[im];
        const double slope_next = (values_[ip] - values_[i]) / h[i];
        sub[i] = h[im];
        diag[i] = 2.0 * (h[im] + h[i]);
        super[i] = h[i];
        rhs[i] = 6.0 * (slope_next - slope_prev);
    }
    second_ = solve_cyclic_tridiagonal(sub, diag, super, rhs);
}

double PeriodicSpline::wrap(double u) const noexcept {
    const double u0 = knots_.front();
    double r = std::fmod(u - u0, period_);
    if (r < 0.0) r += period_;
    if (r >= period_) r = 0.0;
    return u0 + r;
}

std::pair<std::size_t, double> PeriodicSpline::locate(double u) const {
    if (!fitted()) throw StateError("spline not fitted");
    const double w = wrap(u);
    const std::size_t n = knots_.size();
    // Guess from uniform spacing, walk a few knots, then fall back to bisection.
    auto i = static_cast<std::size_t>((w - knots_.front()) / period_ * static_cast<double>(n));
    i = std::min(i, n - 1);
    for (int walk = 0; walk < 4; ++walk) {
        if (knots_[i] > w) {
            --i;
        } else if (i + 1 < n && knots_[i + 1] <= w) {
            ++i;
        } else {
            return {i, w - knots_[i]};
        }
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), w);
    i = static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
    return {i, w - knots_[i]};
}

Jet<double> PeriodicSpline::eval_at(std::size_t i, double t) const {
    const std::size_t n = knots_.size();
    const std::size_t ip = (i + 1) % n;
    const double h = ((i + 1 < n) ? knots_[i + 1] : knots_[0] + period_) - knots_[i];
    const double a = values_[i];
    const double b = (values_[ip] - values_[i]) / h - h * (2.0 * second_[i] + second_[ip]) / 6.0;
    const double c = 0.5 * second_[i];
    const double d = (second_[ip] - second_[i]) / (6.0 * h);
    return {a + t * (b + t * (c + t * d)), b + t * (2.0 * c + 3.0 * d * t), 2.0 * c + 6.0 * d * t, 6.0 * d};
}

Jet<double> PeriodicSpline::eval(double u) const {
    const auto [i, t] = locate(u);
    return eval_at(i, t);
}

Jet<double> PeriodicSpline::eval_knot(std::size_t i) const {
    if (!fitted()) throw StateError("spline not fitted");
    return eval_at(i, 0.0);
}

PeriodicCurve::PeriodicCurve(std::span<const double> knots, double period, std::span<const Vec2> points) {
    std::vector<double> xs(points.size()), ys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        xs[i] = points[i].x();
        ys[i] = points[i].y();
    }
    x_ = PeriodicSpline(knots, period, xs);
    y_ = PeriodicSpline(knots, period, ys);
}

namespace {
Jet<Vec2> combine(const Jet<double>& x, const Jet<double>& y) {
    return {{x.value, y.value}, {x.d1, y.d1}, {x.d2, y.d2}, {x.d3, y.d3}};
}
}  // namespace

Jet<Vec2> PeriodicCurve::eval(double u) const {
    const auto [i, t] = x_.locate(u);
    return combine(x_.eval_at(i, t), y_.eval_at(i, t));
}

Jet<Vec2> PeriodicCurve::eval_knot(std::size_t i) const { return combine(x_.eval_knot(i), y_.eval_knot(i)); }

}  // namespace lapgrowth
