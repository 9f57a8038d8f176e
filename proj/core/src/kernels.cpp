#include "lapgrowth/kernels.hpp"

#include <cmath>
#include <numbers>

namespace lapgrowth {

namespace {

// Integral of exp(1 - 1/(1 - t^2)) over (-1, 1), and the standard deviation of
// the normalized bump. The support radius is bandwidth / kBumpStd so that the
// bandwidth is the profile's standard deviation, as for the Gaussian.
constexpr double kBumpMass = 1.2069003224378765;
constexpr double kBumpStd = 0.3976350541184696;
constexpr std::size_t kNormalizationPoints = 1024;

double gaussian(double s, double sigma) {
    return std::exp(-0.5 * (s / sigma) * (s / sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

double bump(double s, double sigma) {
    const double radius = sigma / kBumpStd;
    const double t = s / radius;
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t * t)) / (radius * kBumpMass);
}

// exp(-k) I0(k)
double scaled_bessel_i0(double k) {
    if (k < 500.0) return std::cyl_bessel_i(0.0, k) * std::exp(-k);
    return (1.0 + 1.0 / (8.0 * k) + 9.0 / (128.0 * k * k)) / std::sqrt(2.0 * std::numbers::pi * k);
}

int wrap_count(double sigma, double period) { return std::max(3, static_cast<int>(std::ceil(8.0 * sigma / period))); }

}  // namespace

KernelFamily parse_kernel_family(const std::string& name) {
    if (name == "wrapped_gaussian") return KernelFamily::wrapped_gaussian;
    if (name == "von_mises") return KernelFamily::von_mises;
    if (name == "compact_bump") return KernelFamily::compact_bump;
    if (name == "zero") return KernelFamily::zero;
    throw InvalidArgument("unknown kernel family '" + name + "'");
}

KernelNormalization parse_kernel_normalization(const std::string& name) {
    if (name == "raw") return KernelNormalization::raw;
    if (name == "unit_mean_under_uniform") return KernelNormalization::unit_mean_under_uniform;
    if (name == "unit_normal_speed") return KernelNormalization::unit_normal_speed;
    throw InvalidArgument("unknown kernel normalization '" + name + "'");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::wrapped_gaussian: return "wrapped_gaussian";
        case KernelFamily::von_mises: return "von_mises";
        case KernelFamily::compact_bump: return "compact_bump";
        case KernelFamily::zero: return "zero";
    }
    return "zero";
}

std::string to_string(KernelNormalization normalization) {
    switch (normalization) {
        case KernelNormalization::raw: return "raw";
        case KernelNormalization::unit_mean_under_uniform: return "unit_mean_under_uniform";
        case KernelNormalization::unit_normal_speed: return "unit_normal_speed";
    }
    return "raw";
}

void validate(const KernelSpec& spec) {
    if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth)) throw InvalidArgument("kernel bandwidth must be > 0");
    if (!(spec.coupling >= 0.0 && spec.coupling <= 1.0)) throw InvalidArgument("kernel coupling must lie in [0, 1]");
}

double kernel_profile(const KernelSpec& spec, double period, double s) {
    // Reduce to [0, period/2] so that the profile is exactly symmetric.
    double r = std::fmod(std::abs(s), period);
    if (r > 0.5 * period) r = period - r;
    const double sigma = spec.bandwidth;
    switch (spec.family) {
        case KernelFamily::zero: return 0.0;
        case KernelFamily::von_mises: {
            const double kappa = std::pow(period / (2.0 * std::numbers::pi * sigma), 2);
            const double c = std::cos(2.0 * std::numbers::pi * r / period);
            return std::exp(kappa * (c - 1.0)) / (period * scaled_bessel_i0(kappa));
        }
        case KernelFamily::wrapped_gaussian:
        case KernelFamily::compact_bump: {
            const int k_max = wrap_count(sigma, period);
            double acc = 0.0;
            for (int k = -k_max; k <= k_max; ++k) {
                const double d = r + k * period;
                acc += spec.family == KernelFamily::wrapped_gaussian ? gaussian(d, sigma) : bump(d, sigma);
            }
            return acc;
        }
    }
    return 0.0;
}

double kernel_profile_free(const KernelSpec& spec, double distance) {
    switch (spec.family) {
        case KernelFamily::zero: return 0.0;
        case KernelFamily::compact_bump: return bump(distance, spec.bandwidth);
        case KernelFamily::wrapped_gaussian:
        case KernelFamily::von_mises: return gaussian(distance, spec.bandwidth);
    }
    return 0.0;
}

Kernel::Kernel(KernelSpec spec, std::shared_ptr<const BoundaryMesh> mesh) : spec_(spec), mesh_(std::move(mesh)) {
    validate(spec_);
    if (!mesh_) throw InvalidArgument("kernel needs a mesh");
    for (std::size_t c = 0; c < mesh_->component_count(); ++c) {
        const auto& comp = mesh_->component(c);
        const double len = comp.length;
        double scale = 1.0;
        if (spec_.normalization == KernelNormalization::unit_mean_under_uniform) {
            scale = len;
        } else if (spec_.normalization == KernelNormalization::unit_normal_speed && !is_zero()) {
            // Average over x of (1/L) int K(x, y) <n(x), n(y)> dy on the reference curve.
            const std::size_t m = kNormalizationPoints;
            std::vector<double> u(m), speed(m);
            std::vector<Vec2> nrm(m);
            for (std::size_t i = 0; i < m; ++i) {
                u[i] = len * static_cast<double>(i) / static_cast<double>(m);
                const Vec2 d1 = comp.curve.eval(u[i]).d1;
                speed[i] = d1.norm();
                nrm[i] = rotate_cw(d1 / speed[i]);
            }
            std::vector<double> profile(m);
            for (std::size_t k = 0; k < m; ++k) profile[k] = kernel_profile(spec_, len, u[k]);
            double acc = 0.0;
            double mass = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    acc += speed[i] * speed[j] * profile[(i + m - j) % m] * nrm[i].dot(nrm[j]);
                }
                mass += speed[i];
            }
            const double h = len / static_cast<double>(m);
            const double projected = acc * h / (mass * len);
            if (!(projected > 0.0)) {
                throw InvalidArgument("unit_normal_speed normalization undefined: projected kernel mean <= 0");
            }
            scale = 1.0 / projected;
        }
        scale_.push_back(scale);
    }

    const std::size_t n = mesh_->node_count();
    auto mat = std::make_shared<Eigen::MatrixXd>(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const BoundaryPoint y = mesh_->node_point(j);
        for (std::size_t i = 0; i <= j; ++i) {
            const double v = (*this)(mesh_->node_point(i), y);
            (*mat)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            (*mat)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    matrix_ = std::move(mat);
}

double Kernel::operator()(const BoundaryPoint& x, const BoundaryPoint& y) const {
    if (is_zero()) return 0.0;
    if (x.component == y.component) {
        const double len = mesh_->component(x.component).length;
        return scale_[x.component] * kernel_profile(spec_, len, x.u - y.u);
    }
    if (spec_.coupling == 0.0) return 0.0;
    const double dist = (mesh_->point(x) - mesh_->point(y)).norm();
    return spec_.coupling * std::sqrt(scale_[x.component] * scale_[y.component]) * kernel_profile_free(spec_, dist);
}

Eigen::VectorXd Kernel::column(const BoundaryPoint& y) const {
    const std::size_t n = mesh_->node_count();
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = (*this)(mesh_->node_point(i), y);
    return out;
}

double Kernel::mean_under(const std::vector<double>& weights, const BoundaryPoint& x) const {
    if (weights.size() != mesh_->node_count()) throw InvalidArgument("one weight per mesh node required");
    double acc = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) acc += weights[j] * (*this)(x, mesh_->node_point(j));
    return acc;
}

double Kernel::peak(std::size_t component) const {
    return scale_.at(component) * kernel_profile(spec_, mesh_->component(component).length, 0.0);
}

}  // namespace lapgrowth
