#include "lapgrowth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lapgrowth/types.hpp"

namespace lapgrowth {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

MeanEstimate mean_estimate(std::span<const double> values) {
    MeanEstimate out;
    out.n = values.size();
    if (out.n == 0) return out;
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (double v : values) {
        ++k;
        const double d = v - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (v - mean);
    }
    out.mean = mean;
    if (out.n > 1) out.std_error = std::sqrt(m2 / static_cast<double>(out.n - 1) / static_cast<double>(out.n));
    return out;
}

Moments moments(std::span<const double> values) {
    Moments out;
    out.n = values.size();
    if (out.n < 3) throw InvalidArgument("moments need at least 3 values");
    const double n = static_cast<double>(out.n);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    out.mean = mean;
    out.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    out.skewness_se = std::sqrt(6.0 / n);
    return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw InvalidArgument("KS statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_uniform(std::vector<double> samples) {
    return ks_statistic(std::move(samples), [](double x) { return std::clamp(x, 0.0, 1.0); });
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("KS statistic of an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace lapgrowth
