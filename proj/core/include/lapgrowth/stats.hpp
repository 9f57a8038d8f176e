#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lapgrowth {

double normal_cdf(double x);

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};
MeanEstimate mean_estimate(std::span<const double> values);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double skewness = 0.0;
    double skewness_se = 0.0;  // sqrt(6 / n), the normal-theory standard error
    std::size_t n = 0;
};
Moments moments(std::span<const double> values);

/// sup_x |F_n(x) - F(x)| for the empirical distribution of `samples`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_uniform(std::vector<double> samples);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace lapgrowth
