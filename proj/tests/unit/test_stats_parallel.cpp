#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lapgrowth/parallel.hpp"
#include "lapgrowth/stats.hpp"

using namespace lapgrowth;

TEST(Stats, NormalCdfMatchesErfc) {
    for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
        EXPECT_NEAR(normal_cdf(x), 0.5 * std::erfc(-x / std::sqrt(2.0)), 1e-15);
    }
}

TEST(Stats, MeanAndMoments) {
    const std::vector<double> v{1, 2, 3, 4, 10};
    const auto m = mean_estimate(v);
    EXPECT_DOUBLE_EQ(m.mean, 4.0);
    EXPECT_NEAR(m.std_error, std::sqrt(12.5 / 5.0), 1e-14);
    const auto mo = moments(v);
    EXPECT_NEAR(mo.variance, 12.5, 1e-14);
    // central moments m2 = 10, m3 = 36
    EXPECT_NEAR(mo.skewness, 36.0 / std::pow(10.0, 1.5), 1e-14);
    EXPECT_NEAR(mo.skewness_se, std::sqrt(6.0 / 5.0), 1e-15);
}

TEST(Stats, KsHandComputed) {
    EXPECT_NEAR(ks_uniform({0.9, 0.1, 0.5}), 0.7 / 3.0, 1e-15);
    EXPECT_NEAR(ks_two_sample({1, 2, 3}, {2.5, 4}), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ks_statistic({0.0}, [](double x) { return normal_cdf(x); }), 0.5, 1e-15);
}

TEST(Stats, QuantileType7) {
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(median({5, 1, 3}), 3.0);
}

TEST(Parallel, EveryIndexRunsOnce) {
    for (unsigned threads : {1u, 2u, 7u}) {
        std::vector<std::atomic<int>> hits(101);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
    EXPECT_GE(resolve_threads(0), 1u);
    EXPECT_EQ(resolve_threads(3), 3u);
}

TEST(Parallel, ExceptionIsRethrown) {
    EXPECT_THROW(parallel_for(50, 3,
                              [](std::size_t i) {
                                  if (i == 17) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
