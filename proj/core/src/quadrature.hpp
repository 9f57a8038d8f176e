#pragma once

#include <array>

namespace lapgrowth::detail {

// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule3 {
    static constexpr std::array<double, 3> x = {0.1127016653792583, 0.5, 0.8872983346207417};
    static constexpr std::array<double, 3> w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

struct GaussRule5 {
    static constexpr std::array<double, 5> x = {0.046910077030668, 0.2307653449471585, 0.5, 0.7692346550528415,
                                                0.953089922969332};
    static constexpr std::array<double, 5> w = {0.1184634425280945, 0.2393143352496832, 0.2844444444444444,
                                                0.2393143352496832, 0.1184634425280945};
};

}  // namespace lapgrowth::detail
