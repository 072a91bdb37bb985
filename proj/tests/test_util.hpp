#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "xenopower/core.hpp"
#include "xenopower/io.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
    return std::string(XENOPOWER_TEST_DATA) + "/" + name;
}

inline xenopower::SurvivalSample animals1() {
    return xenopower::to_sample(xenopower::read_pilot_csv(data_path("animals1.csv")));
}

inline xenopower::SurvivalSample animals2() {
    return xenopower::to_sample(xenopower::read_pilot_csv(data_path("animals2.csv")));
}

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

/// Balanced log-normal sample drawn with a generator independent of the
/// library's stream machinery.
inline xenopower::SurvivalSample balanced_lognormal(int n, int m, double beta, double tau2,
                                                    double sigma2, std::uint64_t seed) {
    std::mt19937 gen(static_cast<std::uint32_t>(seed));
    std::normal_distribution<double> z(0.0, 1.0);
    xenopower::SurvivalSample s;
    s.n_lines = n;
    for (int i = 1; i <= n; ++i) {
        const double a = std::sqrt(tau2) * z(gen);
        for (int tx = 0; tx <= 1; ++tx)
            for (int j = 0; j < m; ++j)
                s.records.push_back({i, tx, std::exp(1.0 + beta * tx + a + std::sqrt(sigma2) * z(gen)), 1});
    }
    return s;
}

} // namespace testutil
