#include "xenopower/datagen.hpp"

#include <cmath>
#include <vector>

namespace xenopower {

namespace {

void check_shape(int n, int m) {
    if (n < 1) throw ValidationError("n must be at least 1");
    if (m < 1) throw ValidationError("m must be at least 1");
}

// Line effects are drawn first, in line order, before any animal-level draw.
std::vector<double> draw_line_effects(int n, double tau2, RandomStream& stream) {
    std::vector<double> effects(static_cast<std::size_t>(n));
    const double sd = std::sqrt(tau2);
    for (auto& a : effects) a = stream.normal(0.0, sd);
    return effects;
}

} // namespace

SimulatedDataset gen_anova(int n, int m, const AnovaParams& params, RandomStream& stream) {
    check_shape(n, m);
    validate(params);
    const auto effects = draw_line_effects(n, params.tau2, stream);
    const double sd = std::sqrt(params.sigma2);

    SimulatedDataset data;
    data.n_lines = n;
    data.records.reserve(static_cast<std::size_t>(2 * n * m));
    for (int i = 0; i < n; ++i) {
        for (int tx = 0; tx <= 1; ++tx) {
            for (int j = 0; j < m; ++j) {
                const double eta = params.beta0 + tx * params.beta + effects[i];
                data.records.push_back({i + 1, tx, std::exp(stream.normal(eta, sd)), 1});
            }
        }
    }
    return data;
}

SimulatedDataset gen_frailty(int n, int m, const FrailtyParams& params, RandomStream& stream) {
    check_shape(n, m);
    validate(params);
    const auto effects = draw_line_effects(n, params.tau2, stream);
    const double inv_nu = 1.0 / params.nu;

    SimulatedDataset data;
    data.n_lines = n;
    data.records.reserve(static_cast<std::size_t>(2 * n * m));
    for (int i = 0; i < n; ++i) {
        for (int tx = 0; tx <= 1; ++tx) {
            const double rate = params.lambda * std::exp(tx * params.beta + effects[i]);
            for (int j = 0; j < m; ++j) {
                // S(t) = exp(-rate * t^nu)  =>  T = (-log U / rate)^(1/nu)
                const double t = std::pow(-std::log(stream.uniform()) / rate, inv_nu);
                if (params.censor && t > params.ct) {
                    data.records.push_back({i + 1, tx, params.ct, 0});
                } else {
                    data.records.push_back({i + 1, tx, t, 1});
                }
            }
        }
    }
    return data;
}

} // namespace xenopower
