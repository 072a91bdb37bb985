#include "xenopower/lmm.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace xenopower {

namespace {

constexpr double kLogThetaLo = -18.420680743952367; // log(1e-8)
constexpr double kLogThetaHi = 13.815510557964274;  // log(1e6)
constexpr int kScanPoints = 65;

// Per-line sufficient statistics of (1, tx, log y), with log y centered on
// its grand mean so the quadratic forms stay well conditioned.
struct LineStats {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
};

struct Summary {
    std::vector<LineStats> lines;
    double n_obs = 0;
    double y_mean = 0;
};

Summary summarize(const SurvivalSample& data) {
    if (data.n_lines < 2) throw ValidationError("mixed model fit needs at least 2 lines");
    if (data.records.size() < 3) throw ValidationError("mixed model fit needs at least 3 observations");

    Summary s;
    s.lines.resize(static_cast<std::size_t>(data.n_lines));
    double total = 0;
    for (const auto& r : data.records) {
        if (!(r.y > 0.0)) throw ValidationError("outcomes must be positive");
        if (r.line < 1 || r.line > data.n_lines) throw ValidationError("line index out of range");
        total += std::log(r.y);
    }
    s.n_obs = static_cast<double>(data.records.size());
    s.y_mean = total / s.n_obs;

    bool arms[2] = {false, false};
    for (const auto& r : data.records) {
        auto& g = s.lines[static_cast<std::size_t>(r.line - 1)];
        const double x = r.tx;
        const double y = std::log(r.y) - s.y_mean;
        g.n += 1;
        g.sx += x;
        g.sy += y;
        g.sxx += x * x;
        g.sxy += x * y;
        g.syy += y * y;
        arms[r.tx != 0] = true;
    }
    for (const auto& g : s.lines) {
        if (g.n == 0) throw ValidationError("every line index must have at least one observation");
    }
    if (!arms[0] || !arms[1]) throw ValidationError("both treatment arms must be present");
    return s;
}

// GLS quantities at a fixed variance ratio. V = sigma2 * (I + theta*J) per line.
struct GlsState {
    double theta = 0;
    std::array<double, 3> xtwx{}; // symmetric 2x2: [00, 01, 11]
    std::array<double, 2> beta{};
    double rss = 0;
    double log_det_h = 0;
    double log_det_xtwx = 0;
    double reml = 0;
    double score = 0; // d reml / d log(theta)
};

GlsState gls_at(const Summary& s, double theta) {
    GlsState st;
    st.theta = theta;
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0, yy = 0;
    for (const auto& g : s.lines) {
        const double c = theta / (1.0 + g.n * theta);
        a00 += g.n - c * g.n * g.n;
        a01 += g.sx - c * g.n * g.sx;
        a11 += g.sxx - c * g.sx * g.sx;
        b0 += g.sy - c * g.n * g.sy;
        b1 += g.sxy - c * g.sx * g.sy;
        yy += g.syy - c * g.sy * g.sy;
        st.log_det_h += std::log1p(g.n * theta);
    }
    const double det = a00 * a11 - a01 * a01;
    st.xtwx = {a00, a01, a11};
    st.beta = {(a11 * b0 - a01 * b1) / det, (a00 * b1 - a01 * b0) / det};
    st.rss = std::max(yy - st.beta[0] * b0 - st.beta[1] * b1, 0.0);
    st.log_det_xtwx = std::log(det);

    const double dof = s.n_obs - 2.0;
    const double sigma2 = st.rss / dof;
    st.reml = -0.5 * (dof * std::log(sigma2) + st.log_det_h + st.log_det_xtwx +
                      dof * (1.0 + std::log(2.0 * std::numbers::pi)));

    // Per line, H^-1 1 = 1 / (1 + n theta), which gives every term of the score.
    double quad = 0, trace_h = 0, trace_x = 0;
    for (const auto& g : s.lines) {
        const double w = 1.0 / (1.0 + g.n * theta);
        const double resid = (g.sy - st.beta[0] * g.n - st.beta[1] * g.sx) * w;
        quad += resid * resid;
        trace_h += g.n * w;
        const double u0 = g.n * w, u1 = g.sx * w;
        trace_x += (a11 * u0 * u0 - 2.0 * a01 * u0 * u1 + a00 * u1 * u1) / det;
    }
    st.score = -0.5 * theta * (trace_h - trace_x - dof * quad / st.rss);
    return st;
}

double student_p(double t, double df) {
    if (t == 0.0) return 1.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

double normal_p(double z) {
    if (z == 0.0) return 1.0;
    boost::math::normal dist;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(z))));
}

} // namespace

double lmm_profile_reml(const SurvivalSample& data, double theta) {
    return gls_at(summarize(data), theta).reml;
}

LmmFit fit_lmm(const SurvivalSample& data) {
    const Summary s = summarize(data);
    LmmFit fit;
    fit.df = s.n_obs - static_cast<double>(s.lines.size()) - 1.0;
    if (fit.df < 1.0) throw ValidationError("not enough within-line replication for the treatment test");

    auto objective = [&](double log_theta) { return -gls_at(s, std::exp(log_theta)).reml; };

    // Coarse scan to locate the basin, then Brent inside the bracketing cells.
    std::array<double, kScanPoints> grid{};
    int best = 0;
    double best_value = 0;
    const double step = (kLogThetaHi - kLogThetaLo) / (kScanPoints - 1);
    for (int k = 0; k < kScanPoints; ++k) {
        grid[k] = objective(kLogThetaLo + k * step);
        if (k == 0 || grid[k] < best_value) {
            best_value = grid[k];
            best = k;
        }
    }

    GlsState state = gls_at(s, 0.0);
    bool bracketed = best < kScanPoints - 1;
    if (bracketed) {
        const double lo = kLogThetaLo + std::max(best - 1, 0) * step;
        const double hi = kLogThetaLo + std::min(best + 1, kScanPoints - 1) * step;
        std::uintmax_t iterations = 200;
        const auto [log_theta, value] =
            boost::math::tools::brent_find_minima(objective, lo, hi, 40, iterations);
        const bool at_floor = log_theta <= kLogThetaLo + 1e-6;
        if (!at_floor && -value > state.reml) {
            state = gls_at(s, std::exp(log_theta));
            // Brent locates the optimum only to about sqrt(eps); finish on the score.
            auto score = [&](double lt) { return gls_at(s, std::exp(lt)).score; };
            if (score(lo) > 0.0 && score(hi) < 0.0) {
                std::uintmax_t root_iterations = 100;
                const auto [a, b] = boost::math::tools::toms748_solve(
                    score, lo, hi, boost::math::tools::eps_tolerance<double>(), root_iterations);
                const GlsState polished = gls_at(s, std::exp(0.5 * (a + b)));
                if (polished.reml >= state.reml - 1e-12) state = polished;
            }
        }
    }

    const double dof = s.n_obs - 2.0;
    const auto& a = state.xtwx;
    const double det = a[0] * a[2] - a[1] * a[1];
    fit.sigma2_hat = state.rss / dof;
    fit.tau2_hat = state.theta * fit.sigma2_hat;
    fit.beta0_hat = state.beta[0] + s.y_mean;
    fit.beta_hat = state.beta[1];
    fit.se_beta = std::sqrt(fit.sigma2_hat * a[0] / det);
    fit.log_restricted_likelihood = state.reml;
    fit.converged = bracketed && std::isfinite(fit.se_beta) && fit.se_beta > 0.0;
    fit.p_value = fit.converged ? student_p(fit.beta_hat / fit.se_beta, fit.df) : 1.0;
    return fit;
}

double lmm_p_value(const LmmFit& fit, WaldReference reference) {
    if (!fit.converged) throw FitError("Wald test requested on a non-converged mixed model fit");
    const double stat = fit.beta_hat / fit.se_beta;
    return reference == WaldReference::student_t ? student_p(stat, fit.df) : normal_p(stat);
}

bool wald_test_lmm(const LmmFit& fit, double alpha, WaldReference reference) {
    return lmm_p_value(fit, reference) < alpha;
}

} // namespace xenopower
