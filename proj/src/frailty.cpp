#include "xenopower/frailty.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "xenopower/optim.hpp"

namespace xenopower {

namespace {

constexpr double kTauFloor = 1e-5;
constexpr double kTauStart = 0.3;
constexpr double kHessianStep = 1e-4;
constexpr double kQuadratureAgreement = 1e-4;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Root of g'(a) = events - exp(log_cum + a) - a/tau2, which is strictly
// decreasing, so the root is unique and lies in [lo, hi].
double integrand_mode(double events, double log_cum, double tau2) {
    const double cum = std::exp(log_cum);
    double lo = std::min(0.0, -cum * tau2);
    double hi = std::max(0.0, events * tau2);
    double a = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double ea = std::exp(log_cum + a);
        const double grad = events - ea - a / tau2;
        if (grad > 0.0) lo = a; else hi = a;
        const double curv = ea + 1.0 / tau2;
        double next = a + grad / curv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - a) <= 1e-12 * (1.0 + std::fabs(a)) || hi - lo <= 1e-14 * (1.0 + std::fabs(a))) {
            return next;
        }
        a = next;
    }
    return kNaN;
}

double normal_two_sided_p(double z) {
    if (z == 0.0) return 1.0;
    boost::math::normal dist;
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(z))));
}

// Free coordinates (log lambda_c, log nu, beta, log tau), where lambda_c is the
// scale under treatment coded -1/2, +1/2. Relabeling the arms then only flips
// the sign of beta, so fits are exactly antisymmetric.
FrailtyCoefficients from_free(std::span<const double> x) {
    FrailtyCoefficients p;
    p.lambda = std::exp(x[0] - 0.5 * x[2]);
    p.nu = std::exp(x[1]);
    p.beta = x[2];
    if (x.size() > 3) {
        const double tau = std::exp(x[3]);
        p.tau2 = tau <= kTauFloor ? 0.0 : tau * tau;
    }
    return p;
}

// Starting values for the no-frailty Weibull fit: least squares of
// log(-log S) on log t over event times, with S from median-rank plotting
// positions, falling back to the exponential MLE when that line is unusable.
std::array<double, 3> weibull_start(const SurvivalSample& data) {
    std::vector<double> sorted_y;
    double total_time = 0.0, events = 0.0;
    for (const auto& r : data.records) {
        sorted_y.push_back(r.y);
        total_time += r.y;
        events += r.status;
    }
    std::sort(sorted_y.begin(), sorted_y.end());
    const double rate = std::max(events, 0.5) / total_time;
    std::array<double, 3> start = {std::log(rate), 0.0, 0.0};

    const double n = static_cast<double>(sorted_y.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, count = 0;
    for (const auto& r : data.records) {
        if (r.status != 1) continue;
        const auto rank = static_cast<double>(
            std::upper_bound(sorted_y.begin(), sorted_y.end(), r.y) - sorted_y.begin());
        const double surv = 1.0 - (rank - 0.3) / (n + 0.4);
        const double x = std::log(r.y);
        const double y = std::log(-std::log(surv));
        sx += x; sy += y; sxx += x * x; sxy += x * y; count += 1;
    }
    const double var_x = sxx - sx * sx / std::max(count, 1.0);
    if (count >= 3 && var_x > 1e-12) {
        const double slope = (sxy - sx * sy / count) / var_x;
        const double intercept = (sy - slope * sx) / count;
        if (slope > 0.05 && slope < 20.0 && std::isfinite(intercept)) {
            start = {intercept, std::log(slope), 0.0};
        }
    }
    return start;
}

struct Curvature {
    double se_beta = kNaN;
    bool ok = false;
};

// se of beta from the inverse negative Hessian of the log-likelihood. When the
// frailty coordinate makes the matrix indefinite, tau is held at its estimate.
Curvature beta_curvature(const Objective& negloglik, std::span<const double> x) {
    Curvature c;
    SquareMatrix hess = central_hessian(negloglik, x, kHessianStep);
    SquareMatrix inv = spd_inverse(hess);
    if (inv.dim == 0 && hess.dim == 4) {
        SquareMatrix reduced(3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) reduced(i, j) = hess(i, j);
        inv = spd_inverse(reduced);
    }
    if (inv.dim == 0 || !(inv(2, 2) > 0.0)) return c;
    c.se_beta = std::sqrt(inv(2, 2));
    c.ok = std::isfinite(c.se_beta);
    return c;
}

// Newton steps from the quasi-Newton optimum, kept only while they improve
// the objective. Sharpens the estimate well below the gradient tolerance.
std::vector<double> newton_polish(const Objective& negloglik, std::vector<double> x, double& value) {
    for (int iter = 0; iter < 2; ++iter) {
        const auto g = central_gradient(negloglik, x, 1e-5);
        const SquareMatrix inv = spd_inverse(central_hessian(negloglik, x, kHessianStep));
        if (inv.dim == 0) break;
        std::vector<double> next = x;
        for (int i = 0; i < inv.dim; ++i)
            for (int j = 0; j < inv.dim; ++j) next[static_cast<std::size_t>(i)] -= inv(i, j) * g[static_cast<std::size_t>(j)];
        const double v = negloglik(next);
        if (!(v <= value)) break;
        x = std::move(next);
        value = v;
    }
    return x;
}

} // namespace

double log_line_integral(double events, double log_cum_hazard, double tau2,
                         const GaussHermiteRule& rule) {
    if (tau2 <= 0.0) return -std::exp(log_cum_hazard);
    const double mode = integrand_mode(events, log_cum_hazard, tau2);
    if (!std::isfinite(mode)) return kNaN;
    const double scale = 1.0 / std::sqrt(std::exp(log_cum_hazard + mode) + 1.0 / tau2);
    auto g = [&](double a) { return events * a - std::exp(log_cum_hazard + a) - 0.5 * a * a / tau2; };
    const double g_mode = g(mode);
    const double spread = std::numbers::sqrt2 * scale;
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        sum += std::exp(rule.log_scaled_weights[k] + g(mode + spread * rule.nodes[k]) - g_mode);
    }
    return g_mode + std::log(sum * spread) - 0.5 * std::log(2.0 * std::numbers::pi * tau2);
}

FrailtyLikelihood::FrailtyLikelihood(const SurvivalSample& data) : n_lines_(data.n_lines) {
    if (data.records.empty()) throw ValidationError("frailty likelihood needs data");
    line_events_.assign(static_cast<std::size_t>(n_lines_), 0.0);
    for (const auto& r : data.records) {
        if (!(r.y > 0.0)) throw ValidationError("survival times must be positive");
        if (r.line < 1 || r.line > n_lines_) throw ValidationError("line index out of range");
        line_.push_back(r.line - 1);
        tx_.push_back(r.tx);
        log_y_.push_back(std::log(r.y));
        if (r.status == 1) {
            line_events_[static_cast<std::size_t>(r.line - 1)] += 1.0;
            total_events_ += 1.0;
            event_log_y_ += log_y_.back();
            arm_events_[r.tx != 0] += 1.0;
        }
    }
}

double FrailtyLikelihood::operator()(const FrailtyCoefficients& p, int quad_points) const {
    return evaluate(std::log(p.lambda), p.nu, p.beta, p.tau2, 0.0, quad_points);
}

double FrailtyLikelihood::centered(std::span<const double> x, int quad_points) const {
    const FrailtyCoefficients p = from_free(x);
    return evaluate(x[0], p.nu, p.beta, p.tau2, 0.5, quad_points);
}

double FrailtyLikelihood::evaluate(double log_lambda, double nu, double beta, double tau2, double shift,
                                   int quad_points) const {
    std::vector<double> cum(static_cast<std::size_t>(n_lines_), 0.0);
    for (std::size_t k = 0; k < log_y_.size(); ++k) {
        cum[static_cast<std::size_t>(line_[k])] += std::exp(nu * log_y_[k] + beta * (tx_[k] - shift));
    }
    double ll = total_events_ * (log_lambda + std::log(nu)) + (nu - 1.0) * event_log_y_ +
                beta * (arm_events_[1] - shift * total_events_);
    const auto& rule = gauss_hermite(quad_points);
    for (int i = 0; i < n_lines_; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        ll += log_line_integral(line_events_[idx], log_lambda + std::log(cum[idx]), tau2, rule);
    }
    return std::isfinite(ll) ? ll : kNaN;
}

double frailty_loglik(const FrailtyCoefficients& params, const SurvivalSample& data, int quad_points) {
    if (!(params.lambda > 0.0) || !(params.nu > 0.0) || !(params.tau2 >= 0.0)) {
        throw ValidationError("frailty log-likelihood needs lambda > 0, nu > 0, tau2 >= 0");
    }
    return FrailtyLikelihood(data)(params, quad_points);
}

FrailtyCoefficients frailty_start(const SurvivalSample& data) {
    const auto start = weibull_start(data);
    return {std::exp(start[0]), std::exp(start[1]), start[2], kTauStart * kTauStart};
}

FrailtyFit fit_frailty(const SurvivalSample& data, const FrailtyFitOptions& options) {
    if (data.n_lines < 2) throw ValidationError("frailty fit needs at least 2 lines");
    const FrailtyLikelihood likelihood(data);

    FrailtyFit fit;
    fit.quad_points = options.quad_points;
    if (likelihood.events(0) < 1.0 || likelihood.events(1) < 1.0) {
        fit.message = "no observed events in one treatment arm";
        return fit;
    }

    auto negloglik_at = [&](int points) {
        return [&likelihood, points](std::span<const double> x) {
            const double ll = likelihood.centered(x, points);
            return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
        };
    };
    const Objective objective = negloglik_at(options.quad_points);
    BfgsOptions bfgs;
    bfgs.max_iterations = options.max_iterations;

    const auto start = weibull_start(data);
    const BfgsResult base = minimize_bfgs(objective, {start[0], start[1], start[2]}, bfgs);
    if (!base.converged) {
        fit.message = "no-frailty Weibull fit did not converge";
        fit.iterations = base.iterations;
        return fit;
    }

    std::vector<double> x0 = base.x;
    x0.push_back(std::log(kTauStart));
    const BfgsResult full = minimize_bfgs(objective, x0, bfgs);
    fit.iterations = base.iterations + full.iterations;
    if (!full.converged) {
        fit.message = "optimizer did not converge within the iteration limit";
        return fit;
    }

    // The no-frailty optimum is the tau = 0 boundary of the full model.
    const bool boundary = from_free(full.x).tau2 == 0.0 || base.value <= full.value;
    double value = boundary ? base.value : full.value;
    std::vector<double> x = newton_polish(objective, boundary ? base.x : full.x, value);
    if (boundary) x.push_back(std::log(kTauFloor) - 1.0);

    const FrailtyCoefficients est = from_free(x);
    fit.lambda_hat = est.lambda;
    fit.nu_hat = est.nu;
    fit.beta_hat = est.beta;
    fit.tau2_hat = est.tau2;
    fit.log_likelihood = -value;

    if (!boundary) {
        const double check = likelihood(est, options.check_quad_points);
        if (!(std::fabs(check - fit.log_likelihood) <= kQuadratureAgreement)) {
            fit.message = "quadrature did not stabilize between rule sizes";
            return fit;
        }
    }

    const Curvature curv = boundary
        ? beta_curvature(objective, std::span<const double>(x).first(3))
        : beta_curvature(objective, x);
    if (!curv.ok) {
        fit.message = "Hessian is not positive definite in the treatment coordinate";
        return fit;
    }
    fit.se_beta = curv.se_beta;
    fit.p_value = normal_two_sided_p(fit.beta_hat / fit.se_beta);
    fit.converged = true;
    return fit;
}

bool wald_test_frailty(const FrailtyFit& fit, double alpha) {
    if (!fit.converged) throw FitError("Wald test requested on a non-converged frailty fit");
    return normal_two_sided_p(fit.beta_hat / fit.se_beta) < alpha;
}

} // namespace xenopower
