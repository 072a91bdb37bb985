#pragma once

#include <span>
#include <string>
#include <vector>

#include "xenopower/core.hpp"
#include "xenopower/quadrature.hpp"

namespace xenopower {

/// Point in the Weibull-frailty parameter space.
struct FrailtyCoefficients {
    double lambda = 1.0;
    double nu = 1.0;
    double beta = 0.0;
    double tau2 = 0.0;
};

struct FrailtyFit {
    double lambda_hat = 0.0;
    double nu_hat = 0.0;
    double beta_hat = 0.0;
    double se_beta = 0.0;
    double tau2_hat = 0.0;
    double p_value = 1.0; // standard normal reference
    bool converged = false;
    double log_likelihood = 0.0;
    int quad_points = 15;
    int iterations = 0;
    std::string message; // reason when not converged
};

/// log of  integral N(a; 0, tau2) * exp(events*a - cum_hazard*e^a) da,
/// by adaptive Gauss-Hermite centered at the integrand mode. Returns NaN if
/// the mode search fails. tau2 == 0 gives -cum_hazard.
double log_line_integral(double events, double log_cum_hazard, double tau2,
                         const GaussHermiteRule& rule);

/// Marginal log-likelihood, precomputed per sample so repeated evaluation
/// inside the optimizer costs one pass over the animals.
class FrailtyLikelihood {
public:
    explicit FrailtyLikelihood(const SurvivalSample& data);

    double operator()(const FrailtyCoefficients& p, int quad_points) const;

    /// Same likelihood in the optimizer's free coordinates (log lambda_c,
    /// log nu, beta[, log tau]), lambda_c being the scale at tx = 1/2.
    double centered(std::span<const double> x, int quad_points) const;

    int n_lines() const { return n_lines_; }
    double events(int tx) const { return arm_events_[tx]; }

private:
    double evaluate(double log_lambda, double nu, double beta, double tau2, double shift,
                    int quad_points) const;

    int n_lines_ = 0;
    std::vector<int> line_;
    std::vector<int> tx_;
    std::vector<double> log_y_;
    std::vector<double> line_events_;
    double total_events_ = 0;
    double event_log_y_ = 0;
    double arm_events_[2] = {0, 0};
};

double frailty_loglik(const FrailtyCoefficients& params, const SurvivalSample& data,
                      int quad_points);

/// Optimizer starting point: a no-frailty Weibull guess from a log(-log S)
/// against log t regression, with tau = 0.3.
FrailtyCoefficients frailty_start(const SurvivalSample& data);

struct FrailtyFitOptions {
    int quad_points = 15;
    int check_quad_points = 31;
    int max_iterations = 500;
};

/// Maximum marginal likelihood fit with a normal-reference Wald statistic for
/// the treatment effect. Throws ValidationError with fewer than 2 lines; all
/// other failures come back as converged == false.
FrailtyFit fit_frailty(const SurvivalSample& data, const FrailtyFitOptions& options = {});

/// Two-sided Wald test of beta = 0. Throws FitError on a non-converged fit.
bool wald_test_frailty(const FrailtyFit& fit, double alpha);

} // namespace xenopower
