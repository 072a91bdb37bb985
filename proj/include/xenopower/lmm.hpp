#pragma once

#include "xenopower/core.hpp"

namespace xenopower {

/// Reference distribution for the treatment Wald statistic.
enum class WaldReference { student_t, normal };

/// REML fit of log(y) = beta0 + tx*beta + a_line + e.
struct LmmFit {
    double beta0_hat = 0.0;
    double beta_hat = 0.0;
    double se_beta = 0.0;
    double tau2_hat = 0.0;
    double sigma2_hat = 0.0;
    double df = 0.0; // observations - lines - 1
    double p_value = 1.0; // Student-t reference
    bool converged = false;
    double log_restricted_likelihood = 0.0;
};

/// Profiled restricted log-likelihood at variance ratio theta = tau2/sigma2.
/// Outcomes are log-transformed internally.
double lmm_profile_reml(const SurvivalSample& data, double theta);

/// Fits the model on log(y). Throws ValidationError with fewer than 2 lines,
/// fewer than 3 observations, or a single treatment arm.
LmmFit fit_lmm(const SurvivalSample& data);

double lmm_p_value(const LmmFit& fit, WaldReference reference = WaldReference::student_t);

/// Two-sided Wald test of beta = 0. Throws FitError on a non-converged fit.
bool wald_test_lmm(const LmmFit& fit, double alpha,
                   WaldReference reference = WaldReference::student_t);

} // namespace xenopower
