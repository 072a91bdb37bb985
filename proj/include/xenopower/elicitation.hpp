#pragma once

#include "xenopower/core.hpp"

namespace xenopower {

// Sign convention for both median-based paths: beta = log(ctl_med / tx_med)
// (times nu for the frailty model). Power is invariant to the sign of beta.

inline constexpr double kDefaultIcc = 0.1;
inline constexpr double kDefaultSigma2 = 1.0;
inline constexpr double kDefaultNu = 1.0;
inline constexpr double kDefaultTau2 = 0.1;

/// REML estimates on log(Y). Rejects pilot data carrying any censored row.
AnovaParams elicit_anova_from_pilot(const PilotDataset& pilot);

/// beta0 = log(ctl), beta = log(ctl) - log(tx), tau2 = sigma2 * icc / (1 - icc).
AnovaParams elicit_anova_from_medians(double ctl_med, double tx_med,
                                      double icc = kDefaultIcc, double sigma2 = kDefaultSigma2);

/// Weibull-frailty estimates. Censoring settings are left off; callers set
/// censor/ct for the simulated experiments. Throws FitError if the fit fails.
FrailtyParams elicit_frailty_from_pilot(const PilotDataset& pilot);

/// beta = nu * log(ctl/tx); lambda = log(2) / ctl^nu, so the zero-frailty
/// control median equals ctl.
FrailtyParams elicit_frailty_from_medians(double ctl_med, double tx_med,
                                          double nu = kDefaultNu, double tau2 = kDefaultTau2);

} // namespace xenopower
