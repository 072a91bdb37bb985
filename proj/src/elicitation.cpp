#include "xenopower/elicitation.hpp"

#include <cmath>
#include <numbers>

#include "xenopower/frailty.hpp"
#include "xenopower/lmm.hpp"

namespace xenopower {

namespace {

void require_positive(double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ValidationError(std::string(name) + " must be positive");
}

} // namespace

AnovaParams elicit_anova_from_pilot(const PilotDataset& pilot) {
    for (const auto& r : pilot.rows()) {
        if (r.status && *r.status == 0) {
            throw ValidationError("pilot data for the mixed model must be uncensored (status = 0 found)");
        }
    }
    const LmmFit fit = fit_lmm(to_sample(pilot));
    if (!fit.converged) throw FitError("mixed model fit on the pilot data did not converge");
    return {fit.beta0_hat, fit.beta_hat, fit.tau2_hat, fit.sigma2_hat};
}

AnovaParams elicit_anova_from_medians(double ctl_med, double tx_med, double icc, double sigma2) {
    require_positive(ctl_med, "control median");
    require_positive(tx_med, "treatment median");
    require_positive(sigma2, "sigma2");
    if (!(icc >= 0.0 && icc < 1.0)) throw ValidationError("icc must lie in [0, 1)");
    AnovaParams p;
    p.beta0 = std::log(ctl_med);
    p.beta = std::log(ctl_med) - std::log(tx_med);
    p.tau2 = sigma2 * icc / (1.0 - icc);
    p.sigma2 = sigma2;
    return p;
}

FrailtyParams elicit_frailty_from_pilot(const PilotDataset& pilot) {
    if (!pilot.has_status()) throw ValidationError("pilot data for the frailty model needs a status column");
    const FrailtyFit fit = fit_frailty(to_sample(pilot));
    if (!fit.converged) throw FitError("frailty fit on the pilot data failed: " + fit.message);
    FrailtyParams p;
    p.lambda = fit.lambda_hat;
    p.nu = fit.nu_hat;
    p.beta = fit.beta_hat;
    p.tau2 = fit.tau2_hat;
    return p;
}

FrailtyParams elicit_frailty_from_medians(double ctl_med, double tx_med, double nu, double tau2) {
    require_positive(ctl_med, "control median");
    require_positive(tx_med, "treatment median");
    require_positive(nu, "nu");
    if (!(std::isfinite(tau2) && tau2 >= 0.0)) throw ValidationError("tau2 must be nonnegative");
    FrailtyParams p;
    p.nu = nu;
    p.beta = nu * (std::log(ctl_med) - std::log(tx_med));
    p.lambda = std::numbers::ln2 / std::pow(ctl_med, nu);
    p.tau2 = tau2;
    return p;
}

} // namespace xenopower
