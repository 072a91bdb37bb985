#pragma once

#include "xenopower/core.hpp"
#include "xenopower/random.hpp"

namespace xenopower {

/// Simulated experiments reuse the common sample layout. Records are ordered
/// by line, then control arm before treated arm.
using SimulatedDataset = SurvivalSample;

/// Log-normal outcomes, y = exp(beta0 + tx*beta + a_line + e). All status = 1.
SimulatedDataset gen_anova(int n, int m, const AnovaParams& params, RandomStream& stream);

/// Weibull-frailty event times by inverse survival transform, with optional
/// administrative censoring at params.ct (censored y equals ct exactly).
SimulatedDataset gen_frailty(int n, int m, const FrailtyParams& params, RandomStream& stream);

} // namespace xenopower
