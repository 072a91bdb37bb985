#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xenopower/core.hpp"
#include "xenopower/lmm.hpp"

namespace xenopower {

class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultTargetPower = 0.80;
inline constexpr const char* kThreadsEnvVar = "XENOPOWER_THREADS";

struct PowerJob {
    DesignGrid grid;
    ModelSpec model;
    double target_power = kDefaultTargetPower;
    int worker_count = 0; // 0 means auto
    WaldReference lmm_reference = WaldReference::student_t;
    int quad_points = 15;
};

/// Called with (cells completed, total cells), possibly from worker threads.
using ProgressCallback = std::function<void(int, int)>;
using WarningCallback = std::function<void(const std::string&)>;

/// Generate, fit, and test one replicate of cell (n, m). Fit failures are
/// reported as converged == false rather than thrown.
ReplicateOutcome run_replicate(const PowerJob& job, int n, int m, int replicate);

/// Monte Carlo power for every (n, m) cell, ordered by n then m. The result
/// does not depend on worker_count. Throws EngineError when a cell converges
/// in fewer than half of its replicates.
PowerTable run_power_grid(const PowerJob& job, const ProgressCallback& progress = {},
                          const WarningCallback& warn = {});

/// Pareto frontier of cells with power >= 100 * target_power, ascending n.
std::vector<std::pair<int, int>> minimal_designs(const PowerTable& table, double target_power);

/// 0 resolves to the environment override, else the hardware concurrency.
int resolve_worker_count(int requested);

} // namespace xenopower
