#include "xenopower/power.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "xenopower/datagen.hpp"
#include "xenopower/frailty.hpp"
#include "xenopower/random.hpp"

namespace xenopower {

namespace {

struct Cell {
    int n;
    int m;
};

void validate_job(const PowerJob& job) {
    validate_grid(job.grid);
    std::visit([](const auto& p) { validate(p); }, job.model);
    if (!(job.target_power > 0.0 && job.target_power <= 1.0)) {
        throw ValidationError("target power must lie in (0, 1]");
    }
    if (job.worker_count < 0) throw ValidationError("worker count must be positive or 0 for auto");
}

} // namespace

int resolve_worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv(kThreadsEnvVar)) {
        const int value = std::atoi(env);
        if (value > 0) return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ReplicateOutcome run_replicate(const PowerJob& job, int n, int m, int replicate) {
    RandomStream stream(replicate_key(job.grid.seed, n, m, replicate));
    ReplicateOutcome out;
    try {
        if (const auto* anova = std::get_if<AnovaParams>(&job.model)) {
            const auto data = gen_anova(n, m, *anova, stream);
            const LmmFit fit = fit_lmm(data);
            out.converged = fit.converged;
            if (fit.converged) out.rejected = wald_test_lmm(fit, job.grid.alpha, job.lmm_reference);
        } else {
            const auto& params = std::get<FrailtyParams>(job.model);
            const auto data = gen_frailty(n, m, params, stream);
            out.censoring_fraction = data.censoring_fraction();
            FrailtyFitOptions options;
            options.quad_points = job.quad_points;
            const FrailtyFit fit = fit_frailty(data, options);
            out.converged = fit.converged;
            if (fit.converged) out.rejected = wald_test_frailty(fit, job.grid.alpha);
        }
    } catch (const FitError&) {
        out.converged = false;
        out.rejected = false;
    }
    return out;
}

PowerTable run_power_grid(const PowerJob& job, const ProgressCallback& progress,
                          const WarningCallback& warn) {
    validate_job(job);
    const DesignGrid& grid = job.grid;
    std::vector<Cell> cells;
    for (int n : grid.n_values)
        for (int m : grid.m_values) cells.push_back({n, m});

    const std::size_t sim = static_cast<std::size_t>(grid.sim);
    const std::size_t total_tasks = cells.size() * sim;
    std::vector<ReplicateOutcome> outcomes(total_tasks);
    std::vector<std::atomic<int>> remaining(cells.size());
    for (auto& r : remaining) r.store(grid.sim);

    std::atomic<std::size_t> next{0};
    std::atomic<int> cells_done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total_tasks || failed.load()) return;
            const std::size_t cell = task / sim;
            const int replicate = static_cast<int>(task % sim) + 1;
            try {
                outcomes[task] = run_replicate(job, cells[cell].n, cells[cell].m, replicate);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
            if (remaining[cell].fetch_sub(1) == 1) {
                const int done = cells_done.fetch_add(1) + 1;
                if (progress) progress(done, static_cast<int>(cells.size()));
            }
        }
    };

    const int workers = std::min<int>(resolve_worker_count(job.worker_count),
                                      static_cast<int>(std::max<std::size_t>(total_tasks, 1)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    PowerTable table{grid, job.model, {}};
    const bool frailty = is_frailty(job.model);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::size_t converged = 0, rejected = 0;
        double censoring = 0.0;
        for (std::size_t r = 0; r < sim; ++r) {
            const auto& o = outcomes[c * sim + r];
            converged += o.converged ? 1 : 0;
            rejected += o.rejected ? 1 : 0;
            censoring += o.censoring_fraction;
        }
        PowerRow row;
        row.n = cells[c].n;
        row.m = cells[c].m;
        row.total_animals = 2 * row.n * row.m;
        row.convergence_rate = 100.0 * static_cast<double>(converged) / static_cast<double>(sim);
        row.power = converged == 0 ? 0.0
                                   : 100.0 * static_cast<double>(rejected) / static_cast<double>(converged);
        if (frailty) row.avg_censoring_rate = 100.0 * censoring / static_cast<double>(sim);

        if (row.convergence_rate < 50.0) {
            std::ostringstream msg;
            msg << "cell n=" << row.n << " m=" << row.m << " converged in only "
                << row.convergence_rate << "% of replicates";
            throw EngineError(msg.str());
        }
        if (row.convergence_rate < 99.0 && warn) {
            std::ostringstream msg;
            msg << "cell n=" << row.n << " m=" << row.m << ": convergence rate "
                << row.convergence_rate << "% is below 99%";
            warn(msg.str());
        }
        table.rows.push_back(row);
    }
    return table;
}

std::vector<std::pair<int, int>> minimal_designs(const PowerTable& table, double target_power) {
    const double threshold = 100.0 * target_power;
    std::vector<std::pair<int, int>> qualifying;
    for (const auto& row : table.rows) {
        if (row.power >= threshold) qualifying.emplace_back(row.n, row.m);
    }
    std::vector<std::pair<int, int>> frontier;
    for (const auto& cand : qualifying) {
        const bool dominated = std::any_of(qualifying.begin(), qualifying.end(), [&](const auto& other) {
            return other != cand && other.first <= cand.first && other.second <= cand.second;
        });
        if (!dominated) frontier.push_back(cand);
    }
    std::sort(frontier.begin(), frontier.end());
    return frontier;
}

} // namespace xenopower
