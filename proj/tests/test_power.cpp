#include <doctest.h>

#include <cstdlib>
#include <mutex>
#include <random>

#include "test_util.hpp"
#include "xenopower/elicitation.hpp"
#include "xenopower/power.hpp"

using namespace xenopower;

namespace {

// Reference power table for the animals1 pilot, n = 3..10 by m = 2..8.
constexpr double kReferencePower[8][7] = {
    {49.6, 67.0, 77.4, 87.2, 94.2, 96.0, 98.2},   {64.6, 79.6, 88.0, 96.0, 98.2, 99.4, 99.8},
    {72.6, 86.8, 94.8, 98.6, 99.2, 99.8, 100.0},  {80.4, 92.8, 97.4, 99.8, 100.0, 100.0, 100.0},
    {85.6, 96.2, 99.4, 100.0, 100.0, 100.0, 100.0}, {89.0, 98.4, 100.0, 100.0, 100.0, 100.0, 100.0},
    {92.2, 98.8, 99.8, 100.0, 100.0, 100.0, 100.0}, {95.8, 99.4, 99.8, 100.0, 100.0, 100.0, 100.0},
};

PowerTable table_from(const std::vector<int>& ns, const std::vector<int>& ms, auto power_of) {
    PowerTable t;
    t.grid.n_values = ns;
    t.grid.m_values = ms;
    for (int n : ns)
        for (int m : ms) t.rows.push_back({n, m, 2 * n * m, power_of(n, m), 100.0, {}});
    return t;
}

PowerJob anova_job(std::vector<int> ns, std::vector<int> ms, int sim, AnovaParams p) {
    PowerJob job;
    job.grid.n_values = std::move(ns);
    job.grid.m_values = std::move(ms);
    job.grid.sim = sim;
    job.model = p;
    return job;
}

PowerJob frailty_job(std::vector<int> ns, std::vector<int> ms, int sim, FrailtyParams p) {
    PowerJob job;
    job.grid.n_values = std::move(ns);
    job.grid.m_values = std::move(ms);
    job.grid.sim = sim;
    job.model = p;
    return job;
}

bool same_rows(const PowerTable& a, const PowerTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        const auto &x = a.rows[k], &y = b.rows[k];
        if (x.n != y.n || x.m != y.m || x.power != y.power || x.convergence_rate != y.convergence_rate ||
            x.avg_censoring_rate != y.avg_censoring_rate)
            return false;
    }
    return true;
}

const FrailtyParams kMedianFrailty{0.2888113, 1.0, -1.098612, 0.1, true, 12.0};

} // namespace

TEST_CASE("frontier of the reference table uses the strict threshold") {
    const auto t = table_from({3, 4, 5, 6, 7, 8, 9, 10}, {2, 3, 4, 5, 6, 7, 8},
                              [](int n, int m) { return kReferencePower[n - 3][m - 2]; });
    const std::vector<std::pair<int, int>> expected = {{3, 5}, {4, 4}, {5, 3}, {6, 2}};
    CHECK(minimal_designs(t, 0.8) == expected);
    for (const auto& row : t.rows) CHECK(row.total_animals == 2 * row.n * row.m);
}

TEST_CASE("frontier edge cases") {
    const auto full = table_from({3, 4, 5}, {2, 3}, [](int, int) { return 100.0; });
    CHECK(minimal_designs(full, 0.8) == std::vector<std::pair<int, int>>{{3, 2}});
    const auto none = table_from({3, 4, 5}, {2, 3}, [](int, int) { return 0.0; });
    CHECK(minimal_designs(none, 0.8).empty());
    // exactly at the threshold qualifies; just below does not
    const auto edge = table_from({3, 4}, {2, 3}, [](int n, int m) { return n == 4 && m == 2 ? 80.0 : 79.99; });
    CHECK(minimal_designs(edge, 0.8) == std::vector<std::pair<int, int>>{{4, 2}});
}

TEST_CASE("frontier soundness on random tables") {
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = table_from({2, 3, 5, 8}, {1, 2, 4, 6, 9}, [&](int, int) { return u(gen); });
        const double target = 0.5;
        const auto frontier = minimal_designs(t, target);
        auto power_at = [&](std::pair<int, int> c) {
            for (const auto& r : t.rows)
                if (r.n == c.first && r.m == c.second) return r.power;
            return -1.0;
        };
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            CHECK(power_at(frontier[i]) >= 100.0 * target);
            if (i > 0) CHECK(frontier[i].first > frontier[i - 1].first);
            for (std::size_t j = 0; j < frontier.size(); ++j) {
                if (i == j) continue;
                CHECK_FALSE((frontier[j].first <= frontier[i].first && frontier[j].second <= frontier[i].second));
            }
        }
        // every qualifying cell is covered by a frontier cell
        for (const auto& r : t.rows) {
            if (r.power < 100.0 * target) continue;
            bool covered = false;
            for (const auto& f : frontier) covered |= f.first <= r.n && f.second <= r.m;
            CHECK(covered);
        }
    }
}

TEST_CASE("results do not depend on the worker count") {
    const auto p = elicit_anova_from_medians(2.4, 7.2);
    auto job = anova_job({3, 4, 5}, {2, 3, 4}, 200, p);
    job.worker_count = 1;
    const auto one = run_power_grid(job);
    for (int workers : {2, 8}) {
        job.worker_count = workers;
        CHECK(same_rows(one, run_power_grid(job)));
    }

    auto fjob = frailty_job({3, 4}, {2, 3}, 40, kMedianFrailty);
    fjob.worker_count = 1;
    const auto fone = run_power_grid(fjob);
    fjob.worker_count = 8;
    CHECK(same_rows(fone, run_power_grid(fjob)));
}

TEST_CASE("table layout and counting identity") {
    const auto job = frailty_job({3, 5}, {2, 4}, 100, kMedianFrailty);
    const auto t = run_power_grid(job);
    REQUIRE(t.rows.size() == 4);
    const std::vector<std::pair<int, int>> order = {{3, 2}, {3, 4}, {5, 2}, {5, 4}};
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        const auto& row = t.rows[k];
        CHECK(std::make_pair(row.n, row.m) == order[k]);
        CHECK(row.total_animals == 2 * row.n * row.m);
        CHECK(row.power >= 0.0);
        CHECK(row.power <= 100.0);
        REQUIRE(row.avg_censoring_rate.has_value());

        int converged = 0, rejected = 0, accepted = 0;
        double censoring = 0.0;
        for (int r = 1; r <= job.grid.sim; ++r) {
            const auto o = run_replicate(job, row.n, row.m, r);
            if (o.rejected) CHECK(o.converged);
            converged += o.converged;
            rejected += o.converged && o.rejected;
            accepted += o.converged && !o.rejected;
            censoring += o.censoring_fraction;
        }
        CHECK(rejected + accepted == converged);
        CHECK(row.convergence_rate == 100.0 * converged / job.grid.sim);
        CHECK(row.power == doctest::Approx(100.0 * rejected / converged).epsilon(1e-15));
        CHECK(*row.avg_censoring_rate == doctest::Approx(100.0 * censoring / job.grid.sim).epsilon(1e-12));
    }
    const auto anova = run_power_grid(anova_job({3}, {2}, 10, elicit_anova_from_medians(2.4, 7.2)));
    CHECK_FALSE(anova.rows[0].avg_censoring_rate.has_value());
}

TEST_CASE("ANOVA power matches the reference small cell") {
    const auto pilot = elicit_anova_from_pilot(read_pilot_csv(testutil::data_path("animals1.csv")));
    const auto t = run_power_grid(anova_job({3}, {2}, 2000, pilot));
    CHECK(std::fabs(t.rows[0].power - 49.6) <= 4.5);
    CHECK(t.rows[0].convergence_rate == 100.0);
}

TEST_CASE("ANOVA null power is near nominal in every cell") {
    const auto t = run_power_grid(anova_job({3, 5, 10}, {3, 5, 8}, 2000, AnovaParams{5.0, 0.0, 0.2, 0.5}));
    for (const auto& row : t.rows) {
        INFO("n=" << row.n << " m=" << row.m);
        CHECK(std::fabs(row.power - 5.0) <= 1.5);
    }
}

TEST_CASE("power is monotone in n and m up to Monte Carlo noise") {
    const auto check_monotone = [](const PowerTable& t) {
        for (const auto& a : t.rows)
            for (const auto& b : t.rows) {
                if ((b.n > a.n && b.m == a.m) || (b.m > a.m && b.n == a.n)) {
                    INFO("(" << a.n << "," << a.m << ") -> (" << b.n << "," << b.m << ")");
                    CHECK(b.power >= a.power - 3.5);
                }
            }
    };
    check_monotone(run_power_grid(anova_job({3, 4, 5, 6}, {2, 3, 4, 5}, 2000, AnovaParams{0.0, 0.5, 0.2, 1.0})));
    check_monotone(run_power_grid(frailty_job({3, 5}, {2, 4}, 2000, kMedianFrailty)));
}

TEST_CASE("engine failure when no cell can be fitted") {
    // Censoring at a tiny time leaves no events.
    const FrailtyParams p{0.3, 1.0, -1.0, 0.1, true, 1e-6};
    CHECK_THROWS_AS(run_power_grid(frailty_job({3}, {2}, 20, p)), EngineError);
}

TEST_CASE("low convergence raises a warning") {
    // One animal per arm per line: some replicates have no treated events.
    const FrailtyParams p{0.2888113, 1.0, -1.098612, 0.1, true, 12.0};
    std::vector<std::string> warnings;
    const auto t = run_power_grid(frailty_job({3}, {1}, 400, p), {},
                                  [&](const std::string& w) { warnings.push_back(w); });
    REQUIRE(t.rows.size() == 1);
    INFO("convergence " << t.rows[0].convergence_rate);
    CHECK(t.rows[0].convergence_rate < 99.0);
    CHECK(t.rows[0].convergence_rate >= 50.0);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("n=3 m=1") != std::string::npos);
}

TEST_CASE("progress callback counts every cell once") {
    auto job = anova_job({3, 4}, {2, 3, 4}, 50, elicit_anova_from_medians(2.4, 7.2));
    job.worker_count = 4;
    std::mutex mu;
    std::vector<int> seen;
    int reported_total = 0;
    run_power_grid(job, [&](int done, int total) {
        std::lock_guard lock(mu);
        seen.push_back(done);
        reported_total = total;
    });
    CHECK(reported_total == 6);
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("job validation and worker resolution") {
    auto job = anova_job({3}, {2}, 10, elicit_anova_from_medians(2.4, 7.2));
    job.target_power = 0.0;
    CHECK_THROWS_AS(run_power_grid(job), ValidationError);
    job.target_power = 0.8;
    job.grid.alpha = 1.5;
    CHECK_THROWS_AS(run_power_grid(job), ValidationError);
    job.grid.alpha = 0.05;
    job.model = AnovaParams{0.0, 0.0, -1.0, 1.0};
    CHECK_THROWS_AS(run_power_grid(job), ValidationError);

    CHECK(resolve_worker_count(3) == 3);
    setenv(kThreadsEnvVar, "5", 1);
    CHECK(resolve_worker_count(0) == 5);
    setenv(kThreadsEnvVar, "junk", 1);
    CHECK(resolve_worker_count(0) >= 1);
    unsetenv(kThreadsEnvVar);
    CHECK(resolve_worker_count(0) >= 1);
}
