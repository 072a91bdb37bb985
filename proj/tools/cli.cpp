#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "xenopower/elicitation.hpp"
#include "xenopower/io.hpp"
#include "xenopower/power.hpp"

namespace xenopower::cli {

namespace {

struct SharedFlags {
    std::string n = "3:10";
    std::string m = "2:8";
    int sim = 500;
    double alpha = 0.05;
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;
    double target_power = kDefaultTargetPower;
    std::string out_csv;
    std::string out_json;
    std::string plot;
    std::string ylim = "0:1";
    bool progress = false;
};

struct ModelFlags {
    double ctl_med = 0.0;
    double tx_med = 0.0;
    double icc = kDefaultIcc;
    double sigma2 = kDefaultSigma2;
    double nu = kDefaultNu;
    double tau2 = kDefaultTau2;
    double censor_time = 0.0;
    std::string data;
    bool z_test = false;
    int quad_points = 15;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
    cmd->add_option("--n", f.n, "PDX line counts, A:B or a,b,c")->capture_default_str();
    cmd->add_option("--m", f.m, "Animals per arm per line, A:B or a,b,c")->capture_default_str();
    cmd->add_option("--sim", f.sim, "Monte Carlo replicates per cell")->capture_default_str();
    cmd->add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", f.threads,
                    std::string("Worker threads (0 = auto; env ") + kThreadsEnvVar + ")")
        ->capture_default_str();
    cmd->add_option("--target-power", f.target_power, "Target power for the minimal designs")
        ->capture_default_str();
    cmd->add_option("--out-csv", f.out_csv, "Write the power table as CSV");
    cmd->add_option("--out-json", f.out_json, "Write the full report as JSON");
    cmd->add_option("--plot", f.plot, "Write an SVG power curve");
    cmd->add_option("--ylim", f.ylim, "Plot y range lo:hi")->capture_default_str();
    cmd->add_flag("--progress", f.progress, "Report completed cells on stderr");
}

std::pair<double, double> parse_ylim(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ValidationError("--ylim expects lo:hi");
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ValidationError("--ylim expects lo:hi");
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << content;
}

int execute(const ModelSpec& model, const SharedFlags& shared, const ModelFlags& flags,
            std::ostream& out, std::ostream& err) {
    PowerJob job;
    job.grid.n_values = parse_int_list(shared.n);
    job.grid.m_values = parse_int_list(shared.m);
    job.grid.sim = shared.sim;
    job.grid.alpha = shared.alpha;
    job.grid.seed = shared.seed;
    job.grid = validate_grid(job.grid);
    job.model = model;
    job.target_power = shared.target_power;
    job.worker_count = shared.threads;
    job.lmm_reference = flags.z_test ? WaldReference::normal : WaldReference::student_t;
    job.quad_points = flags.quad_points;
    const auto ylim = parse_ylim(shared.ylim);

    std::mutex io_mutex;
    ProgressCallback progress;
    if (shared.progress) {
        progress = [&](int done, int total) {
            std::lock_guard lock(io_mutex);
            err << "progress: " << done << "/" << total << " cells\n";
        };
    }
    WarningCallback warn = [&](const std::string& message) {
        std::lock_guard lock(io_mutex);
        err << "warning: " << message << '\n';
    };

    PowerTable table;
    try {
        table = run_power_grid(job, progress, warn);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kEngineError;
    }
    const auto frontier = minimal_designs(table, job.target_power);
    out << format_report(table, job.target_power, frontier);

    if (!shared.out_csv.empty()) {
        std::ostringstream csv;
        write_power_csv(csv, table);
        write_file(shared.out_csv, csv.str());
    }
    if (!shared.out_json.empty()) write_file(shared.out_json, power_json(table, job.target_power, frontier));
    if (!shared.plot.empty()) write_file(shared.plot, render_power_plot(table.rows, job.target_power, ylim));
    return kOk;
}

int plot_command(const std::string& table_path, const std::string& out_path, double target,
                 const std::string& ylim) {
    std::ifstream in(table_path);
    if (!in) throw DataError("cannot open power table " + table_path);
    std::vector<PowerRow> rows;
    if (table_path.size() >= 5 && table_path.substr(table_path.size() - 5) == ".json") {
        std::stringstream buffer;
        buffer << in.rdbuf();
        rows = parse_power_json(buffer.str()).table.rows;
    } else {
        rows = parse_power_csv(in);
    }
    write_file(out_path, render_power_plot(rows, target, parse_ylim(ylim)));
    return kOk;
}

} // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    auto parse_one = [&](const std::string& s) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(s, &used);
        } catch (const std::exception&) {
            throw ValidationError("cannot parse integer list '" + text + "'");
        }
        if (used != s.size()) throw ValidationError("cannot parse integer list '" + text + "'");
        return v;
    };
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const int a = parse_one(text.substr(0, colon));
        const int b = parse_one(text.substr(colon + 1));
        if (b < a) throw ValidationError("range '" + text + "' is empty");
        for (int v = a; v <= b; ++v) values.push_back(v);
        return values;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_one(item));
    if (values.empty()) throw ValidationError("empty integer list");
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
        throw ValidationError("integer list '" + text + "' contains duplicates");
    }
    return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte Carlo power and sample size for PDX experiments"};
    app.name("xenopower");
    app.require_subcommand(1);

    SharedFlags shared;
    ModelFlags flags;

    auto* anova = app.add_subcommand("pow-anova", "Power for log-normal outcomes from assumed medians");
    add_shared(anova, shared);
    anova->add_option("--ctl-med", flags.ctl_med, "Median survival, control arm")->required();
    anova->add_option("--tx-med", flags.tx_med, "Median survival, treatment arm")->required();
    anova->add_option("--icc", flags.icc, "Intra-PDX correlation coefficient")->capture_default_str();
    anova->add_option("--sigma2", flags.sigma2, "Residual variance of log survival")->capture_default_str();
    anova->add_flag("--z-test", flags.z_test, "Use a normal reference instead of Student-t");

    auto* frailty = app.add_subcommand("pow-frailty", "Power for censored outcomes from assumed medians");
    add_shared(frailty, shared);
    frailty->add_option("--ctl-med", flags.ctl_med, "Median survival, control arm")->required();
    frailty->add_option("--tx-med", flags.tx_med, "Median survival, treatment arm")->required();
    frailty->add_option("--nu", flags.nu, "Weibull shape")->capture_default_str();
    frailty->add_option("--tau2", flags.tau2, "Frailty variance")->capture_default_str();
    auto* frailty_ct = frailty->add_option("--censor-time", flags.censor_time, "Administrative censoring time");
    frailty->add_option("--quad-points", flags.quad_points, "Gauss-Hermite nodes")->capture_default_str();

    auto* anova_data = app.add_subcommand("pow-anova-data", "Power for log-normal outcomes from pilot data");
    add_shared(anova_data, shared);
    anova_data->add_option("--data", flags.data, "Pilot CSV with ID,Y,Tx")->required();
    anova_data->add_flag("--z-test", flags.z_test, "Use a normal reference instead of Student-t");

    auto* frailty_data = app.add_subcommand("pow-frailty-data", "Power for censored outcomes from pilot data");
    add_shared(frailty_data, shared);
    frailty_data->add_option("--data", flags.data, "Pilot CSV with ID,Y,Tx,status")->required();
    auto* frailty_data_ct =
        frailty_data->add_option("--censor-time", flags.censor_time, "Administrative censoring time");
    frailty_data->add_option("--quad-points", flags.quad_points, "Gauss-Hermite nodes")->capture_default_str();

    std::string table_path, plot_out;
    double plot_target = kDefaultTargetPower;
    std::string plot_ylim = "0:1";
    auto* plot = app.add_subcommand("plot", "Render a saved power table as an SVG power curve");
    plot->add_option("--table", table_path, "Power table (.csv or .json)")->required();
    plot->add_option("--out", plot_out, "Output SVG path")->required();
    plot->add_option("--target-power", plot_target, "Reference line")->capture_default_str();
    plot->add_option("--ylim", plot_ylim, "y range lo:hi")->capture_default_str();

    std::vector<const char*> argv;
    argv.push_back("xenopower");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        auto with_censoring = [&](FrailtyParams p, const CLI::Option* ct) {
            if (ct->count() > 0) {
                p.censor = true;
                p.ct = flags.censor_time;
            }
            return p;
        };
        if (anova->parsed()) {
            return execute(elicit_anova_from_medians(flags.ctl_med, flags.tx_med, flags.icc, flags.sigma2),
                           shared, flags, out, err);
        }
        if (frailty->parsed()) {
            return execute(with_censoring(elicit_frailty_from_medians(flags.ctl_med, flags.tx_med, flags.nu,
                                                                      flags.tau2),
                                          frailty_ct),
                           shared, flags, out, err);
        }
        if (anova_data->parsed()) {
            validate_grid({parse_int_list(shared.n), parse_int_list(shared.m), shared.sim, shared.alpha});
            AnovaParams params;
            try {
                params = elicit_anova_from_pilot(read_pilot_csv(flags.data));
            } catch (const ValidationError& e) {
                throw DataError(e.what());
            } catch (const FitError& e) {
                throw DataError(e.what());
            }
            out << "Parameter estimates based on the pilot data (" << flags.data << ")\n";
            return execute(params, shared, flags, out, err);
        }
        if (frailty_data->parsed()) {
            validate_grid({parse_int_list(shared.n), parse_int_list(shared.m), shared.sim, shared.alpha});
            FrailtyParams params;
            try {
                params = elicit_frailty_from_pilot(read_pilot_csv(flags.data));
            } catch (const ValidationError& e) {
                throw DataError(e.what());
            } catch (const FitError& e) {
                throw DataError(e.what());
            }
            out << "Parameter estimates based on the pilot data (" << flags.data << ")\n";
            return execute(with_censoring(params, frailty_data_ct), shared, flags, out, err);
        }
        return plot_command(table_path, plot_out, plot_target, plot_ylim);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kEngineError;
    }
}

} // namespace xenopower::cli
