#include "xenopower/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace xenopower {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    s = s.substr(begin, end - begin + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            current += c;
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(trim(current));
    return fields;
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
    return v;
}

std::optional<int> to_int(const std::string& s) {
    const auto v = to_double(s);
    if (!v || *v != static_cast<int>(*v)) return std::nullopt;
    return static_cast<int>(*v);
}

const char* model_name(const ModelSpec& model) { return is_frailty(model) ? "frailty" : "anova"; }

json params_json(const PowerTable& table, double target_power) {
    json p;
    p["model"] = model_name(table.model);
    if (const auto* a = std::get_if<AnovaParams>(&table.model)) {
        p["beta0"] = a->beta0;
        p["beta"] = a->beta;
        p["tau2"] = a->tau2;
        p["sigma2"] = a->sigma2;
        p["icc"] = a->icc();
    } else {
        const auto& f = std::get<FrailtyParams>(table.model);
        p["lambda"] = f.lambda;
        p["nu"] = f.nu;
        p["beta"] = f.beta;
        p["tau2"] = f.tau2;
        p["censor"] = f.censor;
        p["ct"] = f.ct;
    }
    p["n_values"] = table.grid.n_values;
    p["m_values"] = table.grid.m_values;
    p["sim"] = table.grid.sim;
    p["alpha"] = table.grid.alpha;
    p["target_power"] = target_power;
    return p;
}

std::string fixed(double v, int decimals) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
    return buf.data();
}

std::string sig7(double v) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.7g", v);
    return buf.data();
}

} // namespace

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

PilotDataset parse_pilot_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!blank(line)) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw DataError("no data rows");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);

    std::optional<std::size_t> col_id, col_y, col_tx, col_status;
    for (std::size_t k = 0; k < header.size(); ++k) {
        const auto name = lower(header[k]);
        if (name == "id") col_id = k;
        else if (name == "y") col_y = k;
        else if (name == "tx") col_tx = k;
        else if (name == "status") col_status = k;
    }
    if (!col_id || !col_y || !col_tx) throw DataError("header must contain ID, Y and Tx columns");

    std::vector<PilotRow> rows;
    int row_number = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row_number;
        const auto fields = split_csv_line(line);
        const std::string where = " at row " + std::to_string(row_number);
        if (fields.size() != header.size()) {
            throw DataError("expected " + std::to_string(header.size()) + " fields" + where);
        }
        PilotRow row;
        row.id = fields[*col_id];
        if (row.id.empty()) throw DataError("empty ID" + where);
        const auto y = to_double(fields[*col_y]);
        if (!y) throw DataError("cannot parse Y value '" + fields[*col_y] + "'" + where);
        row.y = *y;
        const auto tx = to_int(fields[*col_tx]);
        if (!tx) throw DataError("cannot parse Tx value '" + fields[*col_tx] + "'" + where);
        row.tx = *tx;
        if (col_status) {
            const auto status = to_int(fields[*col_status]);
            if (!status) throw DataError("cannot parse status value '" + fields[*col_status] + "'" + where);
            row.status = *status;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("no data rows");
    try {
        return PilotDataset(std::move(rows));
    } catch (const ValidationError& e) {
        throw DataError(e.what());
    }
}

PilotDataset read_pilot_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    return parse_pilot_csv(in);
}

void write_power_csv(std::ostream& out, const PowerTable& table) {
    const bool censoring = is_frailty(table.model);
    out << "n,m,N,power_pct,convergence_pct" << (censoring ? ",censoring_pct" : "") << '\n';
    for (const auto& r : table.rows) {
        out << r.n << ',' << r.m << ',' << r.total_animals << ',' << format_double(r.power) << ','
            << format_double(r.convergence_rate);
        if (censoring) out << ',' << format_double(r.avg_censoring_rate.value_or(0.0));
        out << '\n';
    }
}

std::vector<PowerRow> parse_power_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty power table");
    const auto header = split_csv_line(line);
    const bool censoring = header.size() == 6;
    if (header.size() < 5 || header[0] != "n" || header[3] != "power_pct") {
        throw DataError("unrecognized power table header");
    }
    std::vector<PowerRow> rows;
    int row_number = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row_number;
        const auto f = split_csv_line(line);
        const std::string where = " at row " + std::to_string(row_number);
        if (f.size() != header.size()) throw DataError("wrong field count" + where);
        const auto n = to_int(f[0]);
        const auto m = to_int(f[1]);
        const auto total = to_int(f[2]);
        const auto power = to_double(f[3]);
        const auto conv = to_double(f[4]);
        if (!n || !m || !total || !power || !conv) throw DataError("cannot parse power row" + where);
        PowerRow row{*n, *m, *total, *power, *conv, std::nullopt};
        if (censoring) {
            const auto cens = to_double(f[5]);
            if (!cens) throw DataError("cannot parse censoring value" + where);
            row.avg_censoring_rate = *cens;
        }
        rows.push_back(row);
    }
    return rows;
}

std::string power_json(const PowerTable& table, double target_power, const Frontier& frontier) {
    json doc;
    doc["params"] = params_json(table, target_power);
    json rows = json::array();
    for (const auto& r : table.rows) {
        json row{{"n", r.n}, {"m", r.m}, {"N", r.total_animals}, {"power", r.power},
                 {"convergence", r.convergence_rate}};
        if (r.avg_censoring_rate) row["censoring"] = *r.avg_censoring_rate;
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    json front = json::array();
    for (const auto& [n, m] : frontier) front.push_back({n, m});
    doc["frontier"] = std::move(front);
    doc["seed"] = table.grid.seed;
    return doc.dump(2) + "\n";
}

PowerReport parse_power_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        const json& p = doc.at("params");
        PowerReport report;
        PowerTable& table = report.table;
        if (p.at("model") == "anova") {
            table.model = AnovaParams{p.at("beta0").get<double>(), p.at("beta").get<double>(),
                                      p.at("tau2").get<double>(), p.at("sigma2").get<double>()};
        } else if (p.at("model") == "frailty") {
            FrailtyParams f;
            f.lambda = p.at("lambda").get<double>();
            f.nu = p.at("nu").get<double>();
            f.beta = p.at("beta").get<double>();
            f.tau2 = p.at("tau2").get<double>();
            f.censor = p.at("censor").get<bool>();
            f.ct = p.at("ct").get<double>();
            table.model = f;
        } else {
            throw DataError("unknown model kind in power report");
        }
        table.grid.n_values = p.at("n_values").get<std::vector<int>>();
        table.grid.m_values = p.at("m_values").get<std::vector<int>>();
        table.grid.sim = p.at("sim").get<int>();
        table.grid.alpha = p.at("alpha").get<double>();
        table.grid.seed = doc.at("seed").get<std::uint64_t>();
        report.target_power = p.at("target_power").get<double>();
        for (const auto& r : doc.at("rows")) {
            PowerRow row{r.at("n").get<int>(), r.at("m").get<int>(), r.at("N").get<int>(),
                         r.at("power").get<double>(), r.at("convergence").get<double>(), std::nullopt};
            if (r.contains("censoring")) row.avg_censoring_rate = r.at("censoring").get<double>();
            table.rows.push_back(row);
        }
        for (const auto& f : doc.at("frontier")) {
            report.frontier.emplace_back(f.at(0).get<int>(), f.at(1).get<int>());
        }
        return report;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed power report: ") + e.what());
    }
}

std::string format_report(const PowerTable& table, double target_power, const Frontier& frontier) {
    std::ostringstream out;
    const bool frailty = is_frailty(table.model);
    if (const auto* a = std::get_if<AnovaParams>(&table.model)) {
        out << "Model: mixed effects ANOVA on log(Y)\n"
            << "Intercept (beta0): " << sig7(a->beta0) << '\n'
            << "Treatment effect (beta): " << sig7(a->beta) << '\n'
            << "Variance of random effect (tau2): " << sig7(a->tau2) << '\n'
            << "Intra-PDX correlation coefficient (icc): " << sig7(a->icc()) << '\n'
            << "Random error variance (sigma2): " << sig7(a->sigma2) << '\n';
    } else {
        const auto& f = std::get<FrailtyParams>(table.model);
        out << "Model: Weibull frailty (normal random effect)\n"
            << "Treatment effect (beta): " << sig7(f.beta) << '\n'
            << "Scale parameter (lambda): " << sig7(f.lambda) << '\n'
            << "Shape parameter (nu): " << sig7(f.nu) << '\n'
            << "Variance of random effect (tau2): " << sig7(f.tau2) << '\n'
            << "Censoring time (Ct): " << (f.censor ? sig7(f.ct) : std::string("none")) << '\n';
    }
    out << "Monte Carlo replicates (sim): " << table.grid.sim << '\n'
        << "Significance level (alpha): " << sig7(table.grid.alpha) << '\n'
        << "Seed: " << table.grid.seed << "\n\n";

    out << "Power = percentage of converged replicates rejecting H0: beta = 0\n"
        << "(n = PDX lines, m = animals per arm per line, N = 2*n*m)\n";
    std::array<char, 128> buf{};
    std::snprintf(buf.data(), buf.size(), "%4s %4s %5s %9s", "n", "m", "N", "Power(%)");
    out << buf.data();
    if (frailty) out << "  Censoring Rate(%)";
    out << '\n';
    bool any_failures = false;
    for (const auto& r : table.rows) {
        std::snprintf(buf.data(), buf.size(), "%4d %4d %5d %9s", r.n, r.m, r.total_animals,
                      fixed(r.power, 1).c_str());
        out << buf.data();
        if (frailty) {
            std::snprintf(buf.data(), buf.size(), "  %17s", fixed(r.avg_censoring_rate.value_or(0.0), 2).c_str());
            out << buf.data();
        }
        out << '\n';
        any_failures = any_failures || r.convergence_rate < 100.0;
    }
    if (any_failures) {
        out << "\nConvergence rate (%) per cell:\n";
        for (const auto& r : table.rows) {
            std::snprintf(buf.data(), buf.size(), "%4d %4d %9s\n", r.n, r.m, fixed(r.convergence_rate, 1).c_str());
            out << buf.data();
        }
    }

    out << "\nMinimal designs (n, m) reaching " << fixed(100.0 * target_power, 1) << "% power:";
    if (frontier.empty()) {
        out << " none in this grid; consider larger n or m\n";
    } else {
        for (const auto& [n, m] : frontier) out << " (" << n << ", " << m << ")";
        out << '\n';
    }
    return out.str();
}

} // namespace xenopower
