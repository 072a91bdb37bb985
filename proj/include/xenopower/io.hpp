#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xenopower/core.hpp"

namespace xenopower {

/// Malformed or missing input files.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Frontier = std::vector<std::pair<int, int>>;

/// Header ID,Y,Tx[,status], matched case-insensitively in any column order.
PilotDataset read_pilot_csv(const std::filesystem::path& path);
PilotDataset parse_pilot_csv(std::istream& in);

/// n,m,N,power_pct,convergence_pct[,censoring_pct] at full precision.
void write_power_csv(std::ostream& out, const PowerTable& table);
std::vector<PowerRow> parse_power_csv(std::istream& in);

/// {"params": {...}, "rows": [...], "frontier": [[n,m],...], "seed": ...}
std::string power_json(const PowerTable& table, double target_power, const Frontier& frontier);

struct PowerReport {
    PowerTable table;
    double target_power = 0.8;
    Frontier frontier;
};

PowerReport parse_power_json(const std::string& text);

/// Header echo, the per-cell table, and the minimal-design frontier.
std::string format_report(const PowerTable& table, double target_power, const Frontier& frontier);

/// Deterministic SVG line chart: power against m, one series per n, with a
/// dashed reference line at the target. Throws ValidationError on bad input.
std::string render_power_plot(const std::vector<PowerRow>& rows, double target_power,
                              std::pair<double, double> y_range = {0.0, 1.0});

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

} // namespace xenopower
