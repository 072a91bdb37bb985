#include "xenopower/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace xenopower {

namespace {

void require(bool cond, const std::string& message) {
    if (!cond) throw ValidationError(message);
}

void check_axis(const std::vector<int>& values, const char* name, int min_value) {
    require(!values.empty(), std::string(name) + " must not be empty");
    for (int v : values) {
        require(v >= min_value, std::string(name) + " values must be >= " +
                                    std::to_string(min_value) + " (got " +
                                    std::to_string(v) + ")");
    }
    for (std::size_t k = 1; k < values.size(); ++k) {
        require(values[k] > values[k - 1],
                std::string(name) + " must be strictly ascending without duplicates");
    }
}

} // namespace

DesignGrid validate_grid(DesignGrid grid) {
    check_axis(grid.n_values, "n_values", 2);
    check_axis(grid.m_values, "m_values", 1);
    require(grid.sim >= 1, "sim must be at least 1");
    require(grid.alpha > 0.0 && grid.alpha < 1.0, "alpha must lie strictly between 0 and 1");
    return grid;
}

void validate(const AnovaParams& p) {
    require(std::isfinite(p.beta0), "beta0 must be finite");
    require(std::isfinite(p.beta), "beta must be finite");
    require(std::isfinite(p.tau2) && p.tau2 >= 0.0, "tau2 must be nonnegative");
    require(std::isfinite(p.sigma2) && p.sigma2 > 0.0, "sigma2 must be positive");
}

void validate(const FrailtyParams& p) {
    require(std::isfinite(p.lambda) && p.lambda > 0.0, "lambda must be positive");
    require(std::isfinite(p.nu) && p.nu > 0.0, "nu must be positive");
    require(std::isfinite(p.beta), "beta must be finite");
    require(std::isfinite(p.tau2) && p.tau2 >= 0.0, "tau2 must be nonnegative");
    if (p.censor) require(p.ct > 0.0, "censor time ct must be positive when censoring is on");
}

PilotDataset::PilotDataset(std::vector<PilotRow> rows) : rows_(std::move(rows)) {
    require(!rows_.empty(), "no data rows");
    bool control = false;
    bool treated = false;
    const bool with_status = rows_.front().status.has_value();
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        const auto& r = rows_[k];
        const std::string where = " at row " + std::to_string(k + 1);
        require(std::isfinite(r.y) && r.y > 0.0, "Y must be positive" + where);
        require(r.tx == 0 || r.tx == 1, "Tx must be 0 or 1" + where);
        require(r.status.has_value() == with_status, "status must be given for every row or none");
        if (r.status) require(*r.status == 0 || *r.status == 1, "status must be 0 or 1" + where);
        (r.tx == 0 ? control : treated) = true;
    }
    require(line_ids().size() >= 2, "pilot data needs at least 2 distinct line ids");
    require(control && treated, "pilot data needs both treatment arms");
}

bool PilotDataset::has_status() const { return rows_.front().status.has_value(); }

std::vector<std::string> PilotDataset::line_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : rows_) {
        if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
    }
    return ids;
}

double SurvivalSample::censoring_fraction() const {
    if (records.empty()) return 0.0;
    std::size_t censored = 0;
    for (const auto& r : records) censored += r.status == 0 ? 1 : 0;
    return static_cast<double>(censored) / static_cast<double>(records.size());
}

SurvivalSample to_sample(const PilotDataset& pilot) {
    std::unordered_map<std::string, int> index;
    SurvivalSample sample;
    sample.records.reserve(pilot.size());
    for (const auto& r : pilot.rows()) {
        auto [it, inserted] = index.try_emplace(r.id, static_cast<int>(index.size()) + 1);
        sample.records.push_back({it->second, r.tx, r.y, r.status.value_or(1)});
    }
    sample.n_lines = static_cast<int>(index.size());
    return sample;
}

} // namespace xenopower
