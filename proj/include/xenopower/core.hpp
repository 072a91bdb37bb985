#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace xenopower {

/// Raised when user-supplied parameters or data violate a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a model fit cannot be used (e.g. testing a non-converged fit).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultSeed = 20240101ULL;

/// The (n, m) enumeration plus Monte Carlo settings.
///
/// n counts PDX lines, m counts animals per line per treatment arm, so every
/// cell of the grid implants 2*n*m animals.
struct DesignGrid {
    std::vector<int> n_values;
    std::vector<int> m_values;
    int sim = 500;
    double alpha = 0.05;
    std::uint64_t seed = kDefaultSeed;
};

/// Returns the grid unchanged, or throws ValidationError naming the field.
DesignGrid validate_grid(DesignGrid grid);

/// Log-normal outcome model: log Y = beta0 + tx*beta + a_line + e.
struct AnovaParams {
    double beta0 = 0.0;
    double beta = 0.0;
    double tau2 = 0.0;   // between-line variance
    double sigma2 = 1.0; // residual variance

    double icc() const { return tau2 / (tau2 + sigma2); }
};

void validate(const AnovaParams& params);

/// Weibull proportional hazards with a normal line frailty:
/// h(t) = lambda * nu * t^(nu-1) * exp(tx*beta + a_line), a_line ~ N(0, tau2).
struct FrailtyParams {
    double lambda = 1.0;
    double nu = 1.0;
    double beta = 0.0;
    double tau2 = 0.0;
    bool censor = false;
    double ct = 0.0; // administrative censoring time, used when censor is set
};

void validate(const FrailtyParams& params);

struct PilotRow {
    std::string id;
    double y = 0.0;
    int tx = 0;
    std::optional<int> status;
};

/// Pilot data as read from disk. Line identifiers are opaque labels.
class PilotDataset {
public:
    /// Throws ValidationError if rows break the dataset invariants.
    explicit PilotDataset(std::vector<PilotRow> rows);

    const std::vector<PilotRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool has_status() const;
    /// Distinct line ids in order of first appearance.
    std::vector<std::string> line_ids() const;

private:
    std::vector<PilotRow> rows_;
};

/// One animal. `line` is 1-based and contiguous within a sample.
struct AnimalRecord {
    int line = 1;
    int tx = 0;
    double y = 0.0;
    int status = 1; // 1 = event observed
};

/// Clustered (possibly right-censored) sample, the common input of both fits.
struct SurvivalSample {
    int n_lines = 0;
    std::vector<AnimalRecord> records;

    double censoring_fraction() const;
};

/// Maps opaque pilot line ids onto 1..G in order of first appearance.
SurvivalSample to_sample(const PilotDataset& pilot);

struct ReplicateOutcome {
    bool rejected = false;
    bool converged = false;
    double censoring_fraction = 0.0;
};

using ModelSpec = std::variant<AnovaParams, FrailtyParams>;

inline bool is_frailty(const ModelSpec& model) {
    return std::holds_alternative<FrailtyParams>(model);
}

/// Percentages are stored unrounded; one-decimal rounding is display only.
struct PowerRow {
    int n = 0;
    int m = 0;
    int total_animals = 0;
    double power = 0.0;
    double convergence_rate = 0.0;
    std::optional<double> avg_censoring_rate;
};

struct PowerTable {
    DesignGrid grid;
    ModelSpec model;
    std::vector<PowerRow> rows;
};

} // namespace xenopower
