#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsense/baseline.hpp"
#include "gridsense/gamp.hpp"
#include "gridsense/measurement.hpp"
#include "gridsense/network.hpp"

namespace gridsense {

enum class EstimatorKind { EmSwGamp, Lmmse };
std::string to_string(EstimatorKind e);
EstimatorKind parse_estimator(const std::string& name);

struct ProfileConfig {
    enum class Mode { Full, KLadder, Explicit };
    Mode mode = Mode::Full;
    int k = 0;
    std::vector<int> channels;  // 1-based rows of H, explicit mode only
    int bits = 1;
    std::optional<double> full_scale;  // empty means the per-channel auto rule
};

struct ScenarioConfig {
    std::filesystem::path network;
    StatePrior prior;
    double noise_variance = 0.0;
    ProfileConfig profile;
    int trials = 1;
    std::uint64_t seed = 0;
    std::vector<EstimatorKind> estimators{EstimatorKind::EmSwGamp, EstimatorKind::Lmmse};
    SolverOptions solver;
    Hyperparams theta0;
};

/// Relative network paths resolve against base_dir.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& config);

/// Word-count convention: 16 bits per full-precision measurement, B per quantized one.
/// The component figures count real and imaginary parts separately (twice the above).
struct BitsAccounting {
    std::size_t channels = 0;
    std::size_t quantized = 0;
    long long bits_total = 0;
    long long baseline_bits = 0;
    double saved_pct = 0.0;  // truncated to two decimals
    long long component_bits_total = 0;
    long long component_baseline_bits = 0;
};

BitsAccounting bits_accounting(const ResolutionProfile& profile);
BitsAccounting bits_accounting(std::size_t channels, std::size_t quantized, int bits);

struct TrialOutcome {
    MetricsReport metrics;
    double seconds = 0.0;
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    Hyperparams theta;
};

struct EstimatorSummary {
    EstimatorKind estimator = EstimatorKind::EmSwGamp;
    int trials = 0;
    int diverged = 0;
    int converged = 0;
    MetricsReport mean;  // over non-diverged trials
    double secs_per_trial = 0.0;
    double mean_iterations = 0.0;
    std::optional<Hyperparams> learned;  // averaged; EMSwGAMP only
    std::vector<TrialOutcome> per_trial;
};

struct ChannelStep {
    std::size_t channel;  // zero-based row of H
    int bits;
    double step;
};

struct AggregateReport {
    std::string network_name;
    std::uint64_t seed = 0;
    int trials = 0;
    int k = 0;  // quantized channel count
    std::vector<EstimatorSummary> estimators;
    BitsAccounting bits;
    std::vector<ChannelStep> steps;
    bool auto_full_scale = true;
    nlohmann::json config;

    bool any_diverged() const;
};

/// Runs all trials on a pool capped by GRIDSENSE_THREADS. Results do not depend on the pool size.
AggregateReport run_scenario(const ScenarioConfig& config);
AggregateReport run_scenario(const ScenarioConfig& config, const ValidatedNetwork& net);

/// One report per K, everything else from `config`.
std::vector<AggregateReport> run_sweep(const ScenarioConfig& config, const std::vector<int>& ks);

enum class ReportFormat { Csv, Json, Table };
ReportFormat parse_format(const std::string& name);

extern const char* const kCsvHeader;

std::string format_csv(const AggregateReport& report, bool with_header = true);
nlohmann::json report_to_json(const AggregateReport& report);
/// Reads back the rows written by report_to_json (per-trial detail is not serialized).
AggregateReport report_from_json(const nlohmann::json& doc);
std::string format_table(const AggregateReport& report);
std::string format_sweep(const std::vector<AggregateReport>& reports, ReportFormat format);

std::string render(const AggregateReport& report, ReportFormat format);
/// Writes to path, or stdout when path is empty or "-". Throws IoError.
void emit_report(const AggregateReport& report, ReportFormat format, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

int worker_count();

}  // namespace gridsense
