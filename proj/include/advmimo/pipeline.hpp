#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advmimo/attacks.hpp"
#include "advmimo/channel_sim.hpp"
#include "advmimo/dataset.hpp"
#include "advmimo/detector.hpp"
#include "advmimo/regression.hpp"

namespace advmimo {

// Used when neither a --seed flag nor the config file provides one.
inline constexpr std::uint64_t kDefaultSeed = 20240607;

enum class ContaminationMode {
    evaluation_set,  // attack the test split, keep the clean model frozen
    training_set,    // attack the train split and refit
};

struct DetectorConfig {
    std::vector<GbdtParams> grid;
    int k_folds = 3;
    std::size_t train_size = 4000;  // rows drawn from the poison pool, half of them attacked
    double threshold = 0.5;
    int baseline_iterations = 300;
    double baseline_step = 0.5;
};

// Default detector grid: LightGBM-style settings, kept small enough for one core.
std::vector<GbdtParams> default_detector_grid();

// Default feature-scaled epsilon sweep.
std::vector<double> default_epsilon_sweep();

// fract grid used for the fraction sweep.
std::vector<double> default_fraction_sweep();

struct ExperimentConfig {
    // exactly one data source
    std::optional<ScenarioConfig> scene;
    std::optional<std::filesystem::path> csv;

    SplitSpec split;
    AttackConfig attack;
    DetectorConfig detector;
    ContaminationMode mode = ContaminationMode::evaluation_set;
    bool standardize = true;
    std::uint64_t seed = kDefaultSeed;
    std::vector<double> sweep_epsilons;
    std::vector<double> sweep_fractions;
    std::size_t trace_records = 50;
    unsigned threads = 0;  // scene generation; does not affect results

    void validate() const;  // throws ConfigError
    nlohmann::json to_json() const;
};

/// Parses an experiment config. Relative file paths resolve against
/// `base_dir`. `seed_override` (the CLI flag) wins over the file's "seed".
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                             std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

// Sub-seeds of one experiment, all derived from the master seed.
struct StageSeeds {
    std::uint64_t split;
    std::uint64_t attack;
    std::uint64_t detector_sample;
    std::uint64_t detector_attack;
    std::uint64_t cv;
    std::uint64_t gbdt;
    std::uint64_t balance;

    static StageSeeds from(std::uint64_t seed);
};

struct DatasetSummary {
    std::size_t records = 0;
    std::size_t los = 0;
    std::size_t nlos = 0;
    std::size_t blocked_users = 0;
    std::size_t users_inside_buildings = 0;
};

// Loads the CSV or generates the scene.
struct LoadedData {
    RecordSet records;
    DatasetSummary summary;
};
LoadedData load_data(const ExperimentConfig& config);

struct SweepRow {
    double value = 0.0;  // epsilon or fraction
    RegressionMetrics metrics;
};

struct DetectorReport {
    bool trained = false;  // false when the attack poisons nothing
    GbdtParams params;
    std::vector<double> cv_mean_f1;
    ClassificationMetrics test;           // on the contaminated split
    ClassificationMetrics balanced_test;  // majority class downsampled to 50/50
    ClassificationMetrics baseline_test;  // logistic regression, same data
    std::size_t train_rows = 0;
};

struct ScenarioTrace {
    std::vector<std::size_t> indices;  // positions in the test split
    std::vector<double> truth;
    std::vector<std::pair<std::string, std::vector<double>>> series;  // undefended + three FGSM variants
};

struct ExperimentReport {
    RegressionMetrics undefended;
    RegressionMetrics attacked;
    RegressionMetrics secured;
    DetectorReport detector;
    std::size_t removed_count = 0;
    std::size_t contaminated_size = 0;  // size of the split that was attacked and filtered
    std::size_t poisoned_count = 0;
    std::array<std::size_t, 3> split_sizes{};
    DatasetSummary dataset;
    std::vector<SweepRow> epsilon_sweep;
    std::vector<SweepRow> fraction_sweep;
    ScenarioTrace trace;
    nlohmann::json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    // dataset statistics for plot export
    nlohmann::json histograms;
    nlohmann::json correlation;
};

/// Prepared state shared by an experiment and its sweeps: the data, the
/// split, and the clean model.
class ExperimentContext {
public:
    explicit ExperimentContext(const ExperimentConfig& config);

    const ExperimentConfig& config() const { return config_; }
    const LoadedData& data() const { return data_; }
    const Split& split() const { return split_; }
    const LinearModel& clean_model() const { return model_; }
    const StageSeeds& seeds() const { return seeds_; }
    RegressionMetrics undefended() const;

    // Attacked-scenario metrics for one attack configuration.
    RegressionMetrics attacked(const AttackConfig& attack) const;

private:
    ExperimentConfig config_;
    StageSeeds seeds_;
    LoadedData data_;
    Split split_;
    LinearModel model_;
};

// Throws DataError when the detector flags every record.
ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentContext& context);

// One Attacked-scenario row per value, with an epsilon = 0 (or fraction = 0)
// row prepended that equals the Undefended metrics.
std::vector<SweepRow> sweep_epsilon(const ExperimentContext& context, const std::vector<double>& epsilons);
std::vector<SweepRow> sweep_fraction(const ExperimentContext& context, const std::vector<double>& fractions);

nlohmann::json report_to_json(const ExperimentReport& report);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows, const std::string& parameter);
nlohmann::json regression_metrics_to_json(const RegressionMetrics& m);

// Aligned-text rendering of the detector comparison and the scenario dynamics.
std::string render_tables(const nlohmann::json& report);

enum class PlotKind { histogram, correlation, scenario_trace, sweep };
PlotKind plot_kind_from_string(const std::string& s);  // throws ConfigError

nlohmann::json histogram_plot_data(const RecordSet& set, std::size_t bins = 30);
nlohmann::json correlation_plot_data(const RecordSet& set);

// Extracts plot series from a report JSON.
nlohmann::json emit_plot_data(const nlohmann::json& report, PlotKind kind);

// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string hash_json(const nlohmann::json& j);

}  // namespace advmimo
