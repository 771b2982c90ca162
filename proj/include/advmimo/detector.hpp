#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "advmimo/dataset.hpp"

namespace advmimo {

/// Dense row-major feature matrix.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values);
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;

    // All 12 record columns (target included), in CSV order.
    static FeatureMatrix from_records(const RecordSet& set);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Gradient-boosted trees

struct GbdtParams {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 6;
    int num_leaves = 20;
    double subsample = 1.0;
    int min_leaf = 20;
    int n_bins = 64;
    double l2_leaf = 1.0;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
    friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

GbdtParams gbdt_params_from_json(const nlohmann::json& j, const GbdtParams& defaults = {});
nlohmann::json gbdt_params_to_json(const GbdtParams& p);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;      // leaf output (logit units, before the learning rate)
    std::size_t count = 0;   // training rows that reached this node
    int depth = 0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
    std::size_t leaf_count() const;
    int depth() const;
};

struct GbdtModel {
    double prior_logit = 0.0;
    double learning_rate = 0.1;
    std::size_t feature_count = 0;
    std::vector<Tree> trees;

    double raw_score(std::span<const double> row) const;
    // Throws DataError on a feature-count mismatch.
    double predict_proba(std::span<const double> row) const;
};

/// Per-feature split candidates: midpoints between adjacent distinct values,
/// thinned to equal-frequency cuts when there are more than n_bins distinct values.
std::vector<double> bin_thresholds(std::vector<double> values, int n_bins);

// Throws DataError for single-class labels (each class needs >= 2 rows).
GbdtModel train_gbdt(const FeatureMatrix& features, std::span<const int> labels, const GbdtParams& params);

// Mean logistic loss of the model's probabilities.
double logistic_loss(const GbdtModel& model, const FeatureMatrix& features, std::span<const int> labels);

std::vector<int> predict_labels(const GbdtModel& model, const FeatureMatrix& features, double threshold = 0.5);

nlohmann::json gbdt_to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Metrics

struct ClassificationMetrics {
    std::optional<double> precision;  // nullopt when the denominator is zero
    std::optional<double> recall;
    std::optional<double> f1;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
};

ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> truth);
nlohmann::json metrics_to_json(const ClassificationMetrics& m);

// ---------------------------------------------------------------------------
// Model selection

struct GridSearchResult {
    GbdtParams best;
    std::vector<double> mean_f1;  // per candidate, grid order; undefined fold F1 counts as 0
};

/// Seeded stratified k-fold CV over `grid`; picks the best mean F1, breaking
/// ties by fewer estimators, then shallower trees, then grid order.
GridSearchResult grid_search(const FeatureMatrix& features, std::span<const int> labels,
                             const std::vector<GbdtParams>& grid, int k_folds, std::uint64_t seed,
                             double threshold = 0.5);

// Fold index per row. Throws DataError when a class has fewer rows than folds.
std::vector<int> stratified_folds(std::span<const int> labels, int k_folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Logistic-regression baseline

struct LogisticModel {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> loss_trace;  // mean logistic loss before each iteration, plus the final one

    double predict_proba(std::span<const double> row) const;
};

LogisticModel train_logistic_baseline(const FeatureMatrix& features, std::span<const int> labels, int iterations,
                                      double step);
std::vector<int> predict_labels(const LogisticModel& model, const FeatureMatrix& features, double threshold = 0.5);

}  // namespace advmimo
