#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "advmimo/dataset.hpp"

namespace advmimo {

inline constexpr std::size_t kFeatureCount = 11;

// Regression inputs: every record column except the pathloss target, in CSV order.
inline constexpr std::array<Column, kFeatureCount> kFeatureColumns = {
    Column::x_coord, Column::y_coord,   Column::distance, Column::doa_phi,
    Column::doa_theta, Column::dod_phi, Column::dod_theta, Column::phase,
    Column::power,   Column::time_of_arrival, Column::los,
};

using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector features_of(const Record& r);
// Writes the feature values back, leaving `pathloss` untouched. `los` is rounded.
void assign_features(Record& r, const FeatureVector& x);

/// Per-feature z-scoring fitted on training data. Constant features keep
/// std = 1 and are marked inactive.
struct Scaler {
    FeatureVector mean{};
    FeatureVector std{};
    FeatureVector min{};  // training range, original units
    FeatureVector max{};
    std::array<bool, kFeatureCount> active{};

    static Scaler fit(const RecordSet& train, bool standardize = true);

    FeatureVector transform(const FeatureVector& x) const;
    FeatureVector inverse(const FeatureVector& z) const;
    // Training range of each feature measured in standardized units.
    FeatureVector standardized_range() const;
};

/// y = w . standardize(x) + b, fitted by least squares.
struct LinearModel {
    FeatureVector weights{};
    double bias = 0.0;
    Scaler scaler;
    bool standardized = true;
    bool ridge_fallback = false;  // design was rank deficient; solved with a tiny ridge

    double predict(const Record& r) const;
    double predict_standardized(const FeatureVector& z) const;

    // Coefficients for raw (unstandardized) inputs: y = sum(a_i x_i) + c.
    std::pair<FeatureVector, double> original_units() const;
};

inline constexpr double kRidgeLambda = 1e-8;

// Throws DataError if |train| <= number of features.
LinearModel fit_least_squares(const RecordSet& train, bool standardize = true);

/// d/dz of (w.z + b - target)^2, i.e. 2 * residual * w, in standardized space.
FeatureVector loss_gradient_wrt_input(const LinearModel& model, const Record& record, double target);

struct RegressionMetrics {
    double mse = 0.0;
    std::optional<double> r2;  // nullopt when the targets are constant
};

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets);
RegressionMetrics evaluate(const LinearModel& model, const RecordSet& set);
std::vector<double> predict_all(const LinearModel& model, const RecordSet& set);

nlohmann::json model_to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

}  // namespace advmimo
