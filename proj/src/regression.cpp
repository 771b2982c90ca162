#include "advmimo/regression.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "advmimo/errors.hpp"

namespace advmimo {

FeatureVector features_of(const Record& r) {
    FeatureVector x{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) x[i] = r.get(kFeatureColumns[i]);
    return x;
}

void assign_features(Record& r, const FeatureVector& x) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) r.set(kFeatureColumns[i], x[i]);
}

Scaler Scaler::fit(const RecordSet& train, bool standardize) {
    Scaler s;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const auto& st = train.stats(kFeatureColumns[i]);
        s.min[i] = st.min;
        s.max[i] = st.max;
        s.active[i] = st.std > 0.0;
        s.mean[i] = standardize ? st.mean : 0.0;
        s.std[i] = standardize && st.std > 0.0 ? st.std : 1.0;
    }
    return s;
}

FeatureVector Scaler::transform(const FeatureVector& x) const {
    FeatureVector z{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) z[i] = (x[i] - mean[i]) / std[i];
    return z;
}

FeatureVector Scaler::inverse(const FeatureVector& z) const {
    FeatureVector x{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) x[i] = z[i] * std[i] + mean[i];
    return x;
}

FeatureVector Scaler::standardized_range() const {
    FeatureVector r{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) r[i] = (max[i] - min[i]) / std[i];
    return r;
}

double LinearModel::predict_standardized(const FeatureVector& z) const {
    double y = bias;
    for (std::size_t i = 0; i < kFeatureCount; ++i) y += weights[i] * z[i];
    return y;
}

double LinearModel::predict(const Record& r) const {
    const auto x = features_of(r);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(x[i])) {
            throw DataError("predict: non-finite value in feature " +
                            std::string(column_name(kFeatureColumns[i])));
        }
    }
    return predict_standardized(scaler.transform(x));
}

std::pair<FeatureVector, double> LinearModel::original_units() const {
    FeatureVector a{};
    double c = bias;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        a[i] = weights[i] / scaler.std[i];
        c -= a[i] * scaler.mean[i];
    }
    return {a, c};
}

LinearModel fit_least_squares(const RecordSet& train, bool standardize) {
    LinearModel model;
    model.standardized = standardize;
    model.scaler = Scaler::fit(train, standardize);

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (model.scaler.active[i]) active.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(train.size());
    const auto k = static_cast<Eigen::Index>(active.size());
    if (train.size() <= kFeatureCount) {
        throw DataError("least squares needs more records than features (" + std::to_string(train.size()) +
                        " <= " + std::to_string(kFeatureCount) + ")");
    }

    Eigen::MatrixXd design(n, k + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& rec = train[static_cast<std::size_t>(r)];
        const auto z = model.scaler.transform(features_of(rec));
        for (Eigen::Index c = 0; c < k; ++c) design(r, c) = z[active[static_cast<std::size_t>(c)]];
        design(r, k) = 1.0;
        y(r) = rec.pathloss;
    }

    Eigen::VectorXd beta;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() == k + 1) {
        beta = qr.solve(y);
    } else {
        model.ridge_fallback = true;
        Eigen::MatrixXd gram = design.transpose() * design;
        gram.diagonal().array() += kRidgeLambda;
        beta = gram.ldlt().solve(design.transpose() * y);
    }

    for (Eigen::Index c = 0; c < k; ++c) model.weights[active[static_cast<std::size_t>(c)]] = beta(c);
    model.bias = beta(k);
    return model;
}

FeatureVector loss_gradient_wrt_input(const LinearModel& model, const Record& record, double target) {
    const double residual = model.predict(record) - target;
    FeatureVector g{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) g[i] = 2.0 * residual * model.weights[i];
    return g;
}

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || targets.empty()) {
        throw DataError("regression metrics need equal, non-zero lengths");
    }
    const auto n = static_cast<double>(targets.size());
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double r = predictions[i] - targets[i];
        ss_res += r * r;
        const double d = targets[i] - mean;
        ss_tot += d * d;
    }
    RegressionMetrics m;
    m.mse = ss_res / n;
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

std::vector<double> predict_all(const LinearModel& model, const RecordSet& set) {
    std::vector<double> out;
    out.reserve(set.size());
    for (const auto& r : set) out.push_back(model.predict(r));
    return out;
}

RegressionMetrics evaluate(const LinearModel& model, const RecordSet& set) {
    return regression_metrics(predict_all(model, set), set.column(Column::pathloss));
}

nlohmann::json model_to_json(const LinearModel& m) {
    nlohmann::json j;
    nlohmann::json features = nlohmann::json::array();
    for (auto c : kFeatureColumns) features.push_back(std::string(column_name(c)));
    j["features"] = features;
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    j["standardized"] = m.standardized;
    j["ridge_fallback"] = m.ridge_fallback;
    j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}, {"min", m.scaler.min},
                   {"max", m.scaler.max},   {"active", m.scaler.active}};
    return j;
}

LinearModel model_from_json(const nlohmann::json& j) {
    try {
        LinearModel m;
        m.weights = j.at("weights").get<FeatureVector>();
        m.bias = j.at("bias").get<double>();
        m.standardized = j.value("standardized", true);
        m.ridge_fallback = j.value("ridge_fallback", false);
        const auto& s = j.at("scaler");
        m.scaler.mean = s.at("mean").get<FeatureVector>();
        m.scaler.std = s.at("std").get<FeatureVector>();
        m.scaler.min = s.at("min").get<FeatureVector>();
        m.scaler.max = s.at("max").get<FeatureVector>();
        m.scaler.active = s.at("active").get<std::array<bool, kFeatureCount>>();
        for (double sd : m.scaler.std) {
            if (!(sd > 0.0)) throw ConfigError("model: scaler std must be > 0");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    }
}

}  // namespace advmimo
