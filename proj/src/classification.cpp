#include <algorithm>

#include "advmimo/detector.hpp"
#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw DataError("classification metrics need equal, non-zero lengths");
    }
    ClassificationMetrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == 1;
        const bool t = truth[i] == 1;
        if (p && t) ++m.tp;
        else if (p) ++m.fp;
        else if (t) ++m.fn;
        else ++m.tn;
    }
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

nlohmann::json metrics_to_json(const ClassificationMetrics& m) {
    const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"precision", opt(m.precision)},
            {"recall", opt(m.recall)},
            {"f1", opt(m.f1)},
            {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}}}};
}

std::vector<int> stratified_folds(std::span<const int> labels, int k_folds, std::uint64_t seed) {
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
    std::vector<int> fold(labels.size(), 0);
    Rng rng(seed);
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        if (members.size() < static_cast<std::size_t>(k_folds)) {
            throw DataError("stratified " + std::to_string(k_folds) + "-fold split infeasible: class " +
                            std::to_string(cls) + " has " + std::to_string(members.size()) + " rows");
        }
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t p = 0; p < members.size(); ++p) {
            fold[members[p]] = static_cast<int>(p % static_cast<std::size_t>(k_folds));
        }
    }
    return fold;
}

GridSearchResult grid_search(const FeatureMatrix& features, std::span<const int> labels,
                             const std::vector<GbdtParams>& grid, int k_folds, std::uint64_t seed,
                             double threshold) {
    if (grid.empty()) throw ConfigError("grid search needs at least one candidate");
    for (const auto& p : grid) p.validate();
    const auto fold = stratified_folds(labels, k_folds, seed);

    std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(k_folds));
    std::vector<std::vector<std::size_t>> held_rows(static_cast<std::size_t>(k_folds));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (int f = 0; f < k_folds; ++f) {
            (fold[i] == f ? held_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);
        }
    }
    const auto gather = [&](const std::vector<std::size_t>& rows) {
        std::vector<int> out;
        out.reserve(rows.size());
        for (auto r : rows) out.push_back(labels[r]);
        return out;
    };

    GridSearchResult result;
    for (const auto& params : grid) {
        double total = 0.0;
        for (std::size_t f = 0; f < static_cast<std::size_t>(k_folds); ++f) {
            const auto model = train_gbdt(features.select_rows(train_rows[f]), gather(train_rows[f]), params);
            const auto predicted = predict_labels(model, features.select_rows(held_rows[f]), threshold);
            total += classification_metrics(predicted, gather(held_rows[f])).f1.value_or(0.0);
        }
        result.mean_f1.push_back(total / k_folds);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto& a = grid[i];
        const auto& b = grid[best];
        if (result.mean_f1[i] > result.mean_f1[best] ||
            (result.mean_f1[i] == result.mean_f1[best] &&
             (a.n_estimators < b.n_estimators ||
              (a.n_estimators == b.n_estimators && a.max_depth < b.max_depth)))) {
            best = i;
        }
    }
    result.best = grid[best];
    return result;
}

}  // namespace advmimo
