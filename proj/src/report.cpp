#include <cstdio>
#include <sstream>

#include "advmimo/errors.hpp"
#include "advmimo/pipeline.hpp"

namespace advmimo {

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json histogram_json(const Histogram& h) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : h.bins) bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    return {{"bins", bins}, {"degenerate", h.degenerate}};
}

// Pathloss histogram conditioned on another feature: per bin of `by`, the
// count and mean pathloss of its records.
nlohmann::json conditional_json(const RecordSet& set, Column by, std::size_t bins) {
    const auto h = histogram(set, by, bins);
    std::vector<double> sum(h.bins.size(), 0.0);
    for (const auto& r : set) {
        const double v = r.get(by);
        std::size_t b = 0;
        while (b + 1 < h.bins.size() && v >= h.bins[b + 1].lo) ++b;
        sum[b] += r.pathloss;
    }
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t b = 0; b < h.bins.size(); ++b) {
        const auto& bin = h.bins[b];
        out.push_back({{"lo", bin.lo},
                       {"hi", bin.hi},
                       {"count", bin.count},
                       {"mean_pathloss", bin.count ? nlohmann::json(sum[b] / static_cast<double>(bin.count))
                                                   : nlohmann::json(nullptr)}});
    }
    return out;
}

std::string fmt(const nlohmann::json& v, const char* spec = "%.4f") {
    if (v.is_null()) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v.get<double>());
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

std::string hash_json(const nlohmann::json& j) {
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json regression_metrics_to_json(const RegressionMetrics& m) {
    return {{"mse", m.mse}, {"r2", opt_json(m.r2)}};
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows, const std::string& parameter) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) out.push_back({{parameter, r.value}, {"mse", r.metrics.mse}, {"r2", opt_json(r.metrics.r2)}});
    return out;
}

nlohmann::json histogram_plot_data(const RecordSet& set, std::size_t bins) {
    return {{"pathloss", histogram_json(histogram(set, Column::pathloss, bins))},
            {"distance", histogram_json(histogram(set, Column::distance, bins))},
            {"time_of_arrival", histogram_json(histogram(set, Column::time_of_arrival, bins))},
            {"pathloss_by_distance", conditional_json(set, Column::distance, bins)},
            {"pathloss_by_time_of_arrival", conditional_json(set, Column::time_of_arrival, bins)},
            {"records", set.size()}};
}

nlohmann::json correlation_plot_data(const RecordSet& set) {
    const auto m = correlation_matrix(set);
    nlohmann::json names = nlohmann::json::array();
    for (auto n : kColumnNames) names.push_back(std::string(n));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : m) rows.push_back(row);
    return {{"columns", names}, {"matrix", rows}};
}

nlohmann::json report_to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["scenarios"] = nlohmann::json::array({
        {{"scenario", "undefended"}, {"mse", r.undefended.mse}, {"r2", opt_json(r.undefended.r2)}},
        {{"scenario", "attacked"}, {"mse", r.attacked.mse}, {"r2", opt_json(r.attacked.r2)}},
        {{"scenario", "secured"}, {"mse", r.secured.mse}, {"r2", opt_json(r.secured.r2)}},
    });
    j["undefended"] = regression_metrics_to_json(r.undefended);
    j["attacked"] = regression_metrics_to_json(r.attacked);
    j["secured"] = regression_metrics_to_json(r.secured);
    j["removed_count"] = r.removed_count;
    j["contaminated_size"] = r.contaminated_size;
    j["poisoned_count"] = r.poisoned_count;
    j["split_sizes"] = {{"train", r.split_sizes[0]}, {"poison_pool", r.split_sizes[1]}, {"test", r.split_sizes[2]}};
    j["dataset"] = {{"records", r.dataset.records},
                    {"los", r.dataset.los},
                    {"nlos", r.dataset.nlos},
                    {"blocked_users", r.dataset.blocked_users},
                    {"users_inside_buildings", r.dataset.users_inside_buildings}};

    auto gbdt_row = metrics_to_json(r.detector.test);
    gbdt_row["classifier"] = "gbdt";
    if (r.detector.trained) gbdt_row["params"] = gbdt_params_to_json(r.detector.params);
    auto baseline_row = metrics_to_json(r.detector.baseline_test);
    baseline_row["classifier"] = "logistic_regression";
    j["detector"] = {{"trained", r.detector.trained},
                     {"classifiers", nlohmann::json::array({gbdt_row, baseline_row})},
                     {"balanced_test", metrics_to_json(r.detector.balanced_test)},
                     {"cv_mean_f1", r.detector.cv_mean_f1},
                     {"train_rows", r.detector.train_rows},
                     {"balancing", "majority class downsampled to 50/50"}};

    if (!r.epsilon_sweep.empty()) j["epsilon_sweep"] = sweep_to_json(r.epsilon_sweep, "epsilon");
    if (!r.fraction_sweep.empty()) j["fraction_sweep"] = sweep_to_json(r.fraction_sweep, "fraction");

    nlohmann::json series = nlohmann::json::object();
    for (const auto& [name, values] : r.trace.series) series[name] = values;
    j["scenario_trace"] = {{"indices", r.trace.indices}, {"truth", r.trace.truth}, {"series", series}};

    j["histograms"] = r.histograms;
    j["correlation"] = r.correlation;
    j["config"] = r.config;
    j["provenance"] = {{"config_hash", r.config_hash}, {"seed", r.seed}};
    return j;
}

std::string render_tables(const nlohmann::json& report) {
    std::ostringstream out;
    const auto& cfg = report.at("config").at("attack");
    out << "Detector comparison (epsilon = " << fmt(cfg.at("epsilon"), "%g")
        << ", fract = " << fmt(cfg.at("fraction"), "%g") << ")\n";
    out << pad("Classifier", 72) << pad("Precision", 11) << pad("Recall", 11) << "F1-score\n";
    for (const auto& row : report.at("detector").at("classifiers")) {
        std::string name = row.at("classifier").get<std::string>();
        if (row.contains("params")) {
            const auto& p = row.at("params");
            name += " (max_depth=" + std::to_string(p.at("max_depth").get<int>()) +
                    ", n_estimators=" + std::to_string(p.at("n_estimators").get<int>()) +
                    ", num_leaves=" + std::to_string(p.at("num_leaves").get<int>()) +
                    ", subsample=" + fmt(p.at("subsample"), "%g") + ")";
        }
        out << pad(name, 72) << pad(fmt(row.at("precision")), 11) << pad(fmt(row.at("recall")), 11)
            << fmt(row.at("f1")) << '\n';
    }
    out << '\n';
    out << "Regression quality by scenario\n";
    out << pad("Scenario", 16) << pad("MSE", 12) << "R^2\n";
    for (const auto& row : report.at("scenarios")) {
        out << pad(row.at("scenario").get<std::string>(), 16) << pad(fmt(row.at("mse")), 12) << fmt(row.at("r2"))
            << '\n';
    }
    out << "removed records: " << report.at("removed_count").get<std::size_t>() << " of "
        << report.at("contaminated_size").get<std::size_t>() << '\n';
    return out.str();
}

PlotKind plot_kind_from_string(const std::string& s) {
    if (s == "histogram") return PlotKind::histogram;
    if (s == "correlation") return PlotKind::correlation;
    if (s == "scenario_trace") return PlotKind::scenario_trace;
    if (s == "sweep") return PlotKind::sweep;
    throw ConfigError("unknown plot kind '" + s + "' (expected histogram, correlation, scenario_trace, or sweep)");
}

nlohmann::json emit_plot_data(const nlohmann::json& report, PlotKind kind) {
    const auto need = [&](const char* key) -> const nlohmann::json& {
        if (!report.contains(key)) throw DataError(std::string("report has no \"") + key + "\" section");
        return report.at(key);
    };
    switch (kind) {
        case PlotKind::histogram: return need("histograms");
        case PlotKind::correlation: return need("correlation");
        case PlotKind::scenario_trace: {
            const auto& t = need("scenario_trace");
            const auto& idx = t.at("indices");
            nlohmann::json series = nlohmann::json::object();
            for (const auto& [name, values] : t.at("series").items()) {
                nlohmann::json pairs = nlohmann::json::array();
                for (std::size_t i = 0; i < values.size(); ++i) pairs.push_back({idx[i], values[i]});
                series[name] = pairs;
            }
            return {{"truth", t.at("truth")}, {"series", series}};
        }
        case PlotKind::sweep: {
            nlohmann::json out = nlohmann::json::object();
            if (report.contains("epsilon_sweep")) out["epsilon"] = report.at("epsilon_sweep");
            if (report.contains("fraction_sweep")) out["fraction"] = report.at("fraction_sweep");
            if (out.empty()) throw DataError("report has no sweep data");
            return out;
        }
    }
    return {};
}

}  // namespace advmimo
