#include "advmimo/pipeline.hpp"

#include <fstream>

#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

namespace {

std::vector<double> doubles_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) out.push_back(v.get<double>());
    return out;
}

struct DetectorData {
    FeatureMatrix features;
    std::vector<int> labels;
};

// Balanced detector training rows from the poison pool: half clean, half attacked copies.
DetectorData build_detector_data(const RecordSet& pool, const LinearModel& model, const AttackConfig& attack,
                                 std::size_t size, const StageSeeds& seeds) {
    std::size_t m = std::min(size, pool.size());
    m -= m % 2;
    if (m < 4) throw DataError("poison pool too small to train a detector");
    Rng rng(seeds.detector_sample);
    auto picked = rng.sample_indices(pool.size(), m);
    rng.shuffle(std::span<std::size_t>(picked));
    const std::vector<std::size_t> clean_idx(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(m / 2));
    const std::vector<std::size_t> attack_idx(picked.begin() + static_cast<std::ptrdiff_t>(m / 2), picked.end());

    AttackConfig all = attack;
    all.fraction = 1.0;
    all.seed = seeds.detector_attack;
    const auto attacked = poison(pool.subset(attack_idx), model, all, &pool);

    DetectorData d;
    d.features = FeatureMatrix(0, kColumnCount);
    for (auto i : clean_idx) {
        const auto v = pool[i].values();
        d.features.append_row(v);
        d.labels.push_back(0);
    }
    for (std::size_t i = 0; i < attacked.records.size(); ++i) {
        const auto v = attacked.records[i].values();
        d.features.append_row(v);
        d.labels.push_back(attacked.labels[i]);
    }
    return d;
}

std::vector<std::size_t> balanced_indices(const std::vector<int>& labels, std::uint64_t seed) {
    std::vector<std::size_t> cls[2];
    for (std::size_t i = 0; i < labels.size(); ++i) cls[labels[i] == 1].push_back(i);
    if (cls[0].empty() || cls[1].empty()) {
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return all;
    }
    auto& big = cls[0].size() > cls[1].size() ? cls[0] : cls[1];
    const auto& small = cls[0].size() > cls[1].size() ? cls[1] : cls[0];
    Rng rng(seed);
    const auto keep = rng.sample_indices(big.size(), small.size());
    std::vector<std::size_t> out(small.begin(), small.end());
    for (auto k : keep) out.push_back(big[k]);
    std::sort(out.begin(), out.end());
    return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

std::vector<GbdtParams> default_detector_grid() {
    GbdtParams a;
    a.n_estimators = 100;
    a.max_depth = 6;
    a.num_leaves = 20;
    a.subsample = 0.7;
    GbdtParams b = a;
    b.n_estimators = 200;
    b.max_depth = 20;
    return {a, b};
}

std::vector<double> default_epsilon_sweep() { return {0.005, 0.01, 0.02, 0.05, 0.1}; }

std::vector<double> default_fraction_sweep() { return {0.2, 0.4, 0.6, 0.8, 0.95, 0.99999}; }

StageSeeds StageSeeds::from(std::uint64_t seed) {
    return {derive_seed(seed, "split"),           derive_seed(seed, "attack"),
            derive_seed(seed, "detector-sample"), derive_seed(seed, "detector-attack"),
            derive_seed(seed, "cv"),              derive_seed(seed, "gbdt"),
            derive_seed(seed, "balance")};
}

void ExperimentConfig::validate() const {
    if (scene.has_value() == csv.has_value()) throw ConfigError("experiment needs exactly one data source");
    split.validate();
    attack.validate();
    if (detector.grid.empty()) throw ConfigError("detector grid must not be empty");
    for (const auto& p : detector.grid) p.validate();
    if (detector.k_folds < 2) throw ConfigError("detector k_folds must be >= 2");
    if (!(detector.threshold > 0.0 && detector.threshold < 1.0)) throw ConfigError("detector threshold must be in (0, 1)");
    if (detector.train_size < 4) throw ConfigError("detector train_size must be >= 4");
    for (double e : sweep_epsilons) {
        if (!(e > 0.0)) throw ConfigError("sweep epsilons must be > 0");
    }
    for (double f : sweep_fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("sweep fractions must be in [0, 1]");
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    if (scene) j["data"]["scene"] = scenario_to_json(*scene);
    if (csv) j["data"]["csv"] = csv->string();
    j["split"] = {{"train", split.train}, {"poison_pool", split.poison_pool}, {"test", split.test}};
    j["attack"] = attack_config_to_json(attack);
    j["attack"].erase("seed");
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& p : detector.grid) {
        auto g = gbdt_params_to_json(p);
        g.erase("seed");
        grid.push_back(g);
    }
    j["detector"] = {{"grid", grid},
                     {"k_folds", detector.k_folds},
                     {"train_size", detector.train_size},
                     {"threshold", detector.threshold},
                     {"baseline", {{"iterations", detector.baseline_iterations}, {"step", detector.baseline_step}}}};
    j["mode"] = mode == ContaminationMode::evaluation_set ? "evaluation_set" : "training_set";
    j["standardize"] = standardize;
    j["seed"] = seed;
    j["sweep"] = {{"epsilons", sweep_epsilons}, {"fractions", sweep_fractions}};
    j["trace_records"] = trace_records;
    return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                             std::optional<std::uint64_t> seed_override) {
    try {
        if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
        ExperimentConfig c;
        const auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };

        if (!j.contains("data")) throw ConfigError("experiment config needs a \"data\" block");
        const auto& data = j.at("data");
        if (data.contains("scene")) {
            const auto& s = data.at("scene");
            c.scene = s.is_string() ? load_scenario(resolve(s.get<std::string>())) : scenario_from_json(s);
        }
        if (data.contains("csv")) c.csv = resolve(data.at("csv").get<std::string>());
        if (c.csv && !std::filesystem::exists(*c.csv)) throw ConfigError("data file not found: " + c.csv->string());

        if (j.contains("split")) {
            const auto& s = j.at("split");
            c.split.train = s.value("train", c.split.train);
            c.split.poison_pool = s.value("poison_pool", c.split.poison_pool);
            c.split.test = s.value("test", c.split.test);
        }
        if (j.contains("attack")) c.attack = attack_config_from_json(j.at("attack"));

        c.detector.grid = default_detector_grid();
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            if (d.contains("grid")) {
                c.detector.grid.clear();
                for (const auto& g : d.at("grid")) c.detector.grid.push_back(gbdt_params_from_json(g));
            }
            c.detector.k_folds = d.value("k_folds", c.detector.k_folds);
            c.detector.train_size = d.value("train_size", c.detector.train_size);
            c.detector.threshold = d.value("threshold", c.detector.threshold);
            if (d.contains("baseline")) {
                c.detector.baseline_iterations = d.at("baseline").value("iterations", c.detector.baseline_iterations);
                c.detector.baseline_step = d.at("baseline").value("step", c.detector.baseline_step);
            }
        }
        const auto mode = j.value("mode", std::string("evaluation_set"));
        if (mode == "evaluation_set") {
            c.mode = ContaminationMode::evaluation_set;
        } else if (mode == "training_set") {
            c.mode = ContaminationMode::training_set;
        } else {
            throw ConfigError("unknown mode '" + mode + "'");
        }
        c.standardize = j.value("standardize", c.standardize);
        c.seed = seed_override.value_or(j.value("seed", kDefaultSeed));
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("epsilons")) c.sweep_epsilons = doubles_from_json(s.at("epsilons"), "sweep.epsilons");
            if (s.contains("fractions")) c.sweep_fractions = doubles_from_json(s.at("fractions"), "sweep.fractions");
        }
        c.trace_records = j.value("trace_records", c.trace_records);
        c.threads = j.value("threads", c.threads);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open experiment config: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("experiment config " + path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j, path.parent_path(), seed_override);
}

LoadedData load_data(const ExperimentConfig& config) {
    if (config.scene) {
        auto gen = generate_scenario(*config.scene, config.threads);
        DatasetSummary s;
        s.records = gen.records.size();
        for (const auto& r : gen.records) (r.los == 1 ? s.los : s.nlos)++;
        s.blocked_users = gen.blocked_users;
        s.users_inside_buildings = gen.users_inside_buildings;
        return {std::move(gen.records), s};
    }
    auto records = load_csv(*config.csv);
    DatasetSummary s;
    s.records = records.size();
    for (const auto& r : records) (r.los == 1 ? s.los : s.nlos)++;
    return {std::move(records), s};
}

// ---------------------------------------------------------------------------

ExperimentContext::ExperimentContext(const ExperimentConfig& config)
    : config_(config),
      seeds_(StageSeeds::from(config.seed)),
      data_(load_data(config)),
      split_([&] {
          SplitSpec spec = config.split;
          spec.seed = seeds_.split;
          return advmimo::split(data_.records, spec);
      }()),
      model_(fit_least_squares(split_.train, config.standardize)) {}

RegressionMetrics ExperimentContext::undefended() const { return evaluate(model_, split_.test); }

RegressionMetrics ExperimentContext::attacked(const AttackConfig& attack) const {
    AttackConfig atk = attack;
    atk.seed = seeds_.attack;
    if (config_.mode == ContaminationMode::evaluation_set) {
        const auto poisoned = poison(split_.test, model_, atk, &split_.poison_pool);
        return evaluate(model_, poisoned.records);
    }
    const auto poisoned = poison(split_.train, model_, atk, &split_.poison_pool);
    return evaluate(fit_least_squares(poisoned.records, config_.standardize), split_.test);
}

ExperimentReport run_experiment(const ExperimentConfig& config) { return run_experiment(ExperimentContext(config)); }

ExperimentReport run_experiment(const ExperimentContext& ctx) {
    const auto& cfg = ctx.config();
    const auto& seeds = ctx.seeds();
    const auto& parts = ctx.split();
    const auto& model = ctx.clean_model();

    ExperimentReport report;
    report.seed = cfg.seed;
    report.config = cfg.to_json();
    report.config_hash = hash_json(report.config);
    report.dataset = ctx.data().summary;
    report.split_sizes = {parts.train.size(), parts.poison_pool.size(), parts.test.size()};
    report.undefended = ctx.undefended();

    AttackConfig atk = cfg.attack;
    atk.seed = seeds.attack;
    const bool training_mode = cfg.mode == ContaminationMode::training_set;
    const RecordSet& target = training_mode ? parts.train : parts.test;
    const auto contaminated = poison(target, model, atk, &parts.poison_pool);
    report.contaminated_size = contaminated.records.size();
    report.poisoned_count = contaminated.poisoned_count();
    report.attacked = training_mode
                          ? evaluate(fit_least_squares(contaminated.records, cfg.standardize), parts.test)
                          : evaluate(model, contaminated.records);

    // Detector. Its training data mirrors the configured attack, so an attack
    // that poisons nothing leaves no poisoned class to learn and nothing is removed.
    const auto x_contaminated = FeatureMatrix::from_records(contaminated.records);
    std::vector<int> flagged(contaminated.records.size(), 0);
    std::vector<int> baseline_flagged = flagged;
    if (atk.fraction > 0.0) {
        auto det = build_detector_data(parts.poison_pool, model, atk, cfg.detector.train_size, seeds);
        std::vector<GbdtParams> grid = cfg.detector.grid;
        for (auto& p : grid) p.seed = seeds.gbdt;
        const auto search = grid_search(det.features, det.labels, grid, cfg.detector.k_folds, seeds.cv,
                                        cfg.detector.threshold);
        const auto detector = train_gbdt(det.features, det.labels, search.best);
        const auto baseline = train_logistic_baseline(det.features, det.labels, cfg.detector.baseline_iterations,
                                                      cfg.detector.baseline_step);
        flagged = predict_labels(detector, x_contaminated, cfg.detector.threshold);
        baseline_flagged = predict_labels(baseline, x_contaminated, cfg.detector.threshold);
        report.detector.trained = true;
        report.detector.params = search.best;
        report.detector.cv_mean_f1 = search.mean_f1;
        report.detector.train_rows = det.labels.size();
    }
    report.detector.test = classification_metrics(flagged, contaminated.labels);
    const auto bal = balanced_indices(contaminated.labels, seeds.balance);
    report.detector.balanced_test = classification_metrics(pick(flagged, bal), pick(contaminated.labels, bal));
    report.detector.baseline_test = classification_metrics(baseline_flagged, contaminated.labels);

    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (flagged[i] == 0) retained.push_back(i);
    }
    if (retained.empty()) throw DataError("detector flagged every record; nothing left to evaluate");
    report.removed_count = flagged.size() - retained.size();
    const auto kept = contaminated.records.subset(retained);
    report.secured = training_mode ? evaluate(fit_least_squares(kept, cfg.standardize), parts.test)
                                   : evaluate(model, kept);

    // per-record traces for the four scenario variants
    const std::size_t n_trace = std::min(cfg.trace_records, parts.test.size());
    std::vector<double> undefended_pred;
    for (std::size_t i = 0; i < n_trace; ++i) {
        report.trace.indices.push_back(i);
        report.trace.truth.push_back(parts.test[i].pathloss);
        undefended_pred.push_back(model.predict(parts.test[i]));
    }
    report.trace.series.emplace_back("undefended", std::move(undefended_pred));
    const std::pair<const char*, FgsmVariant> variants[] = {{"fgsm_fluctuation", FgsmVariant::fluctuation},
                                                            {"fgsm_maximize", FgsmVariant::maximize},
                                                            {"fgsm_plain", FgsmVariant::plain}};
    for (const auto& [name, variant] : variants) {
        std::vector<double> pred;
        for (std::size_t i = 0; i < n_trace; ++i) {
            auto opts = atk.fgsm_options(derive_seed(seeds.attack, "trace-" + std::to_string(i)));
            opts.variant = variant;
            pred.push_back(model.predict(fgsm_perturb(model, parts.test[i], opts)));
        }
        report.trace.series.emplace_back(name, std::move(pred));
    }

    if (!cfg.sweep_epsilons.empty()) report.epsilon_sweep = sweep_epsilon(ctx, cfg.sweep_epsilons);
    if (!cfg.sweep_fractions.empty()) report.fraction_sweep = sweep_fraction(ctx, cfg.sweep_fractions);

    report.histograms = histogram_plot_data(ctx.data().records);
    report.correlation = correlation_plot_data(ctx.data().records);
    return report;
}

std::vector<SweepRow> sweep_epsilon(const ExperimentContext& ctx, const std::vector<double>& epsilons) {
    if (epsilons.empty()) throw ConfigError("epsilon sweep needs at least one value");
    std::vector<SweepRow> rows{{0.0, ctx.undefended()}};
    for (double eps : epsilons) {
        AttackConfig atk = ctx.config().attack;
        atk.epsilon = eps;
        atk.validate();
        rows.push_back({eps, ctx.attacked(atk)});
    }
    return rows;
}

std::vector<SweepRow> sweep_fraction(const ExperimentContext& ctx, const std::vector<double>& fractions) {
    if (fractions.empty()) throw ConfigError("fraction sweep needs at least one value");
    std::vector<SweepRow> rows{{0.0, ctx.undefended()}};
    for (double f : fractions) {
        AttackConfig atk = ctx.config().attack;
        atk.fraction = f;
        atk.validate();
        rows.push_back({f, ctx.attacked(atk)});
    }
    return rows;
}

}  // namespace advmimo
