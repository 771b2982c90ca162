// advmimo: synthetic mmWave datasets, pathloss regression, adversarial
// poisoning, and poison detection from the command line.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data error.
// Seed precedence: --seed flag, then the config file's "seed", then a fixed default.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "advmimo/attacks.hpp"
#include "advmimo/channel_sim.hpp"
#include "advmimo/dataset.hpp"
#include "advmimo/detector.hpp"
#include "advmimo/errors.hpp"
#include "advmimo/pipeline.hpp"
#include "advmimo/regression.hpp"

namespace fs = std::filesystem;
using namespace advmimo;

namespace {

nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw DataError("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty number list");
    return out;
}

SplitSpec split_from_flag(const std::string& text, std::uint64_t seed) {
    SplitSpec spec;
    if (!text.empty()) {
        const auto v = parse_list(text);
        if (v.size() != 3) throw ConfigError("--split needs three ratios");
        spec.train = v[0];
        spec.poison_pool = v[1];
        spec.test = v[2];
    }
    spec.seed = StageSeeds::from(seed).split;
    spec.validate();
    return spec;
}

struct Options {
    std::string scene, data, out, model, config, grid, report, kind, pool, eval, split, epsilons, fractions, tables;
    std::optional<std::uint64_t> seed;
    bool all = false;
    bool no_standardize = false;
    int k_folds = 3;
    unsigned threads = 0;
    std::size_t bins = 30;
};

int cmd_generate(const Options& o) {
    auto scene = load_scenario(o.scene);
    if (o.seed) {
        // re-read so the seed also drives random building placement
        auto j = read_json(o.scene);
        j["seed"] = *o.seed;
        scene = scenario_from_json(j);
    }
    const auto gen = generate_scenario(scene, o.threads);
    save_csv(gen.records, o.out);
    std::size_t los = 0;
    for (const auto& r : gen.records) los += static_cast<std::size_t>(r.los);
    std::cout << "records " << gen.records.size() << " (los " << los << ", nlos " << gen.records.size() - los
              << "), blocked " << gen.blocked_users << ", inside buildings " << gen.users_inside_buildings << '\n';
    return 0;
}

RecordSet training_part(const RecordSet& data, const Options& o, bool want_test) {
    if (o.all) return data;
    const auto parts = split(data, split_from_flag(o.split, o.seed.value_or(kDefaultSeed)));
    return want_test ? parts.test : parts.train;
}

int cmd_train(const Options& o) {
    const auto data = load_csv(o.data);
    const auto model = fit_least_squares(training_part(data, o, false), !o.no_standardize);
    write_json(o.out, model_to_json(model));
    std::cout << "fitted on " << (o.all ? data.size() : split_sizes(data.size(), split_from_flag(o.split, 0))[0])
              << " records" << (model.ridge_fallback ? " (ridge fallback)" : "") << '\n';
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto data = load_csv(o.data);
    const auto model = model_from_json(read_json(o.model));
    const auto metrics = regression_metrics_to_json(evaluate(model, training_part(data, o, true)));
    if (!o.out.empty()) write_json(o.out, metrics);
    std::cout << metrics.dump() << '\n';
    return 0;
}

int cmd_attack(const Options& o) {
    const auto data = load_csv(o.data);
    const auto model = model_from_json(read_json(o.model));
    auto config = load_attack_config(o.config);
    if (o.seed) config.seed = *o.seed;
    std::optional<RecordSet> pool;
    if (!o.pool.empty()) pool = load_csv(o.pool);
    const auto poisoned = poison(data, model, config, pool ? &*pool : nullptr);
    save_labeled_csv(poisoned.records, poisoned.labels, o.out);
    std::cout << "poisoned " << poisoned.poisoned_count() << " of " << poisoned.records.size() << " records";
    if (!poisoned.skipped.empty()) std::cout << " (" << poisoned.skipped.size() << " victims skipped: no donor)";
    std::cout << '\n';
    return 0;
}

int cmd_detect(const Options& o) {
    const auto train = load_labeled_csv(o.data);
    const auto grid_json = read_json(o.grid);
    const auto& grid_list = grid_json.is_object() ? grid_json.at("grid") : grid_json;
    int k_folds = o.k_folds;
    if (grid_json.is_object()) k_folds = grid_json.value("k_folds", k_folds);
    const std::uint64_t seed = o.seed.value_or(grid_json.is_object() ? grid_json.value("seed", kDefaultSeed) : kDefaultSeed);

    std::vector<GbdtParams> grid;
    for (const auto& g : grid_list) {
        auto p = gbdt_params_from_json(g);
        p.seed = StageSeeds::from(seed).gbdt;
        grid.push_back(p);
    }
    const auto x = FeatureMatrix::from_records(train.records);
    const auto search = grid_search(x, train.labels, grid, k_folds, StageSeeds::from(seed).cv);
    const auto model = train_gbdt(x, train.labels, search.best);

    nlohmann::json out = {{"params", gbdt_params_to_json(search.best)},
                          {"cv_mean_f1", search.mean_f1},
                          {"model", gbdt_to_json(model)}};
    if (!o.eval.empty()) {
        const auto test = load_labeled_csv(o.eval);
        const auto predicted = predict_labels(model, FeatureMatrix::from_records(test.records));
        out["eval"] = metrics_to_json(classification_metrics(predicted, test.labels));
        std::cout << out["eval"].dump() << '\n';
    }
    write_json(o.out, out);
    return 0;
}

int cmd_experiment(const Options& o) {
    const auto config = load_experiment_config(o.config, o.seed);
    const auto report = report_to_json(run_experiment(config));
    write_json(o.out, report);
    const auto tables = render_tables(report);
    if (!o.tables.empty()) write_text(o.tables, tables);
    std::cout << tables;
    return 0;
}

int cmd_sweep(const Options& o) {
    const auto config = load_experiment_config(o.config, o.seed);
    const ExperimentContext ctx(config);
    nlohmann::json out;
    if (!o.epsilons.empty() || o.fractions.empty()) {
        const auto eps = o.epsilons.empty() ? (config.sweep_epsilons.empty() ? default_epsilon_sweep() : config.sweep_epsilons)
                                            : parse_list(o.epsilons);
        out["epsilon_sweep"] = sweep_to_json(sweep_epsilon(ctx, eps), "epsilon");
    }
    if (!o.fractions.empty()) out["fraction_sweep"] = sweep_to_json(sweep_fraction(ctx, parse_list(o.fractions)), "fraction");
    out["provenance"] = {{"config_hash", hash_json(config.to_json())}, {"seed", config.seed}};
    if (!o.out.empty()) write_json(o.out, out);
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_plot_data(const Options& o) {
    const auto kind = plot_kind_from_string(o.kind);
    nlohmann::json out;
    if (!o.report.empty()) {
        out = emit_plot_data(read_json(o.report), kind);
    } else if (!o.data.empty()) {
        const auto data = load_csv(o.data);
        if (kind == PlotKind::histogram) {
            out = histogram_plot_data(data, o.bins);
        } else if (kind == PlotKind::correlation) {
            out = correlation_plot_data(data);
        } else {
            throw ConfigError("plot kind '" + o.kind + "' needs --report");
        }
    } else {
        throw ConfigError("plot-data needs --report or --data");
    }
    if (!o.out.empty()) {
        write_json(o.out, out);
    } else {
        std::cout << out.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial robustness experiments for pathloss regression on synthetic mmWave MIMO data"};
    app.require_subcommand(1);
    Options o;

    const auto seed_flag = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { o.seed = s; }, "Seed (overrides config)");
    };

    auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario dataset");
    gen->add_option("--scene", o.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", o.out, "Output CSV")->required();
    gen->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    seed_flag(gen);

    auto* train = app.add_subcommand("train", "Fit the least-squares pathloss model");
    train->add_option("--data", o.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--out", o.out, "Output model JSON")->required();
    train->add_option("--split", o.split, "train,poison_pool,test ratios (default 0.4,0.4,0.2)");
    train->add_flag("--all", o.all, "Fit on every record instead of the train split");
    train->add_flag("--no-standardize", o.no_standardize, "Fit on raw feature units");
    seed_flag(train);

    auto* eval = app.add_subcommand("evaluate", "MSE and R^2 of a model on the test split");
    eval->add_option("--data", o.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", o.split, "train,poison_pool,test ratios");
    eval->add_option("--out", o.out, "Metrics JSON");
    eval->add_flag("--all", o.all, "Evaluate on every record");
    seed_flag(eval);

    auto* attack = app.add_subcommand("attack", "Poison a dataset against a fitted model");
    attack->add_option("--data", o.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    attack->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
    attack->add_option("--config", o.config, "Attack config JSON")->required()->check(CLI::ExistingFile);
    attack->add_option("--out", o.out, "Poisoned CSV with is_poisoned column")->required();
    attack->add_option("--pool", o.pool, "Donor pool CSV for the distance attack")->check(CLI::ExistingFile);
    seed_flag(attack);

    auto* detect = app.add_subcommand("detect", "Grid-search and train the poison detector");
    detect->add_option("--train", o.data, "Labelled CSV (is_poisoned column)")->required()->check(CLI::ExistingFile);
    detect->add_option("--grid", o.grid, "Grid JSON: list of GBDT params, or {\"grid\": [...], \"k_folds\": k}")
        ->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--out", o.out, "Detector JSON")->required();
    detect->add_option("--k-folds", o.k_folds, "Cross-validation folds");
    detect->add_option("--eval", o.eval, "Labelled CSV to score the trained detector on")->check(CLI::ExistingFile);
    seed_flag(detect);

    auto* exp = app.add_subcommand("experiment", "Run the Undefended / Attacked / Secured experiment");
    exp->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", o.out, "Report JSON")->required();
    exp->add_option("--tables", o.tables, "Also write the text tables here");
    seed_flag(exp);

    auto* sweep = app.add_subcommand("sweep", "Attacked-scenario metrics across epsilon or fract");
    sweep->add_option("--config", o.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--epsilons", o.epsilons, "Comma-separated epsilon values");
    sweep->add_option("--fractions", o.fractions, "Comma-separated fract values");
    sweep->add_option("--out", o.out, "Sweep JSON");
    seed_flag(sweep);

    auto* plot = app.add_subcommand("plot-data", "Export plot series as JSON");
    plot->add_option("--report", o.report, "Report JSON")->check(CLI::ExistingFile);
    plot->add_option("--data", o.data, "Dataset CSV (histogram, correlation)")->check(CLI::ExistingFile);
    plot->add_option("--kind", o.kind, "histogram | correlation | scenario_trace | sweep")->required();
    plot->add_option("--bins", o.bins, "Histogram bins");
    plot->add_option("--out", o.out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) return cmd_generate(o);
        if (*train) return cmd_train(o);
        if (*eval) return cmd_evaluate(o);
        if (*attack) return cmd_attack(o);
        if (*detect) return cmd_detect(o);
        if (*exp) return cmd_experiment(o);
        if (*sweep) return cmd_sweep(o);
        if (*plot) return cmd_plot_data(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
