#include <doctest.h>

#include <cmath>

#include "advmimo/detector.hpp"
#include "advmimo/errors.hpp"
#include "oracles.hpp"

using namespace advmimo;

namespace {

FeatureMatrix column(std::initializer_list<double> values) {
    FeatureMatrix x(0, 1);
    for (double v : values) {
        const double row[1] = {v};
        x.append_row(row);
    }
    return x;
}

// Two noisy Gaussian-ish blobs in 3-D.
void blobs(Rng& rng, std::size_t n, double gap, FeatureMatrix& x, std::vector<int>& y) {
    x = FeatureMatrix(0, 3);
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        double row[3];
        for (auto& v : row) v = rng.uniform(-1.0, 1.0) + rng.uniform(-1.0, 1.0) + gap * label;
        x.append_row(row);
        y.push_back(label);
    }
}

GbdtParams small(int trees, int depth, int leaves = 4, int min_leaf = 1) {
    GbdtParams p;
    p.n_estimators = trees;
    p.max_depth = depth;
    p.num_leaves = leaves;
    p.min_leaf = min_leaf;
    return p;
}

}  // namespace

TEST_CASE("classification metrics") {
    const std::vector<int> truth{1, 1, 1, 1, 0, 0};
    const std::vector<int> pred{1, 1, 1, 0, 1, 0};
    const auto m = classification_metrics(pred, truth);
    CHECK(m.tp == 3);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
    CHECK(*m.precision == doctest::Approx(0.75));
    CHECK(*m.recall == doctest::Approx(0.75));
    CHECK(*m.f1 == doctest::Approx(0.75));

    const auto perfect = classification_metrics(truth, truth);
    CHECK(*perfect.f1 == 1.0);

    const std::vector<int> zeros(4, 0);
    const auto none = classification_metrics(zeros, zeros);
    CHECK_FALSE(none.precision.has_value());
    CHECK_FALSE(none.recall.has_value());
    CHECK_FALSE(none.f1.has_value());
    CHECK(none.tn == 4);
    CHECK(metrics_to_json(none)["f1"].is_null());
}

TEST_CASE("bin thresholds") {
    const auto t = bin_thresholds({3.0, 1.0, 2.0, 2.0, 0.0}, 64);
    CHECK(t == std::vector<double>{0.5, 1.5, 2.5});
    std::vector<double> many;
    for (int i = 0; i < 1000; ++i) many.push_back(i);
    const auto thin = bin_thresholds(many, 10);
    CHECK(thin.size() <= 9);
    CHECK(std::is_sorted(thin.begin(), thin.end()));
    CHECK(bin_thresholds({4.0, 4.0}, 8).empty());
}

TEST_CASE("stump on a separable line") {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{0, 0, 1, 1};
    auto p = small(1, 1, 2, 1);
    const auto m = train_gbdt(x, y, p);
    CHECK(m.prior_logit == 0.0);
    const auto& root = m.trees[0].nodes[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold > 1.0);
    CHECK(root.threshold < 2.0);

    p.n_estimators = 30;
    p.learning_rate = 0.5;
    const auto fitted = train_gbdt(x, y, p);
    CHECK(predict_labels(fitted, x) == y);
}

TEST_CASE("prior and empty models") {
    GbdtModel m;
    m.feature_count = 2;
    const double row[2] = {0.0, 0.0};
    CHECK(m.predict_proba(row) == 0.5);
    m.prior_logit = 10.0;
    CHECK(m.predict_proba(row) > 0.9999);
    const double wrong[3] = {0, 0, 0};
    CHECK_THROWS_AS(m.predict_proba(wrong), DataError);
}

TEST_CASE("single-class labels are rejected") {
    const auto x = column({0, 1, 2, 3});
    CHECK_THROWS_AS(train_gbdt(x, std::vector<int>{0, 0, 0, 0}, small(1, 1, 2)), DataError);
    CHECK_THROWS_AS(train_gbdt(x, std::vector<int>{0, 0, 0, 1}, small(1, 1, 2)), DataError);
}

TEST_CASE("first tree equals the exhaustive oracle on small instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = oracle::random_tree_instance(rng);
        const auto model = train_gbdt(inst.x, inst.labels, inst.params);
        const auto expected = oracle::first_round_tree(inst);
        CHECK(oracle::same_tree(model.trees[0], 0, *expected));
    }
}

TEST_CASE("structural limits and monotone training loss") {
    Rng rng(6);
    FeatureMatrix x;
    std::vector<int> y;
    blobs(rng, 400, 1.2, x, y);
    GbdtParams p;
    p.n_estimators = 25;
    p.max_depth = 3;
    p.num_leaves = 6;
    p.min_leaf = 7;
    p.n_bins = 16;

    double last = 1e300;
    for (int rounds = 0; rounds <= 25; rounds += 5) {
        auto q = p;
        q.n_estimators = rounds;
        if (rounds == 0) continue;
        const double loss = logistic_loss(train_gbdt(x, y, q), x, y);
        CHECK(loss <= last);
        last = loss;
    }

    const auto m = train_gbdt(x, y, p);
    for (const auto& t : m.trees) {
        CHECK(t.leaf_count() <= 6);
        CHECK(t.depth() <= 3);
        for (const auto& n : t.nodes) {
            if (n.is_leaf()) CHECK(n.count >= 7);
        }
    }
}

TEST_CASE("training is deterministic per seed") {
    Rng rng(13);
    FeatureMatrix x;
    std::vector<int> y;
    blobs(rng, 300, 1.0, x, y);
    GbdtParams p = small(10, 4, 8, 5);
    p.subsample = 0.7;
    p.seed = 77;
    const auto a = gbdt_to_json(train_gbdt(x, y, p)).dump();
    const auto b = gbdt_to_json(train_gbdt(x, y, p)).dump();
    CHECK(a == b);
    p.seed = 78;
    CHECK(gbdt_to_json(train_gbdt(x, y, p)).dump() != a);

    const auto m = gbdt_from_json(nlohmann::json::parse(a));
    const auto orig = train_gbdt(x, y, [&] { auto q = p; q.seed = 77; return q; }());
    for (std::size_t r = 0; r < x.rows(); ++r) CHECK(m.predict_proba(x.row(r)) == orig.predict_proba(x.row(r)));
}

TEST_CASE("params validation") {
    GbdtParams p;
    p.max_depth = 2;
    p.num_leaves = 5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    CHECK_THROWS_AS(gbdt_params_from_json(nlohmann::json{{"subsample", 0.0}}), ConfigError);
    CHECK_THROWS_AS(gbdt_params_from_json(nlohmann::json{{"depth", 3}}), ConfigError);
    const auto q = gbdt_params_from_json(nlohmann::json{{"max_depth", 20}, {"n_estimators", 500}});
    CHECK(q.max_depth == 20);
    CHECK(gbdt_params_from_json(gbdt_params_to_json(q)) == q);
}

TEST_CASE("stratified folds") {
    std::vector<int> y(30, 0);
    for (int i = 0; i < 12; ++i) y[static_cast<std::size_t>(i * 2)] = 1;
    const auto f = stratified_folds(y, 3, 1);
    for (int k = 0; k < 3; ++k) {
        int pos = 0, neg = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (f[i] == k) (y[i] ? pos : neg)++;
        }
        CHECK(pos == 4);
        CHECK(neg == 6);
    }
    CHECK(stratified_folds(y, 3, 1) == f);
    CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, 0, 0, 0}, 2, 1), DataError);
}

TEST_CASE("grid search tie rules") {
    Rng rng(3);
    FeatureMatrix x;
    std::vector<int> y;
    blobs(rng, 120, 20.0, x, y);  // separable

    const auto one = grid_search(x, y, {small(5, 2)}, 3, 9);
    CHECK(one.best == small(5, 2));

    const auto depth = grid_search(x, y, {small(5, 3, 4), small(5, 1, 2)}, 3, 9);
    CHECK(depth.mean_f1[0] == 1.0);
    CHECK(depth.mean_f1[1] == 1.0);
    CHECK(depth.best.max_depth == 1);

    const auto trees = grid_search(x, y, {small(20, 2), small(5, 2)}, 3, 9);
    CHECK(trees.best.n_estimators == 5);
}

TEST_CASE("logistic baseline") {
    const auto x = column({-3, -2, -1, 1, 2, 3});
    const std::vector<int> y{0, 0, 0, 1, 1, 1};
    const auto fitted = train_logistic_baseline(x, y, 500, 0.5);
    CHECK(predict_labels(fitted, x) == y);
    for (std::size_t i = 1; i < fitted.loss_trace.size(); ++i) CHECK(fitted.loss_trace[i] <= fitted.loss_trace[i - 1]);

    const std::vector<int> skewed{0, 0, 0, 0, 1, 1};
    const auto flat = train_logistic_baseline(x, skewed, 0, 0.5);
    for (std::size_t r = 0; r < x.rows(); ++r) CHECK(flat.predict_proba(x.row(r)) == doctest::Approx(2.0 / 6.0));
}
