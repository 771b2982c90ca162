#include <algorithm>
#include <cmath>

#include "advmimo/detector.hpp"
#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

namespace {

constexpr double kGainTolerance = 1e-10;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double midpoint(double a, double b) {
    const double m = 0.5 * (a + b);
    return m >= b ? a : m;
}

struct BinnedData {
    std::size_t rows = 0;
    std::vector<std::vector<double>> thresholds;  // per feature
    std::vector<std::size_t> offset;              // first histogram slot of each feature
    std::vector<std::uint16_t> bins;              // column-major: bins[f * rows + r]
    std::size_t total_bins = 0;

    std::size_t bin_count(std::size_t f) const { return thresholds[f].size() + 1; }
    std::uint16_t bin(std::size_t f, std::size_t r) const { return bins[f * rows + r]; }
};

BinnedData bin_features(const FeatureMatrix& x, int n_bins) {
    BinnedData b;
    b.rows = x.rows();
    b.thresholds.resize(x.cols());
    b.offset.resize(x.cols());
    b.bins.resize(x.rows() * x.cols());
    std::vector<double> column(x.rows());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        for (std::size_t r = 0; r < x.rows(); ++r) column[r] = x.at(r, f);
        b.thresholds[f] = bin_thresholds(column, n_bins);
        const auto& t = b.thresholds[f];
        b.offset[f] = b.total_bins;
        b.total_bins += t.size() + 1;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            b.bins[f * x.rows() + r] =
                static_cast<std::uint16_t>(std::lower_bound(t.begin(), t.end(), column[r]) - t.begin());
        }
    }
    return b;
}

struct Split {
    double gain = 0.0;
    int feature = -1;
    int bin = -1;
};

struct OpenLeaf {
    int node = 0;
    std::vector<std::uint32_t> rows;
    double g = 0.0;
    double h = 0.0;
    int depth = 0;
    Split best;
};

class TreeGrower {
public:
    TreeGrower(const BinnedData& data, const std::vector<double>& grad, const std::vector<double>& hess,
               const GbdtParams& params)
        : data_(data), grad_(grad), hess_(hess), params_(params),
          hist_g_(data.total_bins), hist_h_(data.total_bins), hist_c_(data.total_bins) {}

    Tree grow(std::vector<std::uint32_t> rows) {
        Tree tree;
        tree.nodes.push_back({});
        std::vector<OpenLeaf> leaves;
        leaves.push_back(make_leaf(0, std::move(rows), 0));

        while (static_cast<int>(leaves.size()) < params_.num_leaves) {
            // best-first: largest gain, earliest-created leaf on ties
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].best.feature < 0) continue;
                if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain ||
                    (leaves[i].best.gain == leaves[pick].best.gain && leaves[i].node < leaves[pick].node)) {
                    pick = i;
                }
            }
            if (pick == leaves.size()) break;

            OpenLeaf parent = std::move(leaves[pick]);
            leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
            const auto f = static_cast<std::size_t>(parent.best.feature);
            const auto split_bin = static_cast<std::uint16_t>(parent.best.bin);

            std::vector<std::uint32_t> left_rows;
            std::vector<std::uint32_t> right_rows;
            for (auto r : parent.rows) {
                (data_.bin(f, r) <= split_bin ? left_rows : right_rows).push_back(r);
            }
            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
            node.feature = parent.best.feature;
            node.threshold = data_.thresholds[f][split_bin];
            node.left = left;
            node.right = right;
            leaves.push_back(make_leaf(left, std::move(left_rows), parent.depth + 1));
            leaves.push_back(make_leaf(right, std::move(right_rows), parent.depth + 1));
            finished_.push_back(std::move(parent));
        }
        for (auto& leaf : leaves) finished_.push_back(std::move(leaf));

        for (const auto& leaf : finished_) {
            auto& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
            node.count = leaf.rows.size();
            node.depth = leaf.depth;
            node.value = leaf.h + params_.l2_leaf > 0.0 ? -leaf.g / (leaf.h + params_.l2_leaf) : 0.0;
        }
        finished_.clear();
        return tree;
    }

private:
    OpenLeaf make_leaf(int node, std::vector<std::uint32_t> rows, int depth) {
        OpenLeaf leaf;
        leaf.node = node;
        leaf.depth = depth;
        for (auto r : rows) {
            leaf.g += grad_[r];
            leaf.h += hess_[r];
        }
        leaf.rows = std::move(rows);
        if (depth < params_.max_depth && leaf.rows.size() >= 2 * static_cast<std::size_t>(params_.min_leaf)) {
            leaf.best = best_split(leaf);
        }
        return leaf;
    }

    Split best_split(const OpenLeaf& leaf) {
        std::fill(hist_g_.begin(), hist_g_.end(), 0.0);
        std::fill(hist_h_.begin(), hist_h_.end(), 0.0);
        std::fill(hist_c_.begin(), hist_c_.end(), 0U);
        const std::size_t n_features = data_.thresholds.size();
        for (std::size_t f = 0; f < n_features; ++f) {
            const std::size_t base = data_.offset[f];
            const std::uint16_t* col = data_.bins.data() + f * data_.rows;
            for (auto r : leaf.rows) {
                const std::size_t slot = base + col[r];
                hist_g_[slot] += grad_[r];
                hist_h_[slot] += hess_[r];
                ++hist_c_[slot];
            }
        }

        const double lambda = params_.l2_leaf;
        const double parent_score = leaf.g * leaf.g / (leaf.h + lambda);
        const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
        const std::size_t total = leaf.rows.size();
        Split best;
        for (std::size_t f = 0; f < n_features; ++f) {
            const std::size_t base = data_.offset[f];
            double gl = 0.0;
            double hl = 0.0;
            std::size_t cl = 0;
            for (std::size_t k = 0; k + 1 < data_.bin_count(f); ++k) {
                gl += hist_g_[base + k];
                hl += hist_h_[base + k];
                cl += hist_c_[base + k];
                if (cl < min_leaf) continue;
                if (total - cl < min_leaf) break;
                const double gr = leaf.g - gl;
                const double hr = leaf.h - hl;
                const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score;
                // gains equal up to summation rounding are ties, kept by the earlier candidate
                if (gain > best.gain + kGainTolerance * (std::abs(best.gain) + parent_score)) {
                    best = {gain, static_cast<int>(f), static_cast<int>(k)};
                }
            }
        }
        return best;
    }

    const BinnedData& data_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const GbdtParams& params_;
    std::vector<double> hist_g_;
    std::vector<double> hist_h_;
    std::vector<std::uint32_t> hist_c_;
    std::vector<OpenLeaf> finished_;
};

const char* kParamNames[] = {"n_estimators", "learning_rate", "max_depth", "num_leaves", "subsample",
                             "min_leaf",     "n_bins",        "l2_leaf",   "seed"};

nlohmann::json tree_to_json(const Tree& tree, int node) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.is_leaf()) return {{"leaf", n.value}, {"count", n.count}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"count", n.count},
            {"left", tree_to_json(tree, n.left)},
            {"right", tree_to_json(tree, n.right)}};
}

int tree_from_json(Tree& tree, const nlohmann::json& j, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    TreeNode n;
    n.depth = depth;
    n.count = j.value("count", std::size_t{0});
    if (j.contains("leaf")) {
        n.value = j.at("leaf").get<double>();
    } else {
        n.feature = j.at("feature").get<int>();
        n.threshold = j.at("threshold").get<double>();
        if (n.feature < 0) throw ConfigError("detector JSON: negative feature index");
        n.left = tree_from_json(tree, j.at("left"), depth + 1);
        n.right = tree_from_json(tree, j.at("right"), depth + 1);
    }
    tree.nodes[static_cast<std::size_t>(id)] = n;
    return id;
}

}  // namespace

// ---------------------------------------------------------------------------

void FeatureMatrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw DataError("feature row has the wrong width");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out(0, cols_);
    out.data_.reserve(rows.size() * cols_);
    for (auto r : rows) out.append_row(row(r));
    return out;
}

FeatureMatrix FeatureMatrix::from_records(const RecordSet& set) {
    FeatureMatrix m(set.size(), kColumnCount);
    for (std::size_t r = 0; r < set.size(); ++r) {
        const auto v = set[r].values();
        std::copy(v.begin(), v.end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * kColumnCount));
    }
    return m;
}

void GbdtParams::validate() const {
    if (n_estimators < 1) throw ConfigError("n_estimators must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
    if (num_leaves < 2) throw ConfigError("num_leaves must be >= 2");
    if (max_depth < 31 && num_leaves > (1 << max_depth)) throw ConfigError("num_leaves must be <= 2^max_depth");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must be in (0, 1]");
    if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
    if (n_bins < 2 || n_bins > 65535) throw ConfigError("n_bins must be in [2, 65535]");
    if (!(l2_leaf >= 0.0)) throw ConfigError("l2_leaf must be >= 0");
}

GbdtParams gbdt_params_from_json(const nlohmann::json& j, const GbdtParams& defaults) {
    try {
        if (!j.is_object()) throw ConfigError("GBDT params must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (std::find_if(std::begin(kParamNames), std::end(kParamNames),
                             [&](const char* n) { return key == n; }) == std::end(kParamNames)) {
                throw ConfigError("unknown GBDT parameter '" + key + "'");
            }
        }
        GbdtParams p = defaults;
        p.n_estimators = j.value("n_estimators", p.n_estimators);
        p.learning_rate = j.value("learning_rate", p.learning_rate);
        p.max_depth = j.value("max_depth", p.max_depth);
        p.num_leaves = j.value("num_leaves", p.num_leaves);
        p.subsample = j.value("subsample", p.subsample);
        p.min_leaf = j.value("min_leaf", p.min_leaf);
        p.n_bins = j.value("n_bins", p.n_bins);
        p.l2_leaf = j.value("l2_leaf", p.l2_leaf);
        p.seed = j.value("seed", p.seed);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("GBDT params: ") + e.what());
    }
}

nlohmann::json gbdt_params_to_json(const GbdtParams& p) {
    return {{"n_estimators", p.n_estimators}, {"learning_rate", p.learning_rate}, {"max_depth", p.max_depth},
            {"num_leaves", p.num_leaves},     {"subsample", p.subsample},         {"min_leaf", p.min_leaf},
            {"n_bins", p.n_bins},             {"l2_leaf", p.l2_leaf},             {"seed", p.seed}};
}

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

double GbdtModel::raw_score(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return prior_logit + learning_rate * sum;
}

double GbdtModel::predict_proba(std::span<const double> row) const {
    if (row.size() != feature_count) {
        throw DataError("detector expects " + std::to_string(feature_count) + " features, got " +
                        std::to_string(row.size()));
    }
    return sigmoid(raw_score(row));
}

std::vector<double> bin_thresholds(std::vector<double> values, int n_bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> distinct;
    for (double v : values) {
        if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    }
    std::vector<double> out;
    if (distinct.size() <= 1) return out;
    if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) out.push_back(midpoint(distinct[i], distinct[i + 1]));
        return out;
    }
    const std::size_t n = values.size();
    for (int b = 1; b < n_bins; ++b) {
        const double q = values[static_cast<std::size_t>(b) * n / static_cast<std::size_t>(n_bins)];
        const auto it = std::lower_bound(distinct.begin(), distinct.end(), q);
        if (it == distinct.begin()) continue;
        const double t = midpoint(*(it - 1), q);
        if (out.empty() || t > out.back()) out.push_back(t);
    }
    return out;
}

GbdtModel train_gbdt(const FeatureMatrix& features, std::span<const int> labels, const GbdtParams& params) {
    params.validate();
    const std::size_t n = features.rows();
    if (labels.size() != n) throw DataError("label count does not match feature rows");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives < 2 || n - positives < 2) {
        throw DataError("single-class labels: need at least 2 rows of each class (got " + std::to_string(positives) +
                        " poisoned, " + std::to_string(n - positives) + " benign)");
    }

    GbdtModel model;
    const double base_rate = static_cast<double>(positives) / static_cast<double>(n);
    model.prior_logit = std::log(base_rate / (1.0 - base_rate));
    model.learning_rate = params.learning_rate;
    model.feature_count = features.cols();

    const BinnedData data = bin_features(features, params.n_bins);
    std::vector<double> logits(n, model.prior_logit);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    TreeGrower grower(data, grad, hess, params);
    Rng rng(params.seed);
    const auto sample_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));

    std::vector<std::uint32_t> rows(n);
    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(logits[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (1.0 - p);
        }
        if (sample_size < n) {
            const auto picked = rng.sample_indices(n, sample_size);
            rows.assign(picked.begin(), picked.end());
        } else {
            rows.resize(n);
            for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
        }
        Tree tree = grower.grow(rows);
        for (std::size_t i = 0; i < n; ++i) logits[i] += params.learning_rate * tree.predict(features.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double logistic_loss(const GbdtModel& model, const FeatureMatrix& features, std::span<const int> labels) {
    double loss = 0.0;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const double s = model.raw_score(features.row(i));
        // log(1 + exp(-s)) for y = 1, log(1 + exp(s)) for y = 0
        const double m = labels[i] == 1 ? -s : s;
        loss += m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    }
    return loss / static_cast<double>(features.rows());
}

std::vector<int> predict_labels(const GbdtModel& model, const FeatureMatrix& features, double threshold) {
    std::vector<int> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out[i] = model.predict_proba(features.row(i)) >= threshold;
    return out;
}

nlohmann::json gbdt_to_json(const GbdtModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(tree_to_json(t, 0));
    return {{"prior_logit", model.prior_logit},
            {"learning_rate", model.learning_rate},
            {"feature_count", model.feature_count},
            {"trees", trees}};
}

GbdtModel gbdt_from_json(const nlohmann::json& j) {
    try {
        GbdtModel m;
        m.prior_logit = j.at("prior_logit").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.feature_count = j.at("feature_count").get<std::size_t>();
        for (const auto& t : j.at("trees")) {
            Tree tree;
            tree_from_json(tree, t, 0);
            for (const auto& node : tree.nodes) {
                if (!node.is_leaf() && static_cast<std::size_t>(node.feature) >= m.feature_count) {
                    throw ConfigError("detector JSON: feature index out of range");
                }
            }
            m.trees.push_back(std::move(tree));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("detector JSON: ") + e.what());
    }
}

}  // namespace advmimo
