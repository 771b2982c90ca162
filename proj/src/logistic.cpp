#include <cmath>

#include "advmimo/detector.hpp"
#include "advmimo/errors.hpp"

namespace advmimo {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

}  // namespace

double LogisticModel::predict_proba(std::span<const double> row) const {
    if (row.size() != weights.size()) throw DataError("logistic baseline: feature count mismatch");
    double s = bias;
    for (std::size_t j = 0; j < row.size(); ++j) s += weights[j] * (row[j] - mean[j]) / scale[j];
    return sigmoid(s);
}

LogisticModel train_logistic_baseline(const FeatureMatrix& x, std::span<const int> labels, int iterations,
                                      double step) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n == 0 || labels.size() != n) throw DataError("logistic baseline: need labelled rows");
    if (iterations < 0 || !(step > 0.0)) throw ConfigError("logistic baseline: iterations >= 0 and step > 0");

    LogisticModel m;
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 1.0);
    m.weights.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x.at(i, j);
        m.mean[j] = s / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (x.at(i, j) - m.mean[j]) * (x.at(i, j) - m.mean[j]);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        m.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    std::vector<double> z(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (x.at(i, j) - m.mean[j]) / m.scale[j];
    }

    double positives = 0.0;
    for (int y : labels) positives += y;
    const double p = positives / static_cast<double>(n);
    // start from the base rate; a single-class set stays pinned near it
    m.bias = p <= 0.0 ? -30.0 : (p >= 1.0 ? 30.0 : std::log(p / (1.0 - p)));

    std::vector<double> grad(d);
    const auto loss_and_grad = [&](bool want_grad) {
        double loss = 0.0;
        double grad_b = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = m.bias;
            for (std::size_t j = 0; j < d; ++j) s += m.weights[j] * z[i * d + j];
            loss += softplus(labels[i] == 1 ? -s : s);
            if (want_grad) {
                const double r = sigmoid(s) - labels[i];
                grad_b += r;
                for (std::size_t j = 0; j < d; ++j) grad[j] += r * z[i * d + j];
            }
        }
        return std::pair{loss / static_cast<double>(n), grad_b / static_cast<double>(n)};
    };

    for (int it = 0; it < iterations; ++it) {
        const auto [loss, grad_b] = loss_and_grad(true);
        m.loss_trace.push_back(loss);
        m.bias -= step * grad_b;
        for (std::size_t j = 0; j < d; ++j) m.weights[j] -= step * grad[j] / static_cast<double>(n);
    }
    m.loss_trace.push_back(loss_and_grad(false).first);
    return m;
}

std::vector<int> predict_labels(const LogisticModel& model, const FeatureMatrix& features, double threshold) {
    std::vector<int> out(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) out[i] = model.predict_proba(features.row(i)) >= threshold;
    return out;
}

}  // namespace advmimo
