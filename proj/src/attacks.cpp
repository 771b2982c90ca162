#include "advmimo/attacks.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Applies a standardized-space step in original units, so untouched features
// keep their exact bits. With `replace`, the step is the new standardized value.
Record apply_step(const LinearModel& model, const Record& original, const FeatureVector& step, bool replace) {
    auto x = features_of(original);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (replace) {
            x[i] = step[i] * model.scaler.std[i] + model.scaler.mean[i];
        } else if (step[i] != 0.0) {
            x[i] += step[i] * model.scaler.std[i];
        }
    }
    Record out = original;
    assign_features(out, x);
    out.los = std::clamp(out.los, 0, 1);
    out.pathloss = original.pathloss;
    return out;
}

template <typename E>
E enum_from(const nlohmann::json& j, const char* key, E fallback,
            std::initializer_list<std::pair<const char*, E>> names) {
    if (!j.contains(key)) return fallback;
    const auto s = j.at(key).get<std::string>();
    for (const auto& [name, value] : names) {
        if (s == name) return value;
    }
    throw ConfigError(std::string("attack config: unknown ") + key + " '" + s + "'");
}

}  // namespace

void AttackConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be > 0");
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("attack fraction must be in [0, 1]");
    if (lowprofool.steps < 0) throw ConfigError("lowprofool steps must be >= 0");
    if (!(lowprofool.trade_off >= 0.0)) throw ConfigError("lowprofool trade_off must be >= 0");
    if (!lowprofool.feature_weights.empty() && lowprofool.feature_weights.size() != kFeatureCount) {
        throw ConfigError("lowprofool feature_weights needs one entry per feature");
    }
    for (double v : lowprofool.feature_weights) {
        if (!(v >= 0.0)) throw ConfigError("lowprofool feature_weights must be >= 0");
    }
    if (!(distance_delta >= 0.0)) throw ConfigError("distance delta must be >= 0");
}

FgsmOptions AttackConfig::fgsm_options(std::uint64_t fluctuation_seed) const {
    return {epsilon, scaling, fgsm_variant, replace_form, fluctuation_seed};
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
    try {
        AttackConfig c;
        c.method = enum_from(j, "method", c.method,
                             {{"fgsm", AttackMethod::fgsm},
                              {"distance", AttackMethod::distance},
                              {"lowprofool", AttackMethod::lowprofool}});
        c.epsilon = j.value("epsilon", c.epsilon);
        c.fraction = j.value("fraction", c.fraction);
        c.scaling = enum_from(j, "scaling", c.scaling,
                              {{"absolute", EpsilonScaling::absolute},
                               {"feature_scaled", EpsilonScaling::feature_scaled}});
        c.fgsm_variant = enum_from(j, "fgsm_variant", c.fgsm_variant,
                                   {{"plain", FgsmVariant::plain},
                                    {"fluctuation", FgsmVariant::fluctuation},
                                    {"maximize", FgsmVariant::maximize}});
        c.replace_form = j.value("replace_form", c.replace_form);
        c.seed = j.value("seed", c.seed);
        if (j.contains("lowprofool")) {
            const auto& l = j.at("lowprofool");
            c.lowprofool.steps = l.value("steps", c.lowprofool.steps);
            c.lowprofool.step_size = l.value("step_size", c.lowprofool.step_size);
            c.lowprofool.trade_off = l.value("trade_off", c.lowprofool.trade_off);
            c.lowprofool.feature_weights = l.value("feature_weights", c.lowprofool.feature_weights);
        }
        if (j.contains("distance")) c.distance_delta = j.at("distance").value("delta", c.distance_delta);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("attack config: ") + e.what());
    }
}

nlohmann::json attack_config_to_json(const AttackConfig& c) {
    static constexpr const char* methods[] = {"fgsm", "distance", "lowprofool"};
    static constexpr const char* scalings[] = {"absolute", "feature_scaled"};
    static constexpr const char* variants[] = {"plain", "fluctuation", "maximize"};
    return {
        {"method", methods[static_cast<int>(c.method)]},
        {"epsilon", c.epsilon},
        {"fraction", c.fraction},
        {"scaling", scalings[static_cast<int>(c.scaling)]},
        {"fgsm_variant", variants[static_cast<int>(c.fgsm_variant)]},
        {"replace_form", c.replace_form},
        {"lowprofool",
         {{"steps", c.lowprofool.steps},
          {"step_size", c.lowprofool.step_size},
          {"trade_off", c.lowprofool.trade_off},
          {"feature_weights", c.lowprofool.feature_weights}}},
        {"distance", {{"delta", c.distance_delta}}},
        {"seed", c.seed},
    };
}

AttackConfig load_attack_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open attack config: " + path.string());
    try {
        return attack_config_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("attack config " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

Record fgsm_perturb(const LinearModel& model, const Record& record, const FgsmOptions& opt) {
    if (!(opt.epsilon > 0.0)) throw ConfigError("fgsm epsilon must be > 0");
    FeatureVector direction{};
    if (opt.variant == FgsmVariant::maximize) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) direction[i] = sign(model.weights[i]);
    } else {
        const auto grad = loss_gradient_wrt_input(model, record, record.pathloss);
        for (std::size_t i = 0; i < kFeatureCount; ++i) direction[i] = sign(grad[i]);
        if (opt.variant == FgsmVariant::fluctuation) {
            Rng rng(opt.fluctuation_seed);
            for (auto& d : direction) {
                if (rng.next() & 1U) d = -d;
            }
        }
    }

    FeatureVector step{};
    step.fill(opt.epsilon);
    if (opt.scaling == EpsilonScaling::feature_scaled) {
        const auto range = model.scaler.standardized_range();
        for (std::size_t i = 0; i < kFeatureCount; ++i) step[i] *= range[i];
    }

    for (std::size_t i = 0; i < kFeatureCount; ++i) step[i] *= direction[i];
    return apply_step(model, record, step, opt.replace_form);
}

Record distance_based_attack(const Scaler& scaler, const Record& victim, const RecordSet& pool, double delta) {
    const auto zv = scaler.transform(features_of(victim));
    double best = std::numeric_limits<double>::infinity();
    const Record* donor = nullptr;
    for (const auto& cand : pool) {
        if (std::abs(cand.pathloss - victim.pathloss) < delta) continue;
        const auto zc = scaler.transform(features_of(cand));
        double d2 = 0.0;
        for (std::size_t i = 0; i < kFeatureCount; ++i) d2 += (zc[i] - zv[i]) * (zc[i] - zv[i]);
        if (d2 < best) {
            best = d2;
            donor = &cand;
        }
    }
    if (donor == nullptr) {
        throw DataError("distance attack: no pool record differs by >= " + format_double(delta) + " dB");
    }
    Record out = *donor;
    out.pathloss = victim.pathloss;
    return out;
}

Record lowprofool_perturb(const LinearModel& model, const Record& record, const LowProFoolOptions& opt) {
    if (opt.steps < 0) throw ConfigError("lowprofool steps must be >= 0");
    if (!opt.feature_weights.empty() && opt.feature_weights.size() != kFeatureCount) {
        throw ConfigError("lowprofool feature_weights needs one entry per feature");
    }
    FeatureVector v{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        v[i] = opt.feature_weights.empty() ? 1.0 : opt.feature_weights[i];
    }

    FeatureVector r{};
    for (int t = 0; t < opt.steps; ++t) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < kFeatureCount; ++i) norm2 += v[i] * v[i] * r[i] * r[i];
        const double norm = std::sqrt(norm2);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            // d||v.r||/dr, taken as 0 at r = 0
            const double penalty = norm > 0.0 ? v[i] * v[i] * r[i] / norm : 0.0;
            r[i] += opt.step_size * (model.weights[i] - opt.trade_off * penalty);
        }
    }

    return apply_step(model, record, r, false);
}

std::size_t PoisonedSet::poisoned_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t victim_count(std::size_t n, double fraction) {
    return std::min(n, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
}

PoisonedSet poison(const RecordSet& set, const LinearModel& model, const AttackConfig& config,
                   const RecordSet* donors) {
    config.validate();
    Rng rng(config.seed);
    const auto victims = rng.sample_indices(set.size(), victim_count(set.size(), config.fraction));

    std::vector<Record> out = set.records();
    std::vector<int> labels(set.size(), 0);
    std::vector<std::size_t> skipped;
    const RecordSet& pool = donors ? *donors : set;

    for (auto i : victims) {
        const Record& victim = set[i];
        switch (config.method) {
            case AttackMethod::fgsm:
                out[i] = fgsm_perturb(model, victim, config.fgsm_options(rng.next()));
                break;
            case AttackMethod::lowprofool:
                out[i] = lowprofool_perturb(model, victim, config.lowprofool);
                break;
            case AttackMethod::distance:
                try {
                    out[i] = distance_based_attack(model.scaler, victim, pool, config.distance_delta);
                } catch (const DataError&) {
                    skipped.push_back(i);
                    continue;
                }
                break;
        }
        labels[i] = 1;
    }
    return {RecordSet(std::move(out), set.provenance()), std::move(labels), std::move(skipped)};
}

}  // namespace advmimo
