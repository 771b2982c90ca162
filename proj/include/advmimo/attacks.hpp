#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "advmimo/dataset.hpp"
#include "advmimo/regression.hpp"

namespace advmimo {

enum class AttackMethod { fgsm, distance, lowprofool };

// How epsilon maps to a per-feature step in standardized space.
enum class EpsilonScaling {
    absolute,        // every feature moves by epsilon
    feature_scaled,  // feature i moves by epsilon * (its training range in standardized units)
};

enum class FgsmVariant {
    plain,        // sign of the loss gradient: pushes each prediction away from its target
    fluctuation,  // gradient sign with a seeded random flip per feature
    maximize,     // sign of the weights: every prediction goes up
};

struct FgsmOptions {
    double epsilon = 1e-2;
    EpsilonScaling scaling = EpsilonScaling::feature_scaled;
    FgsmVariant variant = FgsmVariant::maximize;
    // Literal x' = eps * sign(grad) instead of the additive x' = x + eps * sign(grad).
    bool replace_form = false;
    std::uint64_t fluctuation_seed = 0;
};

struct LowProFoolOptions {
    int steps = 50;
    double step_size = 0.01;
    double trade_off = 1.0;               // lambda
    std::vector<double> feature_weights;  // v, one per feature; empty means all ones
};

struct AttackConfig {
    AttackMethod method = AttackMethod::fgsm;
    double epsilon = 1e-2;
    double fraction = 0.6;
    EpsilonScaling scaling = EpsilonScaling::feature_scaled;
    FgsmVariant fgsm_variant = FgsmVariant::maximize;
    bool replace_form = false;
    LowProFoolOptions lowprofool;
    double distance_delta = 10.0;  // dB
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
    FgsmOptions fgsm_options(std::uint64_t fluctuation_seed = 0) const;
};

AttackConfig attack_config_from_json(const nlohmann::json& j);
nlohmann::json attack_config_to_json(const AttackConfig& c);
AttackConfig load_attack_config(const std::filesystem::path& path);

/// One FGSM step against the squared error of `model`, taken in standardized
/// space and mapped back to original units. The pathloss target is copied
/// through unchanged and `los` is re-rounded to {0, 1}.
Record fgsm_perturb(const LinearModel& model, const Record& record, const FgsmOptions& options);

/// Replaces the victim's features with those of the nearest pool record
/// (standardized Euclidean distance) whose pathloss differs by at least
/// `delta` dB. Throws DataError when no pool record qualifies.
Record distance_based_attack(const Scaler& scaler, const Record& victim, const RecordSet& pool, double delta);

/// Iterative weighted-norm attack: gradient ascent on the prediction with an
/// L2 penalty on v (.) r, so conspicuous (high-v) features stay put.
Record lowprofool_perturb(const LinearModel& model, const Record& record, const LowProFoolOptions& options);

struct PoisonedSet {
    RecordSet records;
    std::vector<int> labels;              // 1 = poisoned, aligned with records
    std::vector<std::size_t> skipped;     // chosen victims left benign (no distance candidate)

    std::size_t poisoned_count() const;
};

// round(fraction * N), half away from zero.
std::size_t victim_count(std::size_t n, double fraction);

/// Perturbs round(fraction * N) seeded victims with the configured method.
/// Record order is preserved. `donors` supplies the distance attack's pool
/// (defaults to `set` itself).
PoisonedSet poison(const RecordSet& set, const LinearModel& model, const AttackConfig& config,
                   const RecordSet* donors = nullptr);

}  // namespace advmimo
