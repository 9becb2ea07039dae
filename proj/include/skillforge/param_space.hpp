#pragma once

#include <string>
#include <variant>
#include <vector>

#include "skillforge/common.hpp"
#include "skillforge/rng.hpp"

namespace skillforge {

/// One dimension of the factorized task-parameter space: either a categorical
/// choice or a bounded real.
struct ParamSpec {
    enum class Kind { Discrete, Continuous };

    std::string name;
    Kind kind;
    int cardinality = 0;   // Discrete only, >= 2
    double lower = 0.0;    // Continuous only
    double upper = 0.0;

    static ParamSpec discrete(std::string name, int cardinality);
    static ParamSpec continuous(std::string name, double lower, double upper);
};

/// Ordered, immutable collection of ParamSpecs. Order is part of every
/// serialized artifact, so it is fixed for the lifetime of an experiment.
class TaskParamSpec {
public:
    TaskParamSpec() = default;
    explicit TaskParamSpec(std::vector<ParamSpec> params);

    int size() const { return static_cast<int>(params_.size()); }
    const ParamSpec& at(int i) const { return params_.at(static_cast<std::size_t>(i)); }
    const std::vector<ParamSpec>& params() const { return params_; }

    int discrete_count() const;
    int continuous_count() const;

    /// Human-readable key-value schema, one line per parameter.
    std::string serialize() const;
    static TaskParamSpec deserialize(const std::string& text);

    /// Content hash used to reject checkpoint restores against a different
    /// space.
    std::uint64_t fingerprint() const;

    bool operator==(const TaskParamSpec& other) const;

private:
    std::vector<ParamSpec> params_;
};

/// A concrete assignment of the task space: one value per dimension, in spec
/// order. Discrete entries hold the category index.
struct TaskParams {
    std::vector<double> values;

    int discrete_at(int i) const { return static_cast<int>(values.at(static_cast<std::size_t>(i))); }
    double at(int i) const { return values.at(static_cast<std::size_t>(i)); }
};

/// Validates w against the spec; throws std::invalid_argument naming the
/// offending parameter.
void validate_params(const TaskParamSpec& spec, const TaskParams& w);

struct DiscreteHead {
    Vector logits;  // length == cardinality
};

struct ContinuousHead {
    double mean = 0.0;
    double log_std = 0.0;
};

/// Per-dimension sampling heads: categorical logits for discrete parameters,
/// a pre-squash Gaussian for continuous ones. Continuous values are produced
/// by v = lower + (tanh(u) + 1)/2 * (upper - lower) with u ~ N(mean, std),
/// which keeps every sample inside its bounds without rejection.
struct FactorizedDistribution {
    std::vector<std::variant<DiscreteHead, ContinuousHead>> heads;

    int size() const { return static_cast<int>(heads.size()); }
};

/// Structural check of dist against spec; throws std::invalid_argument naming
/// the offending parameter.
void validate_distribution(const TaskParamSpec& spec, const FactorizedDistribution& dist);

TaskParams sample(const TaskParamSpec& spec, const FactorizedDistribution& dist, Rng& rng);

/// Joint log density/mass of w, summed over dimensions. Continuous dimensions
/// include the tanh change-of-variables correction.
double log_prob(const TaskParamSpec& spec, const FactorizedDistribution& dist, const TaskParams& w);

/// Analytic entropy, summed over dimensions: categorical entropy in nats for
/// discrete heads, pre-squash Gaussian differential entropy
/// 0.5*log(2*pi*e) + log_std for continuous heads.
double entropy(const TaskParamSpec& spec, const FactorizedDistribution& dist);

/// Zero logits for discrete heads; continuous heads tuned so the squashed
/// marginal is approximately uniform over the bounds (Kolmogorov distance
/// ~0.01 from exact uniform; exactness is not required anywhere).
FactorizedDistribution uniform_distribution(const TaskParamSpec& spec);

/// Pre-squash Gaussian std whose tanh-squashed image minimizes the Kolmogorov
/// distance to the uniform marginal.
inline constexpr double kSquashUniformStd = 0.851;

/// tanh squash of an unbounded u into [lower, upper].
double squash(double u, double lower, double upper);
/// Inverse of squash; the result is clamped away from the asymptotes.
double unsquash(double v, double lower, double upper);

}  // namespace skillforge
