#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/nn.hpp"
#include "skillforge/param_space.hpp"

namespace skillforge {

struct GeneratorConfig {
    int hidden = 64;
    double lr = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double baseline_decay = 0.99;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

/// One REINFORCE sample: the skill it was drawn under, the task parameters,
/// and the two score components (discriminator log-likelihood and discounted
/// return).
struct GeneratorUpdateItem {
    int skill = 0;
    TaskParams params;
    double log_q = 0.0;
    double discounted_return = 0.0;
};

struct GeneratorUpdateReport {
    bool applied = false;
    std::string note;
    double mean_log_q = 0.0;
    double mean_entropy = 0.0;
    double mean_return = 0.0;
};

/// Skill-conditioned task sampler: a feed-forward map from one-hot skill
/// index to the per-parameter heads of a FactorizedDistribution. Trained by a
/// score-function gradient with a per-skill moving baseline and running-std
/// score normalization; the entropy bonus is differentiated analytically.
class TaskGenerator {
public:
    TaskGenerator(TaskParamSpec spec, int num_skills, GeneratorConfig config, std::uint64_t seed);

    /// Deterministic forward pass; same z gives the same heads until the next
    /// update. Throws std::invalid_argument for z outside [0, K).
    FactorizedDistribution distribution_for(int z) const;

    /// One ascent step on
    ///   mean_i[(score_i - b(z_i)) / s(z_i) * log g(w_i | z_i)]
    ///     + alpha * mean_z entropy(g(. | z))
    /// where score = log_q + discounted_return. The entropy term averages
    /// over all K skills. A non-finite gradient aborts the step and reports it.
    GeneratorUpdateReport update(const std::vector<GeneratorUpdateItem>& batch, double alpha);

    /// Mean analytic entropy over all K skills at the current weights; the
    /// measured quantity for the temperature dual update.
    double mean_entropy_over_skills() const;

    /// The flat ascent gradient dJ/dtheta for the update objective at the
    /// current weights, without stepping or touching baselines. This is the
    /// exact quantity update() feeds the optimizer; exposed so tests can
    /// check it against finite differences.
    Vector update_gradient(const std::vector<GeneratorUpdateItem>& batch, double alpha);

    int num_skills() const { return num_skills_; }
    const TaskParamSpec& spec() const { return spec_; }
    const GeneratorConfig& config() const { return config_; }

    void save(const std::filesystem::path& path) const;
    /// Restores weights and baselines; refuses a checkpoint whose task-space
    /// fingerprint differs from this generator's spec.
    static TaskGenerator load(const std::filesystem::path& path, const TaskParamSpec& expected_spec);

    nn::Mlp& network() { return net_; }
    const nn::Mlp& network() const { return net_; }

private:
    TaskParamSpec spec_;
    int num_skills_ = 0;
    GeneratorConfig config_;
    nn::Mlp net_;
    nn::Adam opt_;
    std::vector<double> baseline_;      // per-skill EMA of raw scores
    std::vector<double> score_var_;     // per-skill EMA of squared deviation
    int head_dim_ = 0;

    FactorizedDistribution heads_from_output(const Vector& out) const;
    /// Fills the network gradient buffers with the ascent gradient and
    /// returns the per-term report.
    GeneratorUpdateReport accumulate_ascent_gradient(const std::vector<GeneratorUpdateItem>& batch,
                                                     double alpha);
    TaskGenerator() = default;
};

}  // namespace skillforge
