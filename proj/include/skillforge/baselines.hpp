#pragma once

#include <optional>

#include "skillforge/discovery.hpp"
#include "skillforge/transfer.hpp"

namespace skillforge {

enum class BaselineKind { UniformTasks, NextStateDiscriminator, FlatSac };

std::string to_string(BaselineKind kind);
std::optional<BaselineKind> baseline_from_string(const std::string& name);

/// Per-state skill classifier for the next-state-discriminator arm: predicts
/// z from a single observation, in contrast with the trajectory-level
/// discriminator of the primary method.
class StateClassifier {
public:
    StateClassifier(int obs_dim, int num_skills, int hidden, double lr, double beta1, double beta2,
                    std::uint64_t seed);

    Vector log_posterior(const Vector& obs) const;
    /// Cross-entropy step on (next_obs, skill) pairs; returns pre-step loss.
    double train_batch(const std::vector<const SacTransition*>& batch);
    double accuracy(const std::vector<std::pair<Vector, int>>& labeled) const;

    int num_skills() const { return num_skills_; }

    void save(const std::filesystem::path& path) const;
    static StateClassifier load(const std::filesystem::path& path);

private:
    int obs_dim_ = 0;
    int num_skills_ = 0;
    nn::Mlp net_;
    nn::Adam opt_;
    StateClassifier() = default;
};

/// Discovery with w drawn uniformly from the task space: no generator, no
/// temperature updates; the discriminator and the skills still train.
DiscoveryArtifacts run_uniform_discovery(const TaskEnvironment& env, const DiscoveryConfig& config,
                                         const std::filesystem::path& out_dir, bool resume = false);

/// Discovery with uniform tasks and the skill policy trained purely on the
/// intrinsic reward log q_s(z | s_{t+1}) - log p(z) from the per-state
/// classifier; the environment reward is ignored.
DiscoveryArtifacts run_diayn_style(const TaskEnvironment& env, const DiscoveryConfig& config,
                                   const std::filesystem::path& out_dir, bool resume = false);

/// Skill-free SAC trained directly on the target task, sharing the transfer
/// evaluation protocol and metrics schema.
TransferArtifacts run_flat_sac(const TaskEnvironment& env, const TargetTaskSpec& target,
                               const TransferConfig& config, const std::filesystem::path& out_dir);

}  // namespace skillforge
