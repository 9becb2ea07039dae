#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillforge/nn.hpp"
#include "skillforge/trajectory.hpp"

namespace skillforge {

struct DiscriminatorConfig {
    int hidden = 64;
    double lr = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double reward_scale_decay = 0.99;
};

struct DiscriminatorTrainReport {
    bool applied = false;
    std::string note;
    double loss = 0.0;  // pre-step cross-entropy
};

/// Trajectory-level skill classifier. The initial observation and each
/// transition (obs, action, reward, next_obs) are encoded separately; step
/// features are mean-pooled (permutation-invariant, any length 1..T) and the
/// head reads [pooled || init feature]. Rewards are divided by a running
/// scale before encoding so the dense O(0.1) rewards carry weight comparable
/// to the observation channels.
class TrajectoryDiscriminator {
public:
    TrajectoryDiscriminator(int obs_dim, int action_dim, int num_skills, DiscriminatorConfig config,
                            std::uint64_t seed);

    /// Log-softmax over the K skills. Throws std::invalid_argument on an
    /// empty trajectory.
    Vector log_posterior(const EncodedTrajectory& traj) const;

    /// One cross-entropy descent step over the batch; returns the pre-step
    /// loss. A non-finite loss or gradient aborts the step.
    DiscriminatorTrainReport train_step(const std::vector<const EncodedTrajectory*>& batch);

    /// Flat cross-entropy gradient [init-encoder | step-encoder | head] at
    /// the current weights and reward scale, without stepping; exposed for
    /// finite-difference checks.
    Vector loss_gradient(const std::vector<const EncodedTrajectory*>& batch);

    /// Fraction of trajectories whose argmax posterior matches their skill.
    double accuracy(const std::vector<const EncodedTrajectory*>& batch) const;

    /// K x K confusion counts (row = true skill, column = predicted), as CSV.
    std::string confusion_csv(const std::vector<const EncodedTrajectory*>& batch) const;

    int num_skills() const { return num_skills_; }
    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    double reward_scale() const { return reward_scale_; }

    void save(const std::filesystem::path& path) const;
    static TrajectoryDiscriminator load(const std::filesystem::path& path);

    nn::Mlp& init_encoder() { return init_enc_; }
    nn::Mlp& step_encoder() { return step_enc_; }
    nn::Mlp& head() { return head_; }

private:
    int obs_dim_ = 0;
    int action_dim_ = 0;
    int num_skills_ = 0;
    DiscriminatorConfig config_;
    nn::Mlp init_enc_;  // obs -> feature
    nn::Mlp step_enc_;  // [obs, action, reward, next_obs] -> feature
    nn::Mlp head_;      // [pooled step feature, init feature] -> K logits
    nn::Adam init_opt_, step_opt_, head_opt_;
    double reward_scale_ = 1.0;

    Matrix step_inputs(const EncodedTrajectory& traj) const;
    Vector logits_const(const EncodedTrajectory& traj) const;
    /// Fills the three networks' gradient buffers; returns the batch loss.
    double accumulate_gradient(const std::vector<const EncodedTrajectory*>& batch);
    void zero_grads();
    TrajectoryDiscriminator() = default;
};

}  // namespace skillforge
