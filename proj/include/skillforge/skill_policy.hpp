#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/nn.hpp"

namespace skillforge {

struct SacConfig {
    int hidden = 64;
    double lr = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    int batch_size = 128;
    double gamma = 0.99;
    double polyak_tau = 0.005;
    double init_temp = 0.1;
    /// Target policy entropy for the temperature tuner; NaN means -action_dim.
    double target_action_entropy = std::numeric_limits<double>::quiet_NaN();
    /// Multiplier on rewards entering the critic targets. The dense
    /// displacement rewards are O(0.02) per step, far below the entropy
    /// bonus at the default temperature; scaling restores the usual SAC
    /// operating range without touching logged returns.
    double reward_scale = 10.0;
    double log_std_min = -20.0;
    double log_std_max = 2.0;
    std::size_t replay_capacity = 200000;
};

struct SacTransition {
    Vector obs;
    int skill = 0;
    Vector action;
    double reward = 0.0;
    Vector next_obs;
    bool done = false;
};

/// Ring buffer with FIFO eviction, shared across skills (each record carries
/// its z). Single writer, single sampling reader; a record becomes sampleable
/// only once add() returned.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void add(SacTransition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    void clear();

    /// Uniform sample of `count` distinct records.
    std::vector<const SacTransition*> sample(std::size_t count, Rng& rng) const;

    void save(BlobWriter& w) const;
    void load(BlobReader& r);

private:
    std::size_t capacity_;
    std::vector<SacTransition> data_;
    std::size_t write_pos_ = 0;
};

struct SacLossReport {
    bool applied = false;
    std::string note;
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    double actor_loss = 0.0;
    double sac_temp = 0.0;
    double mean_action_entropy = 0.0;
};

/// Optional per-record reward replacement applied when a batch is assembled,
/// used by intrinsic-reward training schemes.
using RewardOverride = std::function<double(const SacTransition&)>;

/// Skill-conditioned squashed-Gaussian actor with twin critics and their
/// Polyak targets, trained by soft actor-critic. The action-entropy
/// temperature (`sac_temp`; distinct from the task-diversity weight) is
/// auto-tuned toward the target entropy.
class SkillPolicy {
public:
    SkillPolicy(int obs_dim, int action_dim, int num_skills, double action_limit, SacConfig config,
                std::uint64_t seed);

    /// Stochastic mode samples the squashed Gaussian; deterministic mode
    /// squashes the mean. Components always lie in [-action_limit,
    /// action_limit]. Throws std::invalid_argument for z outside [0, K).
    Vector act(const Vector& obs, int z, bool deterministic, Rng& rng) const;

    /// log pi(action | obs, z) including the squash correction.
    double action_log_prob(const Vector& obs, int z, const Vector& action) const;

    /// One SAC step on a uniform batch from the buffer. Returns nullopt while
    /// the buffer holds fewer than batch_size records (retryable).
    std::optional<SacLossReport> update(const ReplayBuffer& buffer, Rng& rng,
                                        const RewardOverride* reward_override = nullptr);

    SacLossReport update_with(const std::vector<const SacTransition*>& batch, Rng& rng,
                              const RewardOverride* reward_override = nullptr);

    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    int num_skills() const { return num_skills_; }
    double action_limit() const { return action_limit_; }
    double sac_temp() const { return std::exp(log_temp_); }
    const SacConfig& config() const { return config_; }

    nn::Mlp& actor() { return actor_; }
    const nn::Mlp& actor() const { return actor_; }
    nn::Mlp& critic1() { return critic1_; }
    nn::Mlp& critic2() { return critic2_; }
    nn::Mlp& target1() { return target1_; }
    nn::Mlp& target2() { return target2_; }

    void save(const std::filesystem::path& path) const;
    static SkillPolicy load(const std::filesystem::path& path);

private:
    int obs_dim_ = 0, action_dim_ = 0, num_skills_ = 0;
    double action_limit_ = 1.0;
    SacConfig config_;
    double target_entropy_ = 0.0;
    double log_temp_ = 0.0;
    nn::Mlp actor_, critic1_, critic2_, target1_, target2_;
    nn::Adam actor_opt_, critic1_opt_, critic2_opt_;

    Vector actor_input(const Vector& obs, int z) const;
    SkillPolicy() = default;
};

}  // namespace skillforge
