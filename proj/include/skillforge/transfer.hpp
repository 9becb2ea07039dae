#pragma once

#include "skillforge/config.hpp"
#include "skillforge/environment.hpp"
#include "skillforge/metrics.hpp"
#include "skillforge/skill_policy.hpp"

namespace skillforge {

/// The held-out task the skills are transferred to: a fixed w plus the
/// evaluation protocol.
struct TargetTaskSpec {
    TaskParams params;
    int eval_episodes = 50;
    long eval_every = 10000;
};

struct TransferConfig {
    long steps = 0;  // environment steps; required in config files
    std::uint64_t seed = 1;
    double gamma = 0.99;
    int hidden = 64;
    double lr = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    int batch_size = 128;
    double reward_scale = 10.0;  // flat-SAC critic reward multiplier
    std::size_t replay_capacity = 100000;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_fraction = 0.2;  // fraction of the budget spent decaying
    long target_sync = 1000;
    long warmup_steps = 1000;
    double updates_per_step = 1.0;
    bool finetune_skills = true;
    int hold_length = 1;  // low-level steps a selected skill persists

    enum class Selection { Learned, UniformRandom };
    Selection selection = Selection::Learned;

    static TransferConfig from_config(const KeyValueConfig& cfg);
    /// [transfer] target_params (comma list) + the evaluation protocol keys.
    static TargetTaskSpec target_from_config(const KeyValueConfig& cfg, const TaskParamSpec& spec);
    void validate() const;
};

struct TransferArtifacts {
    std::filesystem::path out_dir;
    long steps_run = 0;
    double final_eval_return_mean = 0.0;
    double final_eval_return_std = 0.0;
    std::vector<double> final_selection_histogram;
};

/// Skill-valued Q-network with a hard-synced target copy, trained by
/// standard deep Q-learning over the K discrete skills.
class HighLevelQPolicy {
public:
    HighLevelQPolicy(int obs_dim, int num_skills, const TransferConfig& config, std::uint64_t seed);

    int greedy(const Vector& obs) const;
    /// One descent step on the TD error of the chosen-skill entries.
    void update(const std::vector<const SacTransition*>& batch, double gamma);
    void sync_target() { target_ = q_; }

    /// Linear decay from eps_start to eps_end over the first
    /// eps_fraction * total_steps steps.
    static double epsilon_at(const TransferConfig& config, long step);

    nn::Mlp& network() { return q_; }
    nn::Mlp& target_network() { return target_; }

private:
    nn::Mlp q_;
    nn::Mlp target_;
    nn::Adam opt_;
};

inline constexpr const char* kTransferMetricColumns[] = {
    "step", "eval_return_mean", "eval_return_std", "skill_selection_histogram"};

/// Trains a high-level Q-policy that picks a skill index every hold_length
/// steps on the target task, with optional SAC finetuning of the skill
/// policy. `skills` is taken by value: the caller's copy stays untouched,
/// and with finetuning disabled the returned run leaves the policy
/// byte-identical. steps == 0 performs a single evaluation and writes one
/// metrics row.
TransferArtifacts run_transfer(const TaskEnvironment& env, SkillPolicy skills,
                               const TargetTaskSpec& target, const TransferConfig& config,
                               const std::filesystem::path& out_dir);

}  // namespace skillforge
