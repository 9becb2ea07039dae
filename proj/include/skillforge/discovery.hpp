#pragma once

#include <functional>
#include <limits>
#include <string_view>

#include "skillforge/config.hpp"
#include "skillforge/discriminator.hpp"
#include "skillforge/environment.hpp"
#include "skillforge/generator.hpp"
#include "skillforge/metrics.hpp"
#include "skillforge/skill_policy.hpp"

namespace skillforge {

/// The diversity temperature and its dual-update state. alpha is stored as
/// log(alpha) so it stays positive under any step size.
struct DiversityState {
    double log_alpha = 0.0;
    double target_entropy = 3.0;  // H-bar
    double alpha_lr = 1e-3;
    double log_alpha_min = -10.0;
    double log_alpha_max = 5.0;
    double last_measured_entropy = 0.0;

    double alpha() const { return std::exp(log_alpha); }
};

/// One dual descent step on log(alpha) with gradient
/// (measured_entropy - target): alpha grows while entropy is below target and
/// shrinks above it. Returns the new alpha.
double update_alpha(DiversityState& state, double measured_entropy);

struct ObjectiveBreakdown {
    double total = 0.0;
    double mean_log_q = 0.0;     // inter-skill diversity bound term
    double mean_entropy = 0.0;   // intra-skill diversity H(w|z), mean over K
    double mean_return = 0.0;    // feasibility term, discounted
    double alpha = 0.0;
};

/// J = mean log q(z|tau) + alpha * mean_z H(g(.|z)) + mean_t sum gamma^t r_t
/// over the batch, with the per-term breakdown for logging and for the
/// generator's score construction.
ObjectiveBreakdown compute_objective(const std::vector<const EncodedTrajectory*>& batch,
                                     const TrajectoryDiscriminator& disc, const TaskGenerator& gen,
                                     double alpha, double gamma);

enum class DiscoveryMode { Slide, UniformTasks, DiaynState };

struct DiscoveryConfig {
    long iterations = 0;  // episodes; required in config files
    int num_skills = 64;
    std::uint64_t seed = 1;
    double gamma = 0.99;
    long eval_every = 1000;
    int eval_episodes = 50;
    long checkpoint_every = 10000;
    int workers = 1;
    bool log_eval_trajectories = false;

    // Optional early stop, evaluated at metric rows only.
    bool early_stop = false;
    int early_stop_patience = 5;
    double early_stop_eps = 0.01;  // MI-bound plateau width
    double early_stop_mi_target = std::numeric_limits<double>::quiet_NaN();
    double early_stop_accuracy_target = std::numeric_limits<double>::quiet_NaN();
    /// When set, a target hit only counts once mean entropy is at least this.
    double early_stop_min_entropy = std::numeric_limits<double>::quiet_NaN();

    SacConfig sac;
    double sac_updates_per_step = 1.0;
    long sac_warmup_steps = 1000;
    bool train_policy = true;

    GeneratorConfig gen;
    int gen_batch = 128;
    int gen_min_batch = 32;
    bool train_generator = true;

    DiscriminatorConfig disc;
    int disc_batch = 128;
    int traj_replay_capacity = 2048;

    double target_entropy = 3.0;  // H-bar; required in config files
    double alpha_init = 1.0;
    double alpha_lr = 1e-3;
    double log_alpha_min = -10.0;
    double log_alpha_max = 5.0;
    bool alpha_updates = true;

    /// Consumes the discovery-relevant keys; [run] iterations and
    /// [diversity] target_entropy are required, everything else defaults to
    /// the shipped values.
    static DiscoveryConfig from_config(const KeyValueConfig& cfg);
    void validate() const;
};

struct DiscoveryArtifacts {
    std::filesystem::path out_dir;
    std::filesystem::path checkpoint_dir;
    long iterations_run = 0;
    bool early_stopped = false;
    double final_mi_bound = 0.0;
    double final_mean_entropy = 0.0;
    double final_alpha = 0.0;
    double final_mean_return = 0.0;
    double final_disc_accuracy = 0.0;
};

/// Observer for the per-iteration call sequence; used to verify that the
/// loop performs skill draw, task draw, instantiation, rollout with in-loop
/// policy updates, posterior computation, and the three module updates in
/// that exact order.
using TraceHook = std::function<void(std::string_view)>;

/// Runs the discovery loop: per iteration, sample z from the uniform prior,
/// sample w from the task sampler, roll out T steps with per-step SAC
/// updates, then update the discriminator, the generator, and the diversity
/// temperature. Emits a metrics row (iteration, mi_lower_bound, mean_entropy,
/// alpha, mean_return, disc_accuracy) every eval_every iterations and
/// checkpoints the full run state for bit-exact resume.
DiscoveryArtifacts run_discovery(const TaskEnvironment& env, const DiscoveryConfig& config,
                                 const std::filesystem::path& out_dir, bool resume = false,
                                 const TraceHook& trace = {});

/// Shared loop with the task sampler / reward source switched by mode; the
/// baseline entry points wrap this.
DiscoveryArtifacts run_discovery_mode(const TaskEnvironment& env, const DiscoveryConfig& config,
                                      const std::filesystem::path& out_dir, DiscoveryMode mode,
                                      bool resume = false, const TraceHook& trace = {});

inline constexpr const char* kDiscoveryMetricColumns[] = {
    "iteration", "mi_lower_bound", "mean_entropy", "alpha", "mean_return", "disc_accuracy"};

}  // namespace skillforge
