#include "skillforge/discovery.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "skillforge/baselines.hpp"
#include "skillforge/manifest.hpp"

namespace skillforge {

namespace {

constexpr std::uint32_t kRunStateVersion = 1;

void put_params(BlobWriter& w, const TaskParams& p) {
    w.put_u64(p.values.size());
    w.put_doubles(p.values.data(), p.values.size());
}

TaskParams get_params(BlobReader& r) {
    TaskParams p;
    auto n = r.get_u64();
    p.values.resize(n);
    r.get_doubles(p.values.data(), n);
    return p;
}

void put_traj(BlobWriter& w, const EncodedTrajectory& t) {
    w.put_i64(t.skill);
    put_params(w, t.params);
    w.put_u64(t.episode_seed);
    w.put_vector(t.initial_obs);
    w.put_u64(t.steps.size());
    for (const auto& s : t.steps) {
        w.put_vector(s.obs);
        w.put_vector(s.action);
        w.put_f64(s.reward);
        w.put_vector(s.next_obs);
    }
}

EncodedTrajectory get_traj(BlobReader& r) {
    EncodedTrajectory t;
    t.skill = static_cast<int>(r.get_i64());
    t.params = get_params(r);
    t.episode_seed = r.get_u64();
    t.initial_obs = r.get_vector();
    auto n = r.get_u64();
    t.steps.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        EncodedStep s;
        s.obs = r.get_vector();
        s.action = r.get_vector();
        s.reward = r.get_f64();
        s.next_obs = r.get_vector();
        t.steps.push_back(std::move(s));
    }
    return t;
}

/// Ring of recent episodes feeding the discriminator and generator updates.
class TrajReplay {
public:
    explicit TrajReplay(std::size_t capacity) : capacity_(capacity) {}

    void add(EncodedTrajectory t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[write_pos_] = std::move(t);
        }
        write_pos_ = (write_pos_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }

    std::vector<const EncodedTrajectory*> sample(std::size_t count, Rng& rng) const {
        std::set<std::size_t> chosen;
        for (std::size_t i = data_.size() - count; i < data_.size(); ++i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i) + 1));
            if (!chosen.insert(j).second) chosen.insert(i);
        }
        std::vector<const EncodedTrajectory*> out;
        out.reserve(count);
        for (auto idx : chosen) out.push_back(&data_[idx]);
        return out;
    }

    void save(BlobWriter& w) const {
        w.put_u64(capacity_);
        w.put_u64(write_pos_);
        w.put_u64(data_.size());
        for (const auto& t : data_) put_traj(w, t);
    }

    void load(BlobReader& r) {
        capacity_ = r.get_u64();
        write_pos_ = r.get_u64();
        auto n = r.get_u64();
        data_.clear();
        data_.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) data_.push_back(get_traj(r));
    }

private:
    std::size_t capacity_;
    std::vector<EncodedTrajectory> data_;
    std::size_t write_pos_ = 0;
};

// Everything that shapes the per-iteration dynamics. The total iteration
// budget and checkpoint cadence are deliberately excluded so an interrupted
// or completed run can be extended under the same configuration.
std::string config_signature(const DiscoveryConfig& c, DiscoveryMode mode) {
    std::ostringstream os;
    os.precision(17);
    os << static_cast<int>(mode) << '|' << c.num_skills << '|' << c.seed
       << '|' << c.gamma << '|' << c.eval_every << '|' << c.eval_episodes << '|'
       << c.sac.batch_size << '|' << c.sac.lr << '|' << c.sac.hidden
       << '|' << c.sac_updates_per_step << '|' << c.sac_warmup_steps << '|' << c.train_policy << '|'
       << c.gen.lr << '|' << c.gen_batch << '|' << c.gen_min_batch << '|' << c.train_generator
       << '|' << c.disc.lr << '|' << c.disc_batch << '|' << c.traj_replay_capacity << '|'
       << c.target_entropy << '|' << c.alpha_init << '|' << c.alpha_lr << '|' << c.alpha_updates;
    return os.str();
}

struct GenWindowItem {
    int skill = 0;
    TaskParams params;
    double log_q = 0.0;
    double discounted_return = 0.0;
};

EncodedTrajectory rollout_eval_episode(const TaskEnvironment& env, const SkillPolicy& policy, int z,
                                       const TaskParams& w, std::uint64_t episode_seed,
                                       std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    auto ep = env.start(w, episode_seed);
    EncodedTrajectory traj;
    traj.skill = z;
    traj.params = w;
    traj.episode_seed = episode_seed;
    traj.initial_obs = ep->observe();
    Vector obs = traj.initial_obs;
    for (int t = 0; t < env.horizon(); ++t) {
        Vector action = policy.act(obs, z, /*deterministic=*/false, rng);
        auto [reward, done] = ep->step(action);
        Vector next_obs = ep->observe();
        traj.steps.push_back({obs, action, reward, next_obs});
        obs = std::move(next_obs);
        if (done) break;
    }
    return traj;
}

}  // namespace

double update_alpha(DiversityState& state, double measured_entropy) {
    state.last_measured_entropy = measured_entropy;
    state.log_alpha -= state.alpha_lr * (measured_entropy - state.target_entropy);
    state.log_alpha = std::clamp(state.log_alpha, state.log_alpha_min, state.log_alpha_max);
    return state.alpha();
}

ObjectiveBreakdown compute_objective(const std::vector<const EncodedTrajectory*>& batch,
                                     const TrajectoryDiscriminator& disc, const TaskGenerator& gen,
                                     double alpha, double gamma) {
    if (batch.empty()) throw std::invalid_argument("compute_objective: empty batch");
    ObjectiveBreakdown b;
    b.alpha = alpha;
    for (const auto* t : batch) {
        b.mean_log_q += disc.log_posterior(*t)[t->skill];
        b.mean_return += t->discounted_return(gamma);
    }
    b.mean_log_q /= static_cast<double>(batch.size());
    b.mean_return /= static_cast<double>(batch.size());
    b.mean_entropy = gen.mean_entropy_over_skills();
    b.total = b.mean_log_q + alpha * b.mean_entropy + b.mean_return;
    return b;
}

void DiscoveryConfig::validate() const {
    if (iterations < 1) throw ConfigError("run.iterations must be >= 1");
    if (num_skills < 1) throw ConfigError("run.num_skills must be >= 1");
    if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("run.gamma must be in (0, 1]");
    if (eval_every < 1) throw ConfigError("run.eval_every must be >= 1");
    if (eval_episodes < 1) throw ConfigError("run.eval_episodes must be >= 1");
    if (workers < 1) throw ConfigError("run.workers must be >= 1");
    if (sac.batch_size < 1) throw ConfigError("skills.batch_size must be >= 1");
    if (gen_batch < 1 || gen_min_batch < 1) throw ConfigError("generator.batch must be >= 1");
    if (disc_batch < 1) throw ConfigError("discriminator.batch must be >= 1");
    if (traj_replay_capacity < disc_batch)
        throw ConfigError("discriminator.replay_episodes must be >= discriminator.batch");
    if (alpha_init <= 0.0) throw ConfigError("diversity.alpha_init must be > 0");
}

DiscoveryConfig DiscoveryConfig::from_config(const KeyValueConfig& cfg) {
    DiscoveryConfig c;
    c.iterations = cfg.get_long("run", "iterations");
    c.num_skills = static_cast<int>(cfg.get_long_or("run", "num_skills", 64));
    c.seed = static_cast<std::uint64_t>(cfg.get_long_or("run", "seed", 1));
    c.gamma = cfg.get_double_or("run", "gamma", 0.99);
    c.eval_every = cfg.get_long_or("run", "eval_every", 1000);
    c.eval_episodes = static_cast<int>(cfg.get_long_or("run", "eval_episodes", 50));
    c.checkpoint_every = cfg.get_long_or("run", "checkpoint_every", 10000);
    c.workers = static_cast<int>(cfg.get_long_or("run", "workers", 1));
    c.log_eval_trajectories = cfg.get_bool_or("run", "log_eval_trajectories", false);
    c.early_stop = cfg.get_bool_or("run", "early_stop", false);
    c.early_stop_patience = static_cast<int>(cfg.get_long_or("run", "early_stop_patience", 5));
    c.early_stop_eps = cfg.get_double_or("run", "early_stop_eps", 0.01);
    c.early_stop_mi_target = cfg.get_double_or("run", "early_stop_mi_target",
                                               std::numeric_limits<double>::quiet_NaN());
    c.early_stop_accuracy_target = cfg.get_double_or(
        "run", "early_stop_accuracy_target", std::numeric_limits<double>::quiet_NaN());
    c.early_stop_min_entropy = cfg.get_double_or("run", "early_stop_min_entropy",
                                                 std::numeric_limits<double>::quiet_NaN());

    c.sac.hidden = static_cast<int>(cfg.get_long_or("skills", "hidden", 64));
    c.sac.lr = cfg.get_double_or("skills", "lr", 3e-4);
    c.sac.adam_beta1 = cfg.get_double_or("skills", "adam_beta1", 0.9);
    c.sac.adam_beta2 = cfg.get_double_or("skills", "adam_beta2", 0.999);
    c.sac.batch_size = static_cast<int>(cfg.get_long_or("skills", "batch_size", 128));
    c.sac.gamma = c.gamma;
    c.sac.polyak_tau = cfg.get_double_or("skills", "polyak_tau", 0.005);
    c.sac.init_temp = cfg.get_double_or("skills", "init_temp", 0.1);
    c.sac.target_action_entropy = cfg.get_double_or("skills", "target_action_entropy",
                                                    std::numeric_limits<double>::quiet_NaN());
    c.sac.reward_scale = cfg.get_double_or("skills", "reward_scale", 10.0);
    c.sac.replay_capacity =
        static_cast<std::size_t>(cfg.get_long_or("skills", "replay_capacity", 200000));
    c.sac_updates_per_step = cfg.get_double_or("skills", "updates_per_step", 1.0);
    c.sac_warmup_steps = cfg.get_long_or("skills", "warmup_steps", 1000);
    c.train_policy = cfg.get_bool_or("skills", "train_policy", true);

    c.gen.hidden = static_cast<int>(cfg.get_long_or("generator", "hidden", 64));
    c.gen.lr = cfg.get_double_or("generator", "lr", 3e-4);
    c.gen.adam_beta1 = cfg.get_double_or("generator", "adam_beta1", 0.9);
    c.gen.adam_beta2 = cfg.get_double_or("generator", "adam_beta2", 0.999);
    c.gen.baseline_decay = cfg.get_double_or("generator", "baseline_decay", 0.99);
    c.gen.log_std_min = cfg.get_double_or("generator", "log_std_min", -5.0);
    c.gen.log_std_max = cfg.get_double_or("generator", "log_std_max", 2.0);
    c.gen_batch = static_cast<int>(cfg.get_long_or("generator", "batch", 128));
    c.gen_min_batch = static_cast<int>(cfg.get_long_or("generator", "min_batch", 32));
    c.train_generator = cfg.get_bool_or("generator", "train", true);

    c.disc.hidden = static_cast<int>(cfg.get_long_or("discriminator", "hidden", 64));
    c.disc.lr = cfg.get_double_or("discriminator", "lr", 3e-4);
    c.disc.adam_beta1 = cfg.get_double_or("discriminator", "adam_beta1", 0.9);
    c.disc.adam_beta2 = cfg.get_double_or("discriminator", "adam_beta2", 0.999);
    c.disc.reward_scale_decay = cfg.get_double_or("discriminator", "reward_scale_decay", 0.99);
    c.disc_batch = static_cast<int>(cfg.get_long_or("discriminator", "batch", 128));
    c.traj_replay_capacity =
        static_cast<int>(cfg.get_long_or("discriminator", "replay_episodes", 2048));

    c.target_entropy = cfg.get_double("diversity", "target_entropy");
    c.alpha_init = cfg.get_double_or("diversity", "alpha_init", 1.0);
    c.alpha_lr = cfg.get_double_or("diversity", "alpha_lr", 1e-3);
    c.log_alpha_min = cfg.get_double_or("diversity", "log_alpha_min", -10.0);
    c.log_alpha_max = cfg.get_double_or("diversity", "log_alpha_max", 5.0);
    c.alpha_updates = cfg.get_bool_or("diversity", "alpha_updates", true);

    c.validate();
    return c;
}

DiscoveryArtifacts run_discovery(const TaskEnvironment& env, const DiscoveryConfig& config,
                                 const std::filesystem::path& out_dir, bool resume,
                                 const TraceHook& trace) {
    return run_discovery_mode(env, config, out_dir, DiscoveryMode::Slide, resume, trace);
}

DiscoveryArtifacts run_discovery_mode(const TaskEnvironment& env, const DiscoveryConfig& config,
                                      const std::filesystem::path& out_dir, DiscoveryMode mode,
                                      bool resume, const TraceHook& trace) {
    config.validate();
    const int num_skills = config.num_skills;
    const TaskParamSpec& spec = env.param_spec();
    const FactorizedDistribution uniform_dist = uniform_distribution(spec);
    const double uniform_entropy = entropy(spec, uniform_dist);
    const bool slide = mode == DiscoveryMode::Slide;
    const bool diayn = mode == DiscoveryMode::DiaynState;

    std::filesystem::create_directories(out_dir);
    const auto ckpt_dir = out_dir / "checkpoint";
    std::filesystem::create_directories(ckpt_dir);
    {
        std::ofstream os(out_dir / "task_space.txt", std::ios::trunc);
        os << spec.serialize();
    }

    // Module construction (overwritten by the checkpoint on resume).
    TaskGenerator generator(spec, num_skills, config.gen, derive_seed(config.seed, "generator"));
    TrajectoryDiscriminator discriminator(env.obs_dim(), env.action_dim(), num_skills, config.disc,
                                          derive_seed(config.seed, "discriminator"));
    SkillPolicy policy(env.obs_dim(), env.action_dim(), num_skills, env.action_limit(), config.sac,
                       derive_seed(config.seed, "skills"));
    StateClassifier state_classifier(env.obs_dim(), num_skills, config.disc.hidden, config.disc.lr,
                                     config.disc.adam_beta1, config.disc.adam_beta2,
                                     derive_seed(config.seed, "state_classifier"));
    ReplayBuffer replay(config.sac.replay_capacity);
    TrajReplay traj_replay(static_cast<std::size_t>(config.traj_replay_capacity));
    std::deque<GenWindowItem> gen_window;

    DiversityState diversity;
    diversity.log_alpha = std::log(config.alpha_init);
    diversity.target_entropy = config.target_entropy;
    diversity.alpha_lr = config.alpha_lr;
    diversity.log_alpha_min = config.log_alpha_min;
    diversity.log_alpha_max = config.log_alpha_max;

    Rng rng_skill(derive_seed(config.seed, "rng.skill"));
    Rng rng_task(derive_seed(config.seed, "rng.task"));
    Rng rng_act(derive_seed(config.seed, "rng.act"));
    Rng rng_sac(derive_seed(config.seed, "rng.sac"));
    Rng rng_disc(derive_seed(config.seed, "rng.disc"));

    MetricsTable metrics({kDiscoveryMetricColumns[0], kDiscoveryMetricColumns[1],
                          kDiscoveryMetricColumns[2], kDiscoveryMetricColumns[3],
                          kDiscoveryMetricColumns[4], kDiscoveryMetricColumns[5]});
    long start_iteration = 0;
    long total_env_steps = 0;
    double sac_update_debt = 0.0;
    long eval_round = 0;
    std::deque<double> recent_mi;
    const std::uint64_t signature = fnv1a64(config_signature(config, mode));

    const auto run_state_path = ckpt_dir / "run_state.bin";
    if (resume) {
        if (!std::filesystem::exists(run_state_path))
            throw IoError("resume requested but no checkpoint at " + run_state_path.string());
        BlobReader r(run_state_path, "SFRUN", kRunStateVersion);
        if (r.get_u64() != signature)
            throw ConfigError("resume: checkpoint was created with a different configuration");
        start_iteration = r.get_i64();
        total_env_steps = r.get_i64();
        sac_update_debt = r.get_f64();
        eval_round = r.get_i64();
        diversity.log_alpha = r.get_f64();
        diversity.last_measured_entropy = r.get_f64();
        auto n_mi = r.get_u64();
        recent_mi.clear();
        for (std::uint64_t i = 0; i < n_mi; ++i) recent_mi.push_back(r.get_f64());
        std::istringstream s1(r.get_string());
        rng_skill.load(s1);
        std::istringstream s2(r.get_string());
        rng_task.load(s2);
        std::istringstream s3(r.get_string());
        rng_act.load(s3);
        std::istringstream s4(r.get_string());
        rng_sac.load(s4);
        std::istringstream s5(r.get_string());
        rng_disc.load(s5);
        replay.load(r);
        traj_replay.load(r);
        auto n_gen = r.get_u64();
        gen_window.clear();
        for (std::uint64_t i = 0; i < n_gen; ++i) {
            GenWindowItem item;
            item.skill = static_cast<int>(r.get_i64());
            item.params = get_params(r);
            item.log_q = r.get_f64();
            item.discounted_return = r.get_f64();
            gen_window.push_back(std::move(item));
        }
        metrics.load(r);
        if (slide) generator = TaskGenerator::load(ckpt_dir / "generator.bin", spec);
        if (!diayn) discriminator = TrajectoryDiscriminator::load(ckpt_dir / "discriminator.bin");
        if (diayn) state_classifier = StateClassifier::load(ckpt_dir / "state_classifier.bin");
        policy = SkillPolicy::load(ckpt_dir / "skills.bin");
    }

    auto save_rng = [](BlobWriter& w, const Rng& rng) {
        std::ostringstream os;
        rng.save(os);
        w.put_string(os.str());
    };

    auto write_checkpoint = [&](long completed_iterations) {
        auto tmp = run_state_path;
        tmp += ".tmp";
        {
            BlobWriter w(tmp, "SFRUN", kRunStateVersion);
            w.put_u64(signature);
            w.put_i64(completed_iterations);
            w.put_i64(total_env_steps);
            w.put_f64(sac_update_debt);
            w.put_i64(eval_round);
            w.put_f64(diversity.log_alpha);
            w.put_f64(diversity.last_measured_entropy);
            w.put_u64(recent_mi.size());
            for (double v : recent_mi) w.put_f64(v);
            save_rng(w, rng_skill);
            save_rng(w, rng_task);
            save_rng(w, rng_act);
            save_rng(w, rng_sac);
            save_rng(w, rng_disc);
            replay.save(w);
            traj_replay.save(w);
            w.put_u64(gen_window.size());
            for (const auto& item : gen_window) {
                w.put_i64(item.skill);
                put_params(w, item.params);
                w.put_f64(item.log_q);
                w.put_f64(item.discounted_return);
            }
            metrics.save(w);
            w.finish();
        }
        std::filesystem::rename(tmp, run_state_path);
        if (slide) generator.save(ckpt_dir / "generator.bin");
        if (!diayn) discriminator.save(ckpt_dir / "discriminator.bin");
        if (diayn) state_classifier.save(ckpt_dir / "state_classifier.bin");
        policy.save(ckpt_dir / "skills.bin");
    };

    auto measured_entropy = [&]() {
        return slide ? generator.mean_entropy_over_skills() : uniform_entropy;
    };

    // Intrinsic reward for the next-state-discriminator arm, recomputed from
    // the current classifier when a batch is assembled.
    const double log_k = std::log(static_cast<double>(num_skills));
    RewardOverride diayn_reward = [&](const SacTransition& t) {
        return state_classifier.log_posterior(t.next_obs)[t.skill] + log_k;
    };

    std::ofstream traj_log;
    if (config.log_eval_trajectories)
        traj_log.open(out_dir / "trajectories.jsonl", resume ? std::ios::app : std::ios::trunc);

    DiscoveryArtifacts artifacts;
    artifacts.out_dir = out_dir;
    artifacts.checkpoint_dir = ckpt_dir;
    bool stopped_early = false;

    long iter = start_iteration;
    for (; iter < config.iterations; ++iter) {
        if (trace) trace("sample_skill");
        int z = rng_skill.uniform_int(num_skills);

        if (trace) trace("sample_task");
        TaskParams w;
        if (slide) {
            w = sample(spec, generator.distribution_for(z), rng_task);
        } else {
            w = sample(spec, uniform_dist, rng_task);
        }

        if (trace) trace("instantiate");
        const std::uint64_t episode_seed = derive_seed(config.seed, "episode", static_cast<std::uint64_t>(iter));
        auto episode = env.start(w, episode_seed);

        EncodedTrajectory traj;
        traj.skill = z;
        traj.params = w;
        traj.episode_seed = episode_seed;
        traj.initial_obs = episode->observe();
        Vector obs = traj.initial_obs;
        for (int t = 0; t < env.horizon(); ++t) {
            if (trace) trace("act");
            Vector action = policy.act(obs, z, /*deterministic=*/false, rng_act);
            if (trace) trace("env_step");
            auto [reward, done] = episode->step(action);
            Vector next_obs = episode->observe();
            traj.steps.push_back({obs, action, reward, next_obs});
            replay.add({obs, z, action, reward, std::move(next_obs), done});
            obs = traj.steps.back().next_obs;
            ++total_env_steps;

            if (config.train_policy && total_env_steps >= config.sac_warmup_steps) {
                sac_update_debt += config.sac_updates_per_step;
                while (sac_update_debt >= 1.0) {
                    sac_update_debt -= 1.0;
                    if (replay.size() < static_cast<std::size_t>(config.sac.batch_size)) break;
                    if (trace) trace("policy_update");
                    policy.update(replay, rng_sac, diayn ? &diayn_reward : nullptr);
                }
            }
            if (done) break;
        }

        if (trace) trace("compute_posterior");
        double log_q = 0.0;
        if (diayn) {
            log_q = state_classifier.log_posterior(traj.steps.back().next_obs)[z];
        } else {
            log_q = discriminator.log_posterior(traj)[z];
        }
        double disc_return = traj.discounted_return(config.gamma);
        traj_replay.add(traj);

        if (slide && config.train_generator) {
            gen_window.push_back({z, w, log_q, disc_return});
            while (gen_window.size() > static_cast<std::size_t>(config.gen_batch))
                gen_window.pop_front();
        }

        if (diayn) {
            if (replay.size() >= static_cast<std::size_t>(config.disc_batch)) {
                if (trace) trace("discriminator_update");
                auto batch = replay.sample(static_cast<std::size_t>(config.disc_batch), rng_disc);
                state_classifier.train_batch(batch);
            }
        } else if (traj_replay.size() >= static_cast<std::size_t>(config.disc_batch)) {
            if (trace) trace("discriminator_update");
            auto batch = traj_replay.sample(static_cast<std::size_t>(config.disc_batch), rng_disc);
            discriminator.train_step(batch);
        }

        if (slide && config.train_generator &&
            gen_window.size() >= static_cast<std::size_t>(config.gen_min_batch)) {
            if (trace) trace("generator_update");
            std::vector<GeneratorUpdateItem> batch;
            batch.reserve(gen_window.size());
            for (const auto& item : gen_window)
                batch.push_back({item.skill, item.params, item.log_q, item.discounted_return});
            generator.update(batch, diversity.alpha());
        }

        if (slide && config.alpha_updates) {
            if (trace) trace("alpha_update");
            update_alpha(diversity, generator.mean_entropy_over_skills());
        }

        const bool at_eval = (iter + 1) % config.eval_every == 0 || iter + 1 == config.iterations;
        if (at_eval) {
            // Fresh evaluation rollouts with skills assigned round-robin; the
            // per-episode seeds derive from (seed, round, index), so results
            // are identical for any worker count.
            const int n_eval = config.eval_episodes;
            std::vector<EncodedTrajectory> eval_trajs(static_cast<std::size_t>(n_eval));
            auto run_eval = [&](int e) {
                int ez = e % num_skills;
                std::uint64_t base = static_cast<std::uint64_t>(eval_round) * 1000000ull +
                                     static_cast<std::uint64_t>(e);
                Rng task_rng(derive_seed(config.seed, "eval.task", base));
                TaskParams ew = slide ? sample(spec, generator.distribution_for(ez), task_rng)
                                      : sample(spec, uniform_dist, task_rng);
                eval_trajs[static_cast<std::size_t>(e)] =
                    rollout_eval_episode(env, policy, ez, ew, derive_seed(config.seed, "eval.ep", base),
                                         derive_seed(config.seed, "eval.act", base));
            };
            if (config.workers > 1) {
                std::vector<std::thread> pool;
                std::atomic<int> next{0};
                for (int t = 0; t < config.workers; ++t)
                    pool.emplace_back([&]() {
                        for (int e = next.fetch_add(1); e < n_eval; e = next.fetch_add(1)) run_eval(e);
                    });
                for (auto& th : pool) th.join();
            } else {
                for (int e = 0; e < n_eval; ++e) run_eval(e);
            }

            double mi_sum = 0.0, return_sum = 0.0;
            int correct = 0;
            std::vector<const EncodedTrajectory*> eval_ptrs;
            eval_ptrs.reserve(eval_trajs.size());
            for (const auto& t : eval_trajs) eval_ptrs.push_back(&t);
            for (const auto& t : eval_trajs) {
                Vector lp = diayn ? state_classifier.log_posterior(t.steps.back().next_obs)
                                  : discriminator.log_posterior(t);
                mi_sum += lp[t.skill];
                int arg = 0;
                lp.maxCoeff(&arg);
                correct += (arg == t.skill);
                return_sum += t.undiscounted_return();
            }
            double mi_bound = mi_sum / n_eval + log_k;
            double accuracy = static_cast<double>(correct) / n_eval;
            double mean_return = return_sum / n_eval;
            double mean_h = measured_entropy();
            double alpha_now = slide ? diversity.alpha() : config.alpha_init;

            metrics.add_row({std::to_string(iter + 1), format_metric(mi_bound),
                             format_metric(mean_h), format_metric(alpha_now),
                             format_metric(mean_return), format_metric(accuracy)});
            metrics.write(out_dir / "metrics.csv");
            if (!diayn) {
                std::ofstream cm(out_dir / "confusion.csv", std::ios::trunc);
                cm << discriminator.confusion_csv(eval_ptrs);
            }
            if (traj_log.is_open())
                for (const auto& t : eval_trajs) traj_log << trajectory_log_line(t) << "\n";

            artifacts.final_mi_bound = mi_bound;
            artifacts.final_mean_entropy = mean_h;
            artifacts.final_alpha = alpha_now;
            artifacts.final_mean_return = mean_return;
            artifacts.final_disc_accuracy = accuracy;
            ++eval_round;

            if (config.early_stop) {
                recent_mi.push_back(mi_bound);
                while (recent_mi.size() > static_cast<std::size_t>(config.early_stop_patience))
                    recent_mi.pop_front();
                bool target_hit =
                    (!std::isnan(config.early_stop_mi_target) &&
                     mi_bound >= config.early_stop_mi_target) ||
                    (!std::isnan(config.early_stop_accuracy_target) &&
                     accuracy >= config.early_stop_accuracy_target);
                if (!std::isnan(config.early_stop_min_entropy) &&
                    mean_h < config.early_stop_min_entropy)
                    target_hit = false;
                bool plateau = false;
                if (recent_mi.size() == static_cast<std::size_t>(config.early_stop_patience)) {
                    double lo = recent_mi[0], hi = recent_mi[0];
                    for (double v : recent_mi) {
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                    plateau = (hi - lo) <= config.early_stop_eps;
                }
                if (target_hit || plateau) {
                    stopped_early = true;
                    write_checkpoint(iter + 1);
                    ++iter;
                    break;
                }
            }
        }

        if ((iter + 1) % config.checkpoint_every == 0 || iter + 1 == config.iterations)
            write_checkpoint(iter + 1);
    }

    write_checkpoint(iter);
    metrics.write(out_dir / "metrics.csv");

    artifacts.iterations_run = iter;
    artifacts.early_stopped = stopped_early;
    return artifacts;
}

}  // namespace skillforge
