#include "skillforge/transfer.hpp"

#include <cmath>
#include <fstream>

namespace skillforge {

HighLevelQPolicy::HighLevelQPolicy(int obs_dim, int num_skills, const TransferConfig& config,
                                   std::uint64_t seed) {
    Rng rng(derive_seed(seed, "transfer.q"));
    q_ = nn::Mlp(obs_dim, {config.hidden, config.hidden}, num_skills, rng);
    target_ = q_;
    opt_ = nn::Adam(q_.param_count(), config.lr, config.adam_beta1, config.adam_beta2);
}

int HighLevelQPolicy::greedy(const Vector& obs) const {
    Vector values = q_.apply(obs);
    int arg = 0;
    values.maxCoeff(&arg);
    return arg;
}

void HighLevelQPolicy::update(const std::vector<const SacTransition*>& batch, double gamma) {
    const int b = static_cast<int>(batch.size());
    if (b == 0) throw std::invalid_argument("q policy: empty batch");
    Matrix x(q_.in_dim(), b), xn(q_.in_dim(), b);
    for (int i = 0; i < b; ++i) {
        x.col(i) = batch[static_cast<std::size_t>(i)]->obs;
        xn.col(i) = batch[static_cast<std::size_t>(i)]->next_obs;
    }
    Matrix qn = target_.apply(xn);
    Matrix qv = q_.forward(x);
    Matrix dq = Matrix::Zero(qv.rows(), b);
    for (int i = 0; i < b; ++i) {
        const auto& t = *batch[static_cast<std::size_t>(i)];
        double boot = t.done ? 0.0 : gamma * qn.col(i).maxCoeff();
        double y = t.reward + boot;
        dq(t.skill, i) = 2.0 * (qv(t.skill, i) - y) / b;
    }
    q_.zero_grad();
    q_.backward(dq);
    if (nn::all_grads_finite(q_)) opt_.step(q_);
    q_.zero_grad();
}

double HighLevelQPolicy::epsilon_at(const TransferConfig& config, long step) {
    const long eps_steps =
        std::max<long>(1, static_cast<long>(config.eps_fraction * config.steps));
    return config.eps_start + (config.eps_end - config.eps_start) *
                                  std::min<double>(1.0, static_cast<double>(step) / eps_steps);
}

namespace {

struct EvalOutcome {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> selection_histogram;
};

std::string histogram_cell(const std::vector<double>& h) {
    std::string s;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i) s += ",";
        s += format_metric(h[i]);
    }
    return s;
}

/// Greedy-skill, deterministic-actor evaluation over eval_episodes fresh
/// instances of the target task.
EvalOutcome evaluate(const TaskEnvironment& env, const SkillPolicy& skills,
                     const HighLevelQPolicy* qp, const TargetTaskSpec& target,
                     const TransferConfig& config, long step, long eval_round) {
    EvalOutcome out;
    const int num_skills = skills.num_skills();
    out.selection_histogram.assign(static_cast<std::size_t>(num_skills), 0.0);
    std::vector<double> returns;
    returns.reserve(static_cast<std::size_t>(target.eval_episodes));
    long selections = 0;
    for (int e = 0; e < target.eval_episodes; ++e) {
        std::uint64_t base =
            static_cast<std::uint64_t>(eval_round) * 1000000ull + static_cast<std::uint64_t>(e);
        Rng rng(derive_seed(config.seed, "transfer.eval", base));
        auto ep = env.start(target.params, derive_seed(config.seed, "transfer.eval.ep", base));
        Vector obs = ep->observe();
        double ret = 0.0;
        int z = 0;
        for (int t = 0; t < env.horizon(); ++t) {
            if (t % config.hold_length == 0) {
                z = (config.selection == TransferConfig::Selection::UniformRandom || !qp)
                        ? rng.uniform_int(num_skills)
                        : qp->greedy(obs);
                ++out.selection_histogram[static_cast<std::size_t>(z)];
                ++selections;
            }
            Vector action = skills.act(obs, z, /*deterministic=*/true, rng);
            auto [reward, done] = ep->step(action);
            ret += reward;
            obs = ep->observe();
            if (done) break;
        }
        returns.push_back(ret);
    }
    double mean = 0.0;
    for (double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (double r : returns) var += (r - mean) * (r - mean);
    var /= static_cast<double>(returns.size());
    out.mean = mean;
    out.stddev = std::sqrt(var);
    if (selections > 0)
        for (auto& h : out.selection_histogram) h /= static_cast<double>(selections);
    (void)step;
    return out;
}

}  // namespace

void TransferConfig::validate() const {
    if (steps < 0) throw ConfigError("transfer.steps must be >= 0");
    if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("transfer.gamma must be in (0, 1]");
    if (hold_length < 1) throw ConfigError("transfer.hold_length must be >= 1");
    if (batch_size < 1) throw ConfigError("transfer.batch_size must be >= 1");
    if (eps_start < eps_end) throw ConfigError("transfer.eps_start must be >= eps_end");
}

TransferConfig TransferConfig::from_config(const KeyValueConfig& cfg) {
    TransferConfig c;
    c.steps = cfg.get_long("transfer", "steps");
    c.seed = static_cast<std::uint64_t>(cfg.get_long_or("transfer", "seed", 1));
    c.gamma = cfg.get_double_or("transfer", "gamma", 0.99);
    c.hidden = static_cast<int>(cfg.get_long_or("transfer", "hidden", 64));
    c.lr = cfg.get_double_or("transfer", "lr", 3e-4);
    c.adam_beta1 = cfg.get_double_or("transfer", "adam_beta1", 0.9);
    c.adam_beta2 = cfg.get_double_or("transfer", "adam_beta2", 0.999);
    c.batch_size = static_cast<int>(cfg.get_long_or("transfer", "batch_size", 128));
    c.reward_scale = cfg.get_double_or("transfer", "reward_scale", 10.0);
    c.replay_capacity = static_cast<std::size_t>(cfg.get_long_or("transfer", "replay_capacity", 100000));
    c.eps_start = cfg.get_double_or("transfer", "eps_start", 1.0);
    c.eps_end = cfg.get_double_or("transfer", "eps_end", 0.05);
    c.eps_fraction = cfg.get_double_or("transfer", "eps_fraction", 0.2);
    c.target_sync = cfg.get_long_or("transfer", "target_sync", 1000);
    c.warmup_steps = cfg.get_long_or("transfer", "warmup_steps", 1000);
    c.updates_per_step = cfg.get_double_or("transfer", "updates_per_step", 1.0);
    c.finetune_skills = cfg.get_bool_or("transfer", "finetune_skills", true);
    c.hold_length = static_cast<int>(cfg.get_long_or("transfer", "hold_length", 1));
    std::string sel = cfg.get_string_or("transfer", "selection", "learned");
    if (sel == "learned")
        c.selection = Selection::Learned;
    else if (sel == "uniform_random")
        c.selection = Selection::UniformRandom;
    else
        throw ConfigError("transfer.selection must be 'learned' or 'uniform_random'");
    c.validate();
    return c;
}

TargetTaskSpec TransferConfig::target_from_config(const KeyValueConfig& cfg,
                                                  const TaskParamSpec& spec) {
    TargetTaskSpec t;
    t.params.values = cfg.get_double_list("transfer", "target_params");
    try {
        validate_params(spec, t.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("transfer.target_params: ") + e.what());
    }
    t.eval_episodes = static_cast<int>(cfg.get_long_or("transfer", "eval_episodes", 50));
    t.eval_every = cfg.get_long_or("transfer", "eval_every", 10000);
    if (t.eval_episodes < 1) throw ConfigError("transfer.eval_episodes must be >= 1");
    if (t.eval_every < 1) throw ConfigError("transfer.eval_every must be >= 1");
    return t;
}

TransferArtifacts run_transfer(const TaskEnvironment& env, SkillPolicy skills,
                               const TargetTaskSpec& target, const TransferConfig& config,
                               const std::filesystem::path& out_dir) {
    config.validate();
    validate_params(env.param_spec(), target.params);
    if (skills.obs_dim() != env.obs_dim() || skills.action_dim() != env.action_dim())
        throw ConfigError("transfer: skill policy dimensions do not match the environment");
    std::filesystem::create_directories(out_dir);

    const int num_skills = skills.num_skills();
    HighLevelQPolicy qp(env.obs_dim(), num_skills, config, config.seed);
    ReplayBuffer replay(config.replay_capacity);
    Rng rng_select(derive_seed(config.seed, "transfer.select"));
    Rng rng_act(derive_seed(config.seed, "transfer.act"));
    Rng rng_update(derive_seed(config.seed, "transfer.update"));

    MetricsTable metrics({kTransferMetricColumns[0], kTransferMetricColumns[1],
                          kTransferMetricColumns[2], kTransferMetricColumns[3]});
    TransferArtifacts artifacts;
    artifacts.out_dir = out_dir;

    long eval_round = 0;
    auto emit_eval = [&](long step) {
        auto ev = evaluate(env, skills, &qp, target, config, step, eval_round);
        metrics.add_row({std::to_string(step), format_metric(ev.mean), format_metric(ev.stddev),
                         histogram_cell(ev.selection_histogram)});
        metrics.write(out_dir / "metrics.csv");
        artifacts.final_eval_return_mean = ev.mean;
        artifacts.final_eval_return_std = ev.stddev;
        artifacts.final_selection_histogram = ev.selection_histogram;
        ++eval_round;
    };

    if (config.steps == 0) {
        emit_eval(0);
        artifacts.steps_run = 0;
        return artifacts;
    }

    double update_debt = 0.0;
    std::unique_ptr<TaskEnvironment::Episode> episode;
    Vector obs;
    std::uint64_t episode_index = 0;
    int steps_in_episode = 0;
    int z = 0;

    for (long step = 0; step < config.steps; ++step) {
        if (!episode || steps_in_episode >= env.horizon()) {
            episode = env.start(target.params,
                                derive_seed(config.seed, "transfer.episode", episode_index++));
            obs = episode->observe();
            steps_in_episode = 0;
        }
        if (steps_in_episode % config.hold_length == 0) {
            if (config.selection == TransferConfig::Selection::UniformRandom) {
                z = rng_select.uniform_int(num_skills);
            } else {
                double eps = HighLevelQPolicy::epsilon_at(config, step);
                z = (rng_select.uniform() < eps) ? rng_select.uniform_int(num_skills)
                                                 : qp.greedy(obs);
            }
        }
        Vector action = skills.act(obs, z, /*deterministic=*/false, rng_act);
        auto [reward, done] = episode->step(action);
        Vector next_obs = episode->observe();
        replay.add({obs, z, action, reward, next_obs, done});
        obs = std::move(next_obs);
        ++steps_in_episode;

        if (step >= config.warmup_steps &&
            replay.size() >= static_cast<std::size_t>(config.batch_size)) {
            update_debt += config.updates_per_step;
            while (update_debt >= 1.0) {
                update_debt -= 1.0;
                if (config.selection == TransferConfig::Selection::Learned) {
                    auto batch =
                        replay.sample(static_cast<std::size_t>(config.batch_size), rng_update);
                    qp.update(batch, config.gamma);
                }
                if (config.finetune_skills) skills.update(replay, rng_update);
            }
        }
        if ((step + 1) % config.target_sync == 0) qp.sync_target();
        if ((step + 1) % target.eval_every == 0 || step + 1 == config.steps) emit_eval(step + 1);
    }

    skills.save(out_dir / "skills_finetuned.bin");
    artifacts.steps_run = config.steps;
    return artifacts;
}

}  // namespace skillforge
