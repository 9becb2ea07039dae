#include "skillforge/baselines.hpp"

#include <cmath>

namespace skillforge {

namespace {
constexpr std::uint32_t kStateClassifierVersion = 1;

Vector log_softmax(const Vector& logits) {
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits.array() - lse;
}

}  // namespace

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::UniformTasks: return "uniform_tasks";
        case BaselineKind::NextStateDiscriminator: return "next_state_discriminator";
        case BaselineKind::FlatSac: return "flat_sac";
    }
    return "unknown";
}

std::optional<BaselineKind> baseline_from_string(const std::string& name) {
    if (name == "uniform_tasks") return BaselineKind::UniformTasks;
    if (name == "next_state_discriminator") return BaselineKind::NextStateDiscriminator;
    if (name == "flat_sac") return BaselineKind::FlatSac;
    return std::nullopt;
}

StateClassifier::StateClassifier(int obs_dim, int num_skills, int hidden, double lr, double beta1,
                                 double beta2, std::uint64_t seed)
    : obs_dim_(obs_dim), num_skills_(num_skills) {
    Rng rng(derive_seed(seed, "state_classifier.init"));
    net_ = nn::Mlp(obs_dim, {hidden, hidden}, num_skills, rng);
    // Start close to a uniform posterior.
    net_.layers().back().w *= 0.1;
    opt_ = nn::Adam(net_.param_count(), lr, beta1, beta2);
}

Vector StateClassifier::log_posterior(const Vector& obs) const {
    return log_softmax(net_.apply(obs));
}

double StateClassifier::train_batch(const std::vector<const SacTransition*>& batch) {
    if (batch.empty()) throw std::invalid_argument("state classifier: empty batch");
    const int b = static_cast<int>(batch.size());
    Matrix x(obs_dim_, b);
    for (int i = 0; i < b; ++i) x.col(i) = batch[static_cast<std::size_t>(i)]->next_obs;
    Matrix logits = net_.forward(x);
    Matrix dlogits(num_skills_, b);
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        Vector ls = log_softmax(logits.col(i));
        int label = batch[static_cast<std::size_t>(i)]->skill;
        loss -= ls[label] / b;
        Vector probs = ls.array().exp();
        dlogits.col(i) = probs / b;
        dlogits(label, i) -= 1.0 / b;
    }
    if (!std::isfinite(loss)) return loss;
    net_.zero_grad();
    net_.backward(dlogits);
    if (nn::all_grads_finite(net_)) opt_.step(net_);
    net_.zero_grad();
    return loss;
}

double StateClassifier::accuracy(const std::vector<std::pair<Vector, int>>& labeled) const {
    if (labeled.empty()) return 0.0;
    int correct = 0;
    for (const auto& [obs, z] : labeled) {
        Vector lp = log_posterior(obs);
        int arg = 0;
        lp.maxCoeff(&arg);
        correct += (arg == z);
    }
    return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

void StateClassifier::save(const std::filesystem::path& path) const {
    BlobWriter w(path, "SFSTCLS", kStateClassifierVersion);
    w.put_i64(obs_dim_);
    w.put_i64(num_skills_);
    net_.save(w);
    opt_.save(w);
    w.finish();
}

StateClassifier StateClassifier::load(const std::filesystem::path& path) {
    BlobReader r(path, "SFSTCLS", kStateClassifierVersion);
    StateClassifier c;
    c.obs_dim_ = static_cast<int>(r.get_i64());
    c.num_skills_ = static_cast<int>(r.get_i64());
    c.net_.load(r);
    c.opt_.load(r);
    return c;
}

DiscoveryArtifacts run_uniform_discovery(const TaskEnvironment& env, const DiscoveryConfig& config,
                                         const std::filesystem::path& out_dir, bool resume) {
    DiscoveryConfig c = config;
    c.train_generator = false;
    c.alpha_updates = false;
    return run_discovery_mode(env, c, out_dir, DiscoveryMode::UniformTasks, resume);
}

DiscoveryArtifacts run_diayn_style(const TaskEnvironment& env, const DiscoveryConfig& config,
                                   const std::filesystem::path& out_dir, bool resume) {
    DiscoveryConfig c = config;
    c.train_generator = false;
    c.alpha_updates = false;
    // The intrinsic reward log q - log p(z) is already O(1).
    c.sac.reward_scale = 1.0;
    return run_discovery_mode(env, c, out_dir, DiscoveryMode::DiaynState, resume);
}

TransferArtifacts run_flat_sac(const TaskEnvironment& env, const TargetTaskSpec& target,
                               const TransferConfig& config, const std::filesystem::path& out_dir) {
    // A single-skill policy with z fixed to 0 is exactly an unconditioned
    // actor-critic: the constant one-hot input folds into the first-layer
    // bias.
    SacConfig sac;
    sac.hidden = config.hidden;
    sac.lr = config.lr;
    sac.adam_beta1 = config.adam_beta1;
    sac.adam_beta2 = config.adam_beta2;
    sac.batch_size = config.batch_size;
    sac.gamma = config.gamma;
    sac.reward_scale = config.reward_scale;
    sac.replay_capacity = config.replay_capacity;
    SkillPolicy policy(env.obs_dim(), env.action_dim(), 1, env.action_limit(), sac,
                       derive_seed(config.seed, "flat_sac"));
    TransferConfig c = config;
    c.finetune_skills = true;      // the whole arm is plain SAC training
    c.selection = TransferConfig::Selection::UniformRandom;  // K=1: selection is vacuous
    return run_transfer(env, std::move(policy), target, c, out_dir);
}

}  // namespace skillforge
