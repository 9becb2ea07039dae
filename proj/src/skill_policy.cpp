#include "skillforge/skill_policy.hpp"

#include <cmath>
#include <set>

namespace skillforge {

namespace {

constexpr std::uint32_t kSkillPolicyVersion = 1;
constexpr double kLogTwoPi = 1.8378770664093453;
constexpr double kTanhClamp = 1.0 - 1e-12;

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::add(SacTransition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[write_pos_] = std::move(t);
    }
    write_pos_ = (write_pos_ + 1) % capacity_;
}

void ReplayBuffer::clear() {
    data_.clear();
    write_pos_ = 0;
}

std::vector<const SacTransition*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
    if (count > data_.size())
        throw std::invalid_argument("replay buffer: asked for " + std::to_string(count) +
                                    " of " + std::to_string(data_.size()) + " records");
    // Floyd's algorithm: `count` distinct indices without materializing the
    // full index range.
    std::set<std::size_t> chosen;
    for (std::size_t i = data_.size() - count; i < data_.size(); ++i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i) + 1));
        if (!chosen.insert(j).second) chosen.insert(i);
    }
    std::vector<const SacTransition*> out;
    out.reserve(count);
    for (std::size_t idx : chosen) out.push_back(&data_[idx]);
    return out;
}

void ReplayBuffer::save(BlobWriter& w) const {
    w.put_u64(capacity_);
    w.put_u64(write_pos_);
    w.put_u64(data_.size());
    for (const auto& t : data_) {
        w.put_vector(t.obs);
        w.put_i64(t.skill);
        w.put_vector(t.action);
        w.put_f64(t.reward);
        w.put_vector(t.next_obs);
        w.put_u64(t.done ? 1 : 0);
    }
}

void ReplayBuffer::load(BlobReader& r) {
    capacity_ = r.get_u64();
    write_pos_ = r.get_u64();
    auto n = r.get_u64();
    data_.clear();
    data_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        SacTransition t;
        t.obs = r.get_vector();
        t.skill = static_cast<int>(r.get_i64());
        t.action = r.get_vector();
        t.reward = r.get_f64();
        t.next_obs = r.get_vector();
        t.done = r.get_u64() != 0;
        data_.push_back(std::move(t));
    }
}

SkillPolicy::SkillPolicy(int obs_dim, int action_dim, int num_skills, double action_limit,
                         SacConfig config, std::uint64_t seed)
    : obs_dim_(obs_dim), action_dim_(action_dim), num_skills_(num_skills),
      action_limit_(action_limit), config_(config) {
    if (num_skills_ < 1) throw std::invalid_argument("skill policy: num_skills must be >= 1");
    target_entropy_ = std::isnan(config_.target_action_entropy) ? -action_dim_
                                                                : config_.target_action_entropy;
    log_temp_ = std::log(config_.init_temp);
    int h = config_.hidden;
    int in = obs_dim_ + num_skills_;
    Rng ra(derive_seed(seed, "sac.actor"));
    Rng rc1(derive_seed(seed, "sac.critic1"));
    Rng rc2(derive_seed(seed, "sac.critic2"));
    actor_ = nn::Mlp(in, {h, h}, 2 * action_dim_, ra);
    critic1_ = nn::Mlp(in + action_dim_, {h, h}, 1, rc1);
    critic2_ = nn::Mlp(in + action_dim_, {h, h}, 1, rc2);
    target1_ = critic1_;
    target2_ = critic2_;
    actor_opt_ = nn::Adam(actor_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
    critic1_opt_ = nn::Adam(critic1_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
    critic2_opt_ = nn::Adam(critic2_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
}

Vector SkillPolicy::actor_input(const Vector& obs, int z) const {
    if (z < 0 || z >= num_skills_)
        throw std::invalid_argument("skill policy: skill index " + std::to_string(z) +
                                    " outside [0, " + std::to_string(num_skills_) + ")");
    if (obs.size() != obs_dim_)
        throw std::invalid_argument("skill policy: observation size mismatch");
    Vector in = Vector::Zero(obs_dim_ + num_skills_);
    in.head(obs_dim_) = obs;
    in[obs_dim_ + z] = 1.0;
    return in;
}

Vector SkillPolicy::act(const Vector& obs, int z, bool deterministic, Rng& rng) const {
    Vector out = actor_.apply(actor_input(obs, z));
    Vector action(action_dim_);
    for (int d = 0; d < action_dim_; ++d) {
        double mean = out[d];
        double u = mean;
        if (!deterministic) {
            double log_std = std::clamp(out[action_dim_ + d], config_.log_std_min, config_.log_std_max);
            u = mean + std::exp(log_std) * rng.normal();
        }
        action[d] = action_limit_ * std::tanh(u);
    }
    return action;
}

double SkillPolicy::action_log_prob(const Vector& obs, int z, const Vector& action) const {
    Vector out = actor_.apply(actor_input(obs, z));
    double lp = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
        double mean = out[d];
        double log_std = std::clamp(out[action_dim_ + d], config_.log_std_min, config_.log_std_max);
        double sigma = std::exp(log_std);
        double t = std::clamp(action[d] / action_limit_, -kTanhClamp, kTanhClamp);
        double u = std::atanh(t);
        double zscore = (u - mean) / sigma;
        lp += -0.5 * zscore * zscore - log_std - 0.5 * kLogTwoPi;
        lp -= std::log(action_limit_ * (1.0 - t * t));
    }
    return lp;
}

std::optional<SacLossReport> SkillPolicy::update(const ReplayBuffer& buffer, Rng& rng,
                                                 const RewardOverride* reward_override) {
    if (buffer.size() < static_cast<std::size_t>(config_.batch_size)) return std::nullopt;
    auto batch = buffer.sample(static_cast<std::size_t>(config_.batch_size), rng);
    return update_with(batch, rng, reward_override);
}

SacLossReport SkillPolicy::update_with(const std::vector<const SacTransition*>& batch, Rng& rng,
                                       const RewardOverride* reward_override) {
    if (batch.empty()) throw std::invalid_argument("skill policy: empty batch");
    const int b = static_cast<int>(batch.size());
    const int in_dim = obs_dim_ + num_skills_;
    const double inv_b = 1.0 / b;
    const double temp = std::exp(log_temp_);

    Matrix x(in_dim, b), xn(in_dim, b), a_data(action_dim_, b);
    Vector rewards(b), not_done(b);
    for (int i = 0; i < b; ++i) {
        const auto& t = *batch[static_cast<std::size_t>(i)];
        x.col(i) = actor_input(t.obs, t.skill);
        xn.col(i) = actor_input(t.next_obs, t.skill);
        a_data.col(i) = t.action;
        rewards[i] = config_.reward_scale * (reward_override ? (*reward_override)(t) : t.reward);
        not_done[i] = t.done ? 0.0 : 1.0;
    }

    // Bootstrap targets from the target critics and a fresh next action.
    Matrix next_out = actor_.apply(xn);
    Matrix a_next(action_dim_, b);
    Vector logp_next = Vector::Zero(b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < action_dim_; ++d) {
            double mean = next_out(d, i);
            double log_std =
                std::clamp(next_out(action_dim_ + d, i), config_.log_std_min, config_.log_std_max);
            double sigma = std::exp(log_std);
            double eps = rng.normal();
            double u = mean + sigma * eps;
            double th = std::tanh(u);
            a_next(d, i) = action_limit_ * th;
            logp_next[i] += -0.5 * eps * eps - log_std - 0.5 * kLogTwoPi -
                            std::log(action_limit_ * (1.0 - th * th));
        }
    }
    Matrix xq_next(in_dim + action_dim_, b);
    xq_next << xn, a_next;
    Vector q1n = target1_.apply(xq_next).row(0).transpose();
    Vector q2n = target2_.apply(xq_next).row(0).transpose();
    Vector y(b);
    for (int i = 0; i < b; ++i)
        y[i] = rewards[i] +
               config_.gamma * not_done[i] * (std::min(q1n[i], q2n[i]) - temp * logp_next[i]);

    // Actor phase: reparameterized action, gradient through the min critic.
    Matrix actor_out = actor_.forward(x);
    Matrix a_pi(action_dim_, b), tanh_u(action_dim_, b), eps_pi(action_dim_, b),
        sigma_pi(action_dim_, b);
    Matrix in_range(action_dim_, b);
    Vector logp_pi = Vector::Zero(b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < action_dim_; ++d) {
            double mean = actor_out(d, i);
            double raw = actor_out(action_dim_ + d, i);
            double log_std = std::clamp(raw, config_.log_std_min, config_.log_std_max);
            in_range(d, i) = (raw > config_.log_std_min && raw < config_.log_std_max) ? 1.0 : 0.0;
            double sigma = std::exp(log_std);
            double eps = rng.normal();
            double u = mean + sigma * eps;
            double th = std::tanh(u);
            eps_pi(d, i) = eps;
            sigma_pi(d, i) = sigma;
            tanh_u(d, i) = th;
            a_pi(d, i) = action_limit_ * th;
            logp_pi[i] += -0.5 * eps * eps - log_std - 0.5 * kLogTwoPi -
                          std::log(action_limit_ * (1.0 - th * th));
        }
    }
    Matrix xq_pi(in_dim + action_dim_, b);
    xq_pi << x, a_pi;
    Vector q1p = critic1_.forward(xq_pi).row(0).transpose();
    Vector q2p = critic2_.forward(xq_pi).row(0).transpose();

    Matrix dq1 = Matrix::Zero(1, b), dq2 = Matrix::Zero(1, b);
    double actor_loss = 0.0;
    for (int i = 0; i < b; ++i) {
        double qmin = std::min(q1p[i], q2p[i]);
        actor_loss += (temp * logp_pi[i] - qmin) * inv_b;
        (q1p[i] <= q2p[i] ? dq1(0, i) : dq2(0, i)) = -inv_b;
    }
    critic1_.zero_grad();
    critic2_.zero_grad();
    Matrix din1 = critic1_.backward(dq1);
    Matrix din2 = critic2_.backward(dq2);
    // The critic parameter gradients from the actor objective are discarded;
    // only the action-input gradients feed the actor.
    critic1_.zero_grad();
    critic2_.zero_grad();
    Matrix da = din1.bottomRows(action_dim_) + din2.bottomRows(action_dim_);

    Matrix dactor_out = Matrix::Zero(2 * action_dim_, b);
    for (int i = 0; i < b; ++i) {
        for (int d = 0; d < action_dim_; ++d) {
            double th = tanh_u(d, i);
            double da_du = action_limit_ * (1.0 - th * th);
            double dlogp_du = 2.0 * th;
            double du_draw = sigma_pi(d, i) * eps_pi(d, i) * in_range(d, i);
            // d(temp * logp)/d. + d(-qmin)/d. ; da already carries -1/B.
            dactor_out(d, i) = inv_b * temp * dlogp_du + da(d, i) * da_du;
            dactor_out(action_dim_ + d, i) =
                inv_b * temp * (dlogp_du * du_draw - in_range(d, i)) + da(d, i) * da_du * du_draw;
        }
    }
    actor_.zero_grad();
    actor_.backward(dactor_out);

    // Critic phase on the stored actions.
    Matrix xq_data(in_dim + action_dim_, b);
    xq_data << x, a_data;
    Vector q1d = critic1_.forward(xq_data).row(0).transpose();
    double critic1_loss = (q1d - y).squaredNorm() * inv_b;
    critic1_.backward(Matrix((2.0 * inv_b) * (q1d - y).transpose()));
    Vector q2d = critic2_.forward(xq_data).row(0).transpose();
    double critic2_loss = (q2d - y).squaredNorm() * inv_b;
    critic2_.backward(Matrix((2.0 * inv_b) * (q2d - y).transpose()));

    SacLossReport report;
    report.critic1_loss = critic1_loss;
    report.critic2_loss = critic2_loss;
    report.actor_loss = actor_loss;
    report.sac_temp = temp;
    report.mean_action_entropy = -logp_pi.mean();

    bool finite = std::isfinite(critic1_loss) && std::isfinite(critic2_loss) &&
                  std::isfinite(actor_loss) && nn::all_grads_finite(actor_) &&
                  nn::all_grads_finite(critic1_) && nn::all_grads_finite(critic2_);
    if (!finite) {
        actor_.zero_grad();
        critic1_.zero_grad();
        critic2_.zero_grad();
        report.note = "non-finite loss or gradient; step skipped";
        return report;
    }

    actor_opt_.step(actor_);
    critic1_opt_.step(critic1_);
    critic2_opt_.step(critic2_);
    actor_.zero_grad();
    critic1_.zero_grad();
    critic2_.zero_grad();

    // Temperature dual step toward the target action entropy.
    log_temp_ += config_.lr * (logp_pi.mean() + target_entropy_);
    log_temp_ = std::clamp(log_temp_, -10.0, 4.0);

    nn::polyak_update(target1_, critic1_, config_.polyak_tau);
    nn::polyak_update(target2_, critic2_, config_.polyak_tau);

    report.applied = true;
    return report;
}

void SkillPolicy::save(const std::filesystem::path& path) const {
    BlobWriter w(path, "SFSAC", kSkillPolicyVersion);
    w.put_i64(obs_dim_);
    w.put_i64(action_dim_);
    w.put_i64(num_skills_);
    w.put_f64(action_limit_);
    w.put_i64(config_.hidden);
    w.put_f64(config_.lr);
    w.put_f64(config_.adam_beta1);
    w.put_f64(config_.adam_beta2);
    w.put_i64(config_.batch_size);
    w.put_f64(config_.gamma);
    w.put_f64(config_.polyak_tau);
    w.put_f64(config_.init_temp);
    w.put_f64(target_entropy_);
    w.put_f64(config_.reward_scale);
    w.put_f64(config_.log_std_min);
    w.put_f64(config_.log_std_max);
    w.put_u64(config_.replay_capacity);
    w.put_f64(log_temp_);
    actor_.save(w);
    critic1_.save(w);
    critic2_.save(w);
    target1_.save(w);
    target2_.save(w);
    actor_opt_.save(w);
    critic1_opt_.save(w);
    critic2_opt_.save(w);
    w.finish();
}

SkillPolicy SkillPolicy::load(const std::filesystem::path& path) {
    BlobReader r(path, "SFSAC", kSkillPolicyVersion);
    SkillPolicy p;
    p.obs_dim_ = static_cast<int>(r.get_i64());
    p.action_dim_ = static_cast<int>(r.get_i64());
    p.num_skills_ = static_cast<int>(r.get_i64());
    p.action_limit_ = r.get_f64();
    p.config_.hidden = static_cast<int>(r.get_i64());
    p.config_.lr = r.get_f64();
    p.config_.adam_beta1 = r.get_f64();
    p.config_.adam_beta2 = r.get_f64();
    p.config_.batch_size = static_cast<int>(r.get_i64());
    p.config_.gamma = r.get_f64();
    p.config_.polyak_tau = r.get_f64();
    p.config_.init_temp = r.get_f64();
    p.target_entropy_ = r.get_f64();
    p.config_.target_action_entropy = p.target_entropy_;
    p.config_.reward_scale = r.get_f64();
    p.config_.log_std_min = r.get_f64();
    p.config_.log_std_max = r.get_f64();
    p.config_.replay_capacity = r.get_u64();
    p.log_temp_ = r.get_f64();
    p.actor_.load(r);
    p.critic1_.load(r);
    p.critic2_.load(r);
    p.target1_.load(r);
    p.target2_.load(r);
    p.actor_opt_.load(r);
    p.critic1_opt_.load(r);
    p.critic2_opt_.load(r);
    return p;
}

}  // namespace skillforge
