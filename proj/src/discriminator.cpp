#include "skillforge/discriminator.hpp"

#include <cmath>
#include <sstream>

namespace skillforge {

namespace {

constexpr std::uint32_t kDiscriminatorVersion = 1;

Vector log_softmax(const Vector& logits) {
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits.array() - lse;
}

}  // namespace

TrajectoryDiscriminator::TrajectoryDiscriminator(int obs_dim, int action_dim, int num_skills,
                                                 DiscriminatorConfig config, std::uint64_t seed)
    : obs_dim_(obs_dim), action_dim_(action_dim), num_skills_(num_skills), config_(config) {
    if (num_skills_ < 1) throw std::invalid_argument("discriminator: num_skills must be >= 1");
    int h = config_.hidden;
    Rng r_init(derive_seed(seed, "disc.init_enc"));
    Rng r_step(derive_seed(seed, "disc.step_enc"));
    Rng r_head(derive_seed(seed, "disc.head"));
    init_enc_ = nn::Mlp(obs_dim_, {h}, h, r_init);
    step_enc_ = nn::Mlp(2 * obs_dim_ + action_dim_ + 1, {h}, h, r_step);
    head_ = nn::Mlp(2 * h, {h}, num_skills_, r_head);
    // Start close to a uniform posterior.
    head_.layers().back().w *= 0.1;
    init_opt_ = nn::Adam(init_enc_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
    step_opt_ = nn::Adam(step_enc_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
    head_opt_ = nn::Adam(head_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
}

Matrix TrajectoryDiscriminator::step_inputs(const EncodedTrajectory& traj) const {
    int t_len = traj.length();
    Matrix in(2 * obs_dim_ + action_dim_ + 1, t_len);
    for (int t = 0; t < t_len; ++t) {
        const auto& s = traj.steps[static_cast<std::size_t>(t)];
        if (s.obs.size() != obs_dim_ || s.next_obs.size() != obs_dim_ || s.action.size() != action_dim_)
            throw std::invalid_argument("discriminator: trajectory dims do not match the network");
        in.block(0, t, obs_dim_, 1) = s.obs;
        in.block(obs_dim_, t, action_dim_, 1) = s.action;
        in(obs_dim_ + action_dim_, t) = s.reward / reward_scale_;
        in.block(obs_dim_ + action_dim_ + 1, t, obs_dim_, 1) = s.next_obs;
    }
    return in;
}

Vector TrajectoryDiscriminator::logits_const(const EncodedTrajectory& traj) const {
    if (traj.steps.empty())
        throw std::invalid_argument("discriminator: empty trajectory");
    Vector init_feat = init_enc_.apply(traj.initial_obs);
    Matrix step_feat = step_enc_.apply(step_inputs(traj));
    Vector pooled = step_feat.rowwise().mean();
    Vector head_in(2 * config_.hidden);
    head_in << pooled, init_feat;
    return head_.apply(head_in);
}

Vector TrajectoryDiscriminator::log_posterior(const EncodedTrajectory& traj) const {
    return log_softmax(logits_const(traj));
}

double TrajectoryDiscriminator::accumulate_gradient(
    const std::vector<const EncodedTrajectory*>& batch) {
    if (batch.empty()) throw std::invalid_argument("discriminator: empty batch");
    const int b = static_cast<int>(batch.size());
    for (const auto* t : batch) {
        if (t->steps.empty()) throw std::invalid_argument("discriminator: empty trajectory in batch");
        if (t->skill < 0 || t->skill >= num_skills_)
            throw std::invalid_argument("discriminator: label " + std::to_string(t->skill) +
                                        " outside [0, " + std::to_string(num_skills_) + ")");
    }

    // Concatenate every step of every trajectory into one matrix.
    std::vector<int> offsets(static_cast<std::size_t>(b) + 1, 0);
    for (int i = 0; i < b; ++i)
        offsets[static_cast<std::size_t>(i) + 1] =
            offsets[static_cast<std::size_t>(i)] + batch[static_cast<std::size_t>(i)]->length();
    int total_steps = offsets[static_cast<std::size_t>(b)];

    Matrix all_steps(2 * obs_dim_ + action_dim_ + 1, total_steps);
    Matrix init_in(obs_dim_, b);
    for (int i = 0; i < b; ++i) {
        const auto& traj = *batch[static_cast<std::size_t>(i)];
        all_steps.block(0, offsets[static_cast<std::size_t>(i)], all_steps.rows(), traj.length()) =
            step_inputs(traj);
        init_in.col(i) = traj.initial_obs;
    }

    Matrix step_feat = step_enc_.forward(all_steps);
    Matrix init_feat = init_enc_.forward(init_in);
    Matrix head_in(2 * config_.hidden, b);
    for (int i = 0; i < b; ++i) {
        int len = batch[static_cast<std::size_t>(i)]->length();
        head_in.block(0, i, config_.hidden, 1) =
            step_feat.middleCols(offsets[static_cast<std::size_t>(i)], len).rowwise().mean();
        head_in.block(config_.hidden, i, config_.hidden, 1) = init_feat.col(i);
    }
    Matrix logits = head_.forward(head_in);

    double loss = 0.0;
    Matrix dlogits(num_skills_, b);
    for (int i = 0; i < b; ++i) {
        Vector ls = log_softmax(logits.col(i));
        int label = batch[static_cast<std::size_t>(i)]->skill;
        loss -= ls[label] / b;
        Vector probs = ls.array().exp();
        dlogits.col(i) = probs / b;
        dlogits(label, i) -= 1.0 / b;
    }
    if (!std::isfinite(loss)) return loss;

    zero_grads();
    Matrix dhead_in = head_.backward(dlogits);
    Matrix dstep_feat(config_.hidden, total_steps);
    for (int i = 0; i < b; ++i) {
        int len = batch[static_cast<std::size_t>(i)]->length();
        // Mean pooling distributes the pooled gradient equally over steps.
        for (int t = 0; t < len; ++t)
            dstep_feat.col(offsets[static_cast<std::size_t>(i)] + t) =
                dhead_in.block(0, i, config_.hidden, 1) / len;
    }
    Matrix dinit_feat = dhead_in.bottomRows(config_.hidden);
    step_enc_.backward(dstep_feat);
    init_enc_.backward(dinit_feat);
    return loss;
}

void TrajectoryDiscriminator::zero_grads() {
    init_enc_.zero_grad();
    step_enc_.zero_grad();
    head_.zero_grad();
}

Vector TrajectoryDiscriminator::loss_gradient(const std::vector<const EncodedTrajectory*>& batch) {
    accumulate_gradient(batch);
    Vector g(static_cast<Eigen::Index>(init_enc_.param_count() + step_enc_.param_count() +
                                       head_.param_count()));
    g << init_enc_.flat_grads(), step_enc_.flat_grads(), head_.flat_grads();
    zero_grads();
    return g;
}

DiscriminatorTrainReport TrajectoryDiscriminator::train_step(
    const std::vector<const EncodedTrajectory*>& batch) {
    if (batch.empty()) throw std::invalid_argument("discriminator: empty batch");
    // Fold this batch's reward magnitude into the running scale first so
    // inference between steps sees the same normalization as training.
    double sq = 0.0;
    long n_steps = 0;
    for (const auto* t : batch) {
        for (const auto& s : t->steps) {
            sq += s.reward * s.reward;
            ++n_steps;
        }
    }
    double batch_rms = std::sqrt(sq / std::max<long>(n_steps, 1));
    double d = config_.reward_scale_decay;
    reward_scale_ = std::max(d * reward_scale_ + (1.0 - d) * batch_rms, 1e-3);

    DiscriminatorTrainReport report;
    report.loss = accumulate_gradient(batch);
    if (!std::isfinite(report.loss)) {
        report.note = "non-finite loss; step skipped";
        return report;
    }
    if (!nn::all_grads_finite(init_enc_) || !nn::all_grads_finite(step_enc_) ||
        !nn::all_grads_finite(head_)) {
        zero_grads();
        report.note = "non-finite gradient; step skipped";
        return report;
    }
    head_opt_.step(head_);
    step_opt_.step(step_enc_);
    init_opt_.step(init_enc_);
    zero_grads();
    report.applied = true;
    return report;
}

double TrajectoryDiscriminator::accuracy(const std::vector<const EncodedTrajectory*>& batch) const {
    if (batch.empty()) return 0.0;
    int correct = 0;
    for (const auto* t : batch) {
        Vector lp = log_posterior(*t);
        int arg = 0;
        lp.maxCoeff(&arg);
        correct += (arg == t->skill);
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

std::string TrajectoryDiscriminator::confusion_csv(
    const std::vector<const EncodedTrajectory*>& batch) const {
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(num_skills_),
                                          std::vector<long>(static_cast<std::size_t>(num_skills_), 0));
    for (const auto* t : batch) {
        Vector lp = log_posterior(*t);
        int arg = 0;
        lp.maxCoeff(&arg);
        ++counts[static_cast<std::size_t>(t->skill)][static_cast<std::size_t>(arg)];
    }
    std::ostringstream os;
    os << "true_skill";
    for (int j = 0; j < num_skills_; ++j) os << ",pred_" << j;
    os << "\n";
    for (int i = 0; i < num_skills_; ++i) {
        os << i;
        for (int j = 0; j < num_skills_; ++j)
            os << "," << counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        os << "\n";
    }
    return os.str();
}

void TrajectoryDiscriminator::save(const std::filesystem::path& path) const {
    BlobWriter w(path, "SFDISC", kDiscriminatorVersion);
    w.put_i64(obs_dim_);
    w.put_i64(action_dim_);
    w.put_i64(num_skills_);
    w.put_i64(config_.hidden);
    w.put_f64(config_.lr);
    w.put_f64(config_.adam_beta1);
    w.put_f64(config_.adam_beta2);
    w.put_f64(config_.reward_scale_decay);
    w.put_f64(reward_scale_);
    init_enc_.save(w);
    step_enc_.save(w);
    head_.save(w);
    init_opt_.save(w);
    step_opt_.save(w);
    head_opt_.save(w);
    w.finish();
}

TrajectoryDiscriminator TrajectoryDiscriminator::load(const std::filesystem::path& path) {
    BlobReader r(path, "SFDISC", kDiscriminatorVersion);
    TrajectoryDiscriminator d;
    d.obs_dim_ = static_cast<int>(r.get_i64());
    d.action_dim_ = static_cast<int>(r.get_i64());
    d.num_skills_ = static_cast<int>(r.get_i64());
    d.config_.hidden = static_cast<int>(r.get_i64());
    d.config_.lr = r.get_f64();
    d.config_.adam_beta1 = r.get_f64();
    d.config_.adam_beta2 = r.get_f64();
    d.config_.reward_scale_decay = r.get_f64();
    d.reward_scale_ = r.get_f64();
    d.init_enc_.load(r);
    d.step_enc_.load(r);
    d.head_.load(r);
    d.init_opt_.load(r);
    d.step_opt_.load(r);
    d.head_opt_.load(r);
    return d;
}

}  // namespace skillforge
