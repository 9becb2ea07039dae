#include "skillforge/generator.hpp"

#include <cmath>

namespace skillforge {

namespace {

constexpr std::uint32_t kGeneratorVersion = 1;
constexpr double kScoreStdFloor = 0.1;

// Head outputs are squashed through scaled tanh instead of hard clamps:
// saturation then slows a head down but never zeroes its gradient, so the
// entropy term can always reopen a collapsed distribution.
constexpr double kLogitBound = 5.0;
constexpr double kMeanBound = 3.0;

double bounded(double raw, double bound) {
    return bound * std::tanh(raw / bound);
}

/// d bounded / d raw expressed through the squashed value.
double bounded_grad(double value, double bound) {
    double t = value / bound;
    return 1.0 - t * t;
}

int head_output_dim(const TaskParamSpec& spec) {
    int n = 0;
    for (const auto& p : spec.params())
        n += (p.kind == ParamSpec::Kind::Discrete) ? p.cardinality : 2;
    return n;
}

/// Input shift that makes a zero raw output land on log_std = 0 (unit
/// sigma) when 0 lies inside the configured range.
double log_std_offset(double ls_mid, double ls_half) {
    double t = -ls_mid / ls_half;
    if (t <= -1.0 || t >= 1.0) return 0.0;
    return ls_half * std::atanh(t);
}

}  // namespace

TaskGenerator::TaskGenerator(TaskParamSpec spec, int num_skills, GeneratorConfig config,
                             std::uint64_t seed)
    : spec_(std::move(spec)), num_skills_(num_skills), config_(config) {
    if (num_skills_ < 1) throw std::invalid_argument("generator: num_skills must be >= 1");
    head_dim_ = head_output_dim(spec_);
    if (!(config_.log_std_min < config_.log_std_max))
        throw std::invalid_argument("generator: log_std_min must be < log_std_max");
    Rng rng(derive_seed(seed, "generator.init"));
    net_ = nn::Mlp(num_skills_, {config_.hidden, config_.hidden}, head_dim_, rng);
    // Start every skill near the same wide distribution.
    net_.layers().back().w *= 0.1;
    opt_ = nn::Adam(net_.param_count(), config_.lr, config_.adam_beta1, config_.adam_beta2);
    baseline_.assign(static_cast<std::size_t>(num_skills_), 0.0);
    score_var_.assign(static_cast<std::size_t>(num_skills_), 1.0);
}

FactorizedDistribution TaskGenerator::heads_from_output(const Vector& out) const {
    FactorizedDistribution dist;
    dist.heads.reserve(static_cast<std::size_t>(spec_.size()));
    const double ls_mid = 0.5 * (config_.log_std_min + config_.log_std_max);
    const double ls_half = 0.5 * (config_.log_std_max - config_.log_std_min);
    const double ls_shift = log_std_offset(ls_mid, ls_half);
    int k = 0;
    for (const auto& p : spec_.params()) {
        if (p.kind == ParamSpec::Kind::Discrete) {
            Vector logits(p.cardinality);
            for (int c = 0; c < p.cardinality; ++c) logits[c] = bounded(out[k + c], kLogitBound);
            dist.heads.emplace_back(DiscreteHead{std::move(logits)});
            k += p.cardinality;
        } else {
            double mean = bounded(out[k], kMeanBound);
            double log_std = ls_mid + ls_half * std::tanh((out[k + 1] + ls_shift) / ls_half);
            dist.heads.emplace_back(ContinuousHead{mean, log_std});
            k += 2;
        }
    }
    return dist;
}

FactorizedDistribution TaskGenerator::distribution_for(int z) const {
    if (z < 0 || z >= num_skills_)
        throw std::invalid_argument("generator: skill index " + std::to_string(z) +
                                    " outside [0, " + std::to_string(num_skills_) + ")");
    Vector onehot = Vector::Zero(num_skills_);
    onehot[z] = 1.0;
    return heads_from_output(net_.apply(onehot));
}

double TaskGenerator::mean_entropy_over_skills() const {
    Matrix eye = Matrix::Identity(num_skills_, num_skills_);
    Matrix out = net_.apply(eye);
    double total = 0.0;
    for (int z = 0; z < num_skills_; ++z) total += entropy(spec_, heads_from_output(out.col(z)));
    return total / num_skills_;
}

GeneratorUpdateReport TaskGenerator::accumulate_ascent_gradient(
    const std::vector<GeneratorUpdateItem>& batch, double alpha) {
    if (batch.empty()) throw std::invalid_argument("generator: empty update batch");
    if (alpha < 0.0) throw std::invalid_argument("generator: alpha must be >= 0");
    for (const auto& it : batch) {
        if (it.skill < 0 || it.skill >= num_skills_)
            throw std::invalid_argument("generator: batch contains unknown skill index " +
                                        std::to_string(it.skill));
        validate_params(spec_, it.params);
    }

    const auto batch_size = static_cast<int>(batch.size());
    const double inv_b = 1.0 / batch_size;
    const double inv_k = 1.0 / num_skills_;

    // One forward over the batch one-hots plus all K identity columns for the
    // entropy term.
    Matrix input = Matrix::Zero(num_skills_, batch_size + num_skills_);
    for (int i = 0; i < batch_size; ++i) input(batch[static_cast<std::size_t>(i)].skill, i) = 1.0;
    input.block(0, batch_size, num_skills_, num_skills_).setIdentity();
    Matrix out = net_.forward(input);

    // Ascent gradient dJ/d(out); Adam minimizes, so we negate at the end.
    Matrix dout = Matrix::Zero(head_dim_, batch_size + num_skills_);

    GeneratorUpdateReport report;
    for (const auto& it : batch) {
        report.mean_log_q += it.log_q * inv_b;
        report.mean_return += it.discounted_return * inv_b;
    }

    const double ls_mid = 0.5 * (config_.log_std_min + config_.log_std_max);
    const double ls_half = 0.5 * (config_.log_std_max - config_.log_std_min);

    // Score-function term.
    for (int i = 0; i < batch_size; ++i) {
        const auto& it = batch[static_cast<std::size_t>(i)];
        double raw = it.log_q + it.discounted_return;
        double sd = std::sqrt(std::max(score_var_[static_cast<std::size_t>(it.skill)], 0.0));
        double centered = (raw - baseline_[static_cast<std::size_t>(it.skill)]) /
                          std::max(sd, kScoreStdFloor);
        FactorizedDistribution dist = heads_from_output(out.col(i));
        int k = 0;
        for (int d = 0; d < spec_.size(); ++d) {
            const auto& p = spec_.at(d);
            if (p.kind == ParamSpec::Kind::Discrete) {
                const Vector& logits = std::get<DiscreteHead>(dist.heads[d]).logits;
                Vector probs = (logits.array() - logits.maxCoeff()).exp();
                probs /= probs.sum();
                int chosen = it.params.discrete_at(d);
                for (int c = 0; c < p.cardinality; ++c)
                    dout(k + c, i) += centered * inv_b * ((c == chosen ? 1.0 : 0.0) - probs[c]) *
                                      bounded_grad(logits[c], kLogitBound);
                k += p.cardinality;
            } else {
                const auto& head = std::get<ContinuousHead>(dist.heads[d]);
                double sigma = std::exp(head.log_std);
                double u = unsquash(it.params.at(d), p.lower, p.upper);
                double zscore = (u - head.mean) / sigma;
                double ls_t = (head.log_std - ls_mid) / ls_half;
                dout(k, i) += centered * inv_b * zscore / sigma *
                              bounded_grad(head.mean, kMeanBound);
                dout(k + 1, i) +=
                    centered * inv_b * (zscore * zscore - 1.0) * (1.0 - ls_t * ls_t);
                k += 2;
            }
        }
    }

    // Entropy term over all K skills.
    double entropy_sum = 0.0;
    for (int z = 0; z < num_skills_; ++z) {
        int col = batch_size + z;
        FactorizedDistribution dist = heads_from_output(out.col(col));
        int k = 0;
        for (int d = 0; d < spec_.size(); ++d) {
            const auto& p = spec_.at(d);
            if (p.kind == ParamSpec::Kind::Discrete) {
                const Vector& logits = std::get<DiscreteHead>(dist.heads[d]).logits;
                Vector probs = (logits.array() - logits.maxCoeff()).exp();
                probs /= probs.sum();
                double h = 0.0;
                for (int c = 0; c < p.cardinality; ++c)
                    if (probs[c] > 0) h -= probs[c] * std::log(probs[c]);
                entropy_sum += h;
                for (int c = 0; c < p.cardinality; ++c)
                    if (probs[c] > 0)
                        dout(k + c, col) += alpha * inv_k * (-probs[c] * (std::log(probs[c]) + h)) *
                                            bounded_grad(logits[c], kLogitBound);
                k += p.cardinality;
            } else {
                const auto& head = std::get<ContinuousHead>(dist.heads[d]);
                double ls_t = (head.log_std - ls_mid) / ls_half;
                entropy_sum += 0.5 * std::log(2.0 * M_PI * std::exp(1.0)) + head.log_std;
                dout(k + 1, col) += alpha * inv_k * (1.0 - ls_t * ls_t);
                k += 2;
            }
        }
    }
    report.mean_entropy = entropy_sum * inv_k;

    net_.zero_grad();
    net_.backward(dout);
    return report;
}

Vector TaskGenerator::update_gradient(const std::vector<GeneratorUpdateItem>& batch, double alpha) {
    accumulate_ascent_gradient(batch, alpha);
    Vector g = net_.flat_grads();
    net_.zero_grad();
    return g;
}

GeneratorUpdateReport TaskGenerator::update(const std::vector<GeneratorUpdateItem>& batch,
                                            double alpha) {
    GeneratorUpdateReport report = accumulate_ascent_gradient(batch, alpha);
    if (!nn::all_grads_finite(net_)) {
        net_.zero_grad();
        report.applied = false;
        report.note = "non-finite gradient; step skipped";
        return report;
    }
    // Adam minimizes: descend on -J.
    net_.for_each_param([](double&, double& g) { g = -g; });
    opt_.step(net_);
    net_.zero_grad();
    report.applied = true;

    // Running per-skill baseline and scale, updated with pre-step scores.
    for (const auto& it : batch) {
        auto zi = static_cast<std::size_t>(it.skill);
        double raw = it.log_q + it.discounted_return;
        double dev = raw - baseline_[zi];
        baseline_[zi] = config_.baseline_decay * baseline_[zi] + (1.0 - config_.baseline_decay) * raw;
        score_var_[zi] =
            config_.baseline_decay * score_var_[zi] + (1.0 - config_.baseline_decay) * dev * dev;
    }
    return report;
}

void TaskGenerator::save(const std::filesystem::path& path) const {
    BlobWriter w(path, "SFGEN", kGeneratorVersion);
    w.put_u64(spec_.fingerprint());
    w.put_string(spec_.serialize());
    w.put_i64(num_skills_);
    w.put_f64(config_.lr);
    w.put_f64(config_.adam_beta1);
    w.put_f64(config_.adam_beta2);
    w.put_f64(config_.baseline_decay);
    w.put_f64(config_.log_std_min);
    w.put_f64(config_.log_std_max);
    w.put_i64(config_.hidden);
    net_.save(w);
    opt_.save(w);
    w.put_u64(baseline_.size());
    w.put_doubles(baseline_.data(), baseline_.size());
    w.put_doubles(score_var_.data(), score_var_.size());
    w.finish();
}

TaskGenerator TaskGenerator::load(const std::filesystem::path& path,
                                  const TaskParamSpec& expected_spec) {
    BlobReader r(path, "SFGEN", kGeneratorVersion);
    std::uint64_t fp = r.get_u64();
    if (fp != expected_spec.fingerprint())
        throw ConfigError("generator checkpoint task-space fingerprint mismatch: " + path.string());
    TaskGenerator g;
    g.spec_ = TaskParamSpec::deserialize(r.get_string());
    g.num_skills_ = static_cast<int>(r.get_i64());
    g.config_.lr = r.get_f64();
    g.config_.adam_beta1 = r.get_f64();
    g.config_.adam_beta2 = r.get_f64();
    g.config_.baseline_decay = r.get_f64();
    g.config_.log_std_min = r.get_f64();
    g.config_.log_std_max = r.get_f64();
    g.config_.hidden = static_cast<int>(r.get_i64());
    g.head_dim_ = head_output_dim(g.spec_);
    g.net_.load(r);
    g.opt_.load(r);
    auto n = r.get_u64();
    g.baseline_.resize(n);
    r.get_doubles(g.baseline_.data(), n);
    g.score_var_.resize(n);
    r.get_doubles(g.score_var_.data(), n);
    return g;
}

}  // namespace skillforge
