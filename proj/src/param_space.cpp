#include "skillforge/param_space.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace skillforge {

namespace {

constexpr double kLogTwoPiE = 2.8378770664093453;  // log(2*pi*e)
constexpr double kAtanhClamp = 1.0 - 1e-12;

double categorical_log_softmax(const Vector& logits, int index) {
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return logits[index] - lse;
}

}  // namespace

ParamSpec ParamSpec::discrete(std::string name, int cardinality) {
    if (cardinality < 2)
        throw std::invalid_argument("param '" + name + "': discrete cardinality must be >= 2");
    ParamSpec p;
    p.name = std::move(name);
    p.kind = Kind::Discrete;
    p.cardinality = cardinality;
    return p;
}

ParamSpec ParamSpec::continuous(std::string name, double lower, double upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper))
        throw std::invalid_argument("param '" + name + "': bounds must be finite with lower < upper");
    ParamSpec p;
    p.name = std::move(name);
    p.kind = Kind::Continuous;
    p.lower = lower;
    p.upper = upper;
    return p;
}

TaskParamSpec::TaskParamSpec(std::vector<ParamSpec> params) : params_(std::move(params)) {
    std::set<std::string> names;
    for (const auto& p : params_) {
        if (!names.insert(p.name).second)
            throw std::invalid_argument("duplicate parameter name '" + p.name + "'");
    }
}

int TaskParamSpec::discrete_count() const {
    int n = 0;
    for (const auto& p : params_) n += (p.kind == ParamSpec::Kind::Discrete);
    return n;
}

int TaskParamSpec::continuous_count() const {
    return size() - discrete_count();
}

std::string TaskParamSpec::serialize() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : params_) {
        if (p.kind == ParamSpec::Kind::Discrete)
            os << p.name << " discrete " << p.cardinality << "\n";
        else
            os << p.name << " continuous " << p.lower << " " << p.upper << "\n";
    }
    return os.str();
}

TaskParamSpec TaskParamSpec::deserialize(const std::string& text) {
    std::vector<ParamSpec> params;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name, kind;
        ls >> name >> kind;
        if (kind == "discrete") {
            int card = 0;
            ls >> card;
            if (!ls) throw std::invalid_argument("bad task-space line: " + line);
            params.push_back(ParamSpec::discrete(name, card));
        } else if (kind == "continuous") {
            double lo = 0, hi = 0;
            ls >> lo >> hi;
            if (!ls) throw std::invalid_argument("bad task-space line: " + line);
            params.push_back(ParamSpec::continuous(name, lo, hi));
        } else {
            throw std::invalid_argument("unknown parameter kind '" + kind + "' in line: " + line);
        }
    }
    return TaskParamSpec(std::move(params));
}

std::uint64_t TaskParamSpec::fingerprint() const {
    return fnv1a64(serialize());
}

bool TaskParamSpec::operator==(const TaskParamSpec& other) const {
    return serialize() == other.serialize();
}

void validate_params(const TaskParamSpec& spec, const TaskParams& w) {
    if (static_cast<int>(w.values.size()) != spec.size())
        throw std::invalid_argument("task params: expected " + std::to_string(spec.size()) +
                                    " values, got " + std::to_string(w.values.size()));
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        double v = w.values[static_cast<std::size_t>(i)];
        if (p.kind == ParamSpec::Kind::Discrete) {
            double r = std::round(v);
            if (r != v || r < 0 || r >= p.cardinality)
                throw std::invalid_argument("param '" + p.name + "': index " + std::to_string(v) +
                                            " out of range [0, " + std::to_string(p.cardinality) + ")");
        } else {
            if (!std::isfinite(v) || v < p.lower || v > p.upper)
                throw std::invalid_argument("param '" + p.name + "': value " + std::to_string(v) +
                                            " outside [" + std::to_string(p.lower) + ", " +
                                            std::to_string(p.upper) + "]");
        }
    }
}

void validate_distribution(const TaskParamSpec& spec, const FactorizedDistribution& dist) {
    if (dist.size() != spec.size())
        throw std::invalid_argument("distribution: expected " + std::to_string(spec.size()) +
                                    " heads, got " + std::to_string(dist.size()));
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        const auto& h = dist.heads[static_cast<std::size_t>(i)];
        if (p.kind == ParamSpec::Kind::Discrete) {
            const auto* d = std::get_if<DiscreteHead>(&h);
            if (!d)
                throw std::invalid_argument("param '" + p.name + "': expected a discrete head");
            if (d->logits.size() != p.cardinality)
                throw std::invalid_argument("param '" + p.name + "': expected " +
                                            std::to_string(p.cardinality) + " logits, got " +
                                            std::to_string(d->logits.size()));
            if (!d->logits.allFinite())
                throw std::invalid_argument("param '" + p.name + "': non-finite logits");
        } else {
            const auto* c = std::get_if<ContinuousHead>(&h);
            if (!c)
                throw std::invalid_argument("param '" + p.name + "': expected a continuous head");
            if (!std::isfinite(c->mean) || !std::isfinite(c->log_std))
                throw std::invalid_argument("param '" + p.name + "': non-finite head");
        }
    }
}

double squash(double u, double lower, double upper) {
    return lower + (std::tanh(u) + 1.0) * 0.5 * (upper - lower);
}

double unsquash(double v, double lower, double upper) {
    double t = 2.0 * (v - lower) / (upper - lower) - 1.0;
    t = std::clamp(t, -kAtanhClamp, kAtanhClamp);
    return std::atanh(t);
}

TaskParams sample(const TaskParamSpec& spec, const FactorizedDistribution& dist, Rng& rng) {
    validate_distribution(spec, dist);
    TaskParams w;
    w.values.reserve(static_cast<std::size_t>(spec.size()));
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        const auto& h = dist.heads[static_cast<std::size_t>(i)];
        if (p.kind == ParamSpec::Kind::Discrete) {
            const auto& d = std::get<DiscreteHead>(h);
            Vector probs = (d.logits.array() - d.logits.maxCoeff()).exp();
            probs /= probs.sum();
            double r = rng.uniform();
            int idx = p.cardinality - 1;
            double acc = 0.0;
            for (int k = 0; k < p.cardinality; ++k) {
                acc += probs[k];
                if (r < acc) {
                    idx = k;
                    break;
                }
            }
            w.values.push_back(static_cast<double>(idx));
        } else {
            const auto& c = std::get<ContinuousHead>(h);
            double u = rng.normal(c.mean, std::exp(c.log_std));
            w.values.push_back(squash(u, p.lower, p.upper));
        }
    }
    return w;
}

double log_prob(const TaskParamSpec& spec, const FactorizedDistribution& dist, const TaskParams& w) {
    validate_distribution(spec, dist);
    validate_params(spec, w);
    double lp = 0.0;
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        const auto& h = dist.heads[static_cast<std::size_t>(i)];
        if (p.kind == ParamSpec::Kind::Discrete) {
            lp += categorical_log_softmax(std::get<DiscreteHead>(h).logits, w.discrete_at(i));
        } else {
            const auto& c = std::get<ContinuousHead>(h);
            double u = unsquash(w.at(i), p.lower, p.upper);
            double sigma = std::exp(c.log_std);
            double z = (u - c.mean) / sigma;
            double log_gauss = -0.5 * z * z - c.log_std - 0.5 * std::log(2.0 * M_PI);
            // dv/du = (1 - tanh(u)^2)/2 * (upper - lower)
            double th = std::tanh(u);
            double log_jac = std::log((1.0 - th * th) * 0.5 * (p.upper - p.lower));
            lp += log_gauss - log_jac;
        }
    }
    return lp;
}

double entropy(const TaskParamSpec& spec, const FactorizedDistribution& dist) {
    validate_distribution(spec, dist);
    double h_total = 0.0;
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        const auto& h = dist.heads[static_cast<std::size_t>(i)];
        if (p.kind == ParamSpec::Kind::Discrete) {
            const auto& logits = std::get<DiscreteHead>(h).logits;
            double mx = logits.maxCoeff();
            Vector e = (logits.array() - mx).exp();
            double sum = e.sum();
            Vector probs = e / sum;
            double ent = 0.0;
            for (int k = 0; k < p.cardinality; ++k)
                if (probs[k] > 0) ent -= probs[k] * std::log(probs[k]);
            h_total += ent;
        } else {
            h_total += 0.5 * kLogTwoPiE + std::get<ContinuousHead>(h).log_std;
        }
    }
    return h_total;
}

FactorizedDistribution uniform_distribution(const TaskParamSpec& spec) {
    FactorizedDistribution dist;
    dist.heads.reserve(static_cast<std::size_t>(spec.size()));
    for (int i = 0; i < spec.size(); ++i) {
        const auto& p = spec.at(i);
        if (p.kind == ParamSpec::Kind::Discrete)
            dist.heads.emplace_back(DiscreteHead{Vector::Zero(p.cardinality)});
        else
            dist.heads.emplace_back(ContinuousHead{0.0, std::log(kSquashUniformStd)});
    }
    return dist;
}

}  // namespace skillforge
