#include <doctest.h>

#include <cmath>

#include "skillforge/param_space.hpp"
#include "support/test_stats.hpp"

using namespace skillforge;

TEST_SUITE_BEGIN("param_space");

namespace {

TaskParamSpec one_discrete(int card) {
    return TaskParamSpec({ParamSpec::discrete("d", card)});
}

TaskParamSpec one_continuous(double lo, double hi) {
    return TaskParamSpec({ParamSpec::continuous("c", lo, hi)});
}

}  // namespace

TEST_CASE("spec invariants") {
    CHECK_THROWS_AS(ParamSpec::discrete("d", 1), std::invalid_argument);
    CHECK_THROWS_AS(ParamSpec::continuous("c", 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamSpec::continuous("c", 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TaskParamSpec({ParamSpec::discrete("x", 2), ParamSpec::discrete("x", 3)}),
                    std::invalid_argument);
}

TEST_CASE("spec serialization round trip and fingerprint") {
    TaskParamSpec spec({ParamSpec::discrete("cat", 3), ParamSpec::continuous("pos", -1.5, 2.25)});
    auto restored = TaskParamSpec::deserialize(spec.serialize());
    CHECK(restored == spec);
    CHECK(restored.fingerprint() == spec.fingerprint());
    CHECK(one_discrete(3).fingerprint() != one_discrete(4).fingerprint());
}

TEST_CASE("uniform categorical sampling passes a chi-square test") {
    auto spec = one_discrete(3);
    auto dist = uniform_distribution(spec);
    Rng rng(101);
    const int n = 10000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) ++counts[sample(spec, dist, rng).discrete_at(0)];
    double expected = n / 3.0;
    double stat = 0.0;
    for (int c : counts) stat += (c - expected) * (c - expected) / expected;
    CHECK(stat < test_support::chi2_critical(2, 2.326));  // p > 0.01
}

TEST_CASE("degenerate std collapses a continuous sample to the squashed mean") {
    auto spec = one_continuous(0.0, 1.0);
    FactorizedDistribution dist;
    dist.heads.emplace_back(ContinuousHead{0.0, -20.0});
    Rng rng(102);
    for (int i = 0; i < 100; ++i) {
        double v = sample(spec, dist, rng).at(0);
        CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
    }
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    auto spec = TaskParamSpec(
        {ParamSpec::discrete("d", 4), ParamSpec::continuous("c", -2.0, 3.0)});
    FactorizedDistribution dist;
    dist.heads.emplace_back(DiscreteHead{Vector::LinSpaced(4, -0.5, 1.0)});
    dist.heads.emplace_back(ContinuousHead{0.3, -0.2});
    Rng a(103), b(103);
    for (int i = 0; i < 50; ++i) {
        auto wa = sample(spec, dist, a);
        auto wb = sample(spec, dist, b);
        CHECK(wa.values == wb.values);
    }
}

TEST_CASE("log_prob of a uniform categorical is -log K") {
    auto spec = one_discrete(3);
    auto dist = uniform_distribution(spec);
    TaskParams w{{1.0}};
    CHECK(log_prob(spec, dist, w) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("log_prob factorizes over dimensions") {
    TaskParamSpec joint(
        {ParamSpec::discrete("d", 3), ParamSpec::continuous("c", 0.0, 2.0)});
    FactorizedDistribution dist;
    dist.heads.emplace_back(DiscreteHead{Vector::LinSpaced(3, -0.3, 0.8)});
    dist.heads.emplace_back(ContinuousHead{-0.1, -0.4});
    TaskParams w{{2.0, 0.7}};

    auto spec_d = one_discrete(3);
    FactorizedDistribution dist_d;
    dist_d.heads.push_back(dist.heads[0]);
    auto spec_c = TaskParamSpec({ParamSpec::continuous("c", 0.0, 2.0)});
    FactorizedDistribution dist_c;
    dist_c.heads.push_back(dist.heads[1]);

    double lhs = log_prob(joint, dist, w);
    double rhs = log_prob(spec_d, dist_d, TaskParams{{2.0}}) +
                 log_prob(spec_c, dist_c, TaskParams{{0.7}});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("continuous density integrates to one (quadrature oracle)") {
    auto spec = one_continuous(0.0, 1.0);
    FactorizedDistribution dist;
    dist.heads.emplace_back(ContinuousHead{0.3, -0.5});
    const int n = 40000;
    double integral = 0.0;
    double prev = 0.0;
    double h = 1.0 / n;
    for (int i = 1; i < n; ++i) {
        double v = i * h;
        double density = std::exp(log_prob(spec, dist, TaskParams{{v}}));
        integral += 0.5 * (prev + density) * h;
        prev = density;
    }
    integral += 0.5 * prev * h;  // closing trapezoid to the upper bound
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("analytic entropies") {
    CHECK(entropy(one_discrete(3), uniform_distribution(one_discrete(3))) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));

    auto spec = one_continuous(0.0, 1.0);
    FactorizedDistribution unit_gauss;
    unit_gauss.heads.emplace_back(ContinuousHead{0.0, 0.0});
    CHECK(entropy(spec, unit_gauss) ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI * std::exp(1.0))).epsilon(1e-12));
}

TEST_CASE("entropy matches the Monte Carlo oracle") {
    // Pre-squash: entropy == -E[log density] estimated from samples.
    Rng rng(104);
    const int n = 100000;

    SUBCASE("continuous head") {
        double mean = 0.4, log_std = -0.3, sigma = std::exp(log_std);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double u = rng.normal(mean, sigma);
            double z = (u - mean) / sigma;
            acc -= -0.5 * z * z - log_std - 0.5 * std::log(2.0 * M_PI);
        }
        auto spec = one_continuous(-5.0, 5.0);
        FactorizedDistribution dist;
        dist.heads.emplace_back(ContinuousHead{mean, log_std});
        CHECK(entropy(spec, dist) == doctest::Approx(acc / n).epsilon(0.01));
    }

    SUBCASE("discrete head") {
        auto spec = one_discrete(4);
        FactorizedDistribution dist;
        dist.heads.emplace_back(DiscreteHead{Vector::LinSpaced(4, -1.0, 0.5)});
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            auto w = sample(spec, dist, rng);
            acc -= log_prob(spec, dist, w);
        }
        CHECK(entropy(spec, dist) == doctest::Approx(acc / n).epsilon(0.01));
    }
}

TEST_CASE("uniform distribution: discrete head") {
    auto spec = one_discrete(4);
    auto dist = uniform_distribution(spec);
    CHECK(std::get<DiscreteHead>(dist.heads[0]).logits == Vector::Zero(4));
    CHECK(entropy(spec, dist) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("uniform distribution: squashed marginal is near-uniform (KS oracle)") {
    auto spec = one_continuous(0.0, 1.0);
    auto dist = uniform_distribution(spec);
    Rng rng(105);
    std::vector<double> samples;
    for (int i = 0; i < 10000; ++i) samples.push_back(sample(spec, dist, rng).at(0));
    double d = test_support::ks_statistic(std::move(samples),
                                          [](double v) { return std::clamp(v, 0.0, 1.0); });
    CHECK(d < 0.05);
}

TEST_CASE("empty spec behaves as a vacuous distribution") {
    TaskParamSpec spec(std::vector<ParamSpec>{});
    auto dist = uniform_distribution(spec);
    CHECK(dist.size() == 0);
    CHECK(entropy(spec, dist) == 0.0);
    Rng rng(106);
    CHECK(sample(spec, dist, rng).values.empty());
}

TEST_CASE("property: per-dimension entropy bounds and sampled log_prob finite") {
    Rng rng(107);
    for (int trial = 0; trial < 200; ++trial) {
        int card = 2 + rng.uniform_int(5);
        double lo = rng.uniform(-3.0, 0.0), hi = lo + rng.uniform(0.5, 4.0);
        TaskParamSpec spec({ParamSpec::discrete("d", card), ParamSpec::continuous("c", lo, hi)});
        FactorizedDistribution dist;
        Vector logits(card);
        for (int i = 0; i < card; ++i) logits[i] = rng.uniform(-3.0, 3.0);
        dist.heads.emplace_back(DiscreteHead{logits});
        double log_std = rng.uniform(-5.0, 2.0);
        dist.heads.emplace_back(ContinuousHead{rng.uniform(-2.0, 2.0), log_std});

        auto spec_d = one_discrete(card);
        FactorizedDistribution dist_d;
        dist_d.heads.push_back(dist.heads[0]);
        double h_d = entropy(spec_d, dist_d);
        CHECK(h_d >= -1e-12);
        CHECK(h_d <= std::log(static_cast<double>(card)) + 1e-12);

        auto spec_c = TaskParamSpec({ParamSpec::continuous("c", lo, hi)});
        FactorizedDistribution dist_c;
        dist_c.heads.push_back(dist.heads[1]);
        CHECK(entropy(spec_c, dist_c) ==
              doctest::Approx(0.5 * std::log(2.0 * M_PI * std::exp(1.0)) + log_std));

        auto w = sample(spec, dist, rng);
        CHECK(std::isfinite(log_prob(spec, dist, w)));
    }
}

TEST_CASE("structural errors name the offending parameter") {
    TaskParamSpec spec({ParamSpec::discrete("first", 3), ParamSpec::continuous("second", 0.0, 1.0)});
    FactorizedDistribution dist;
    dist.heads.emplace_back(DiscreteHead{Vector::Zero(2)});  // wrong arity
    dist.heads.emplace_back(ContinuousHead{0.0, 0.0});
    Rng rng(108);
    CHECK_THROWS_WITH_AS(sample(spec, dist, rng),
                         doctest::Contains("first"), std::invalid_argument);

    auto good = uniform_distribution(spec);
    CHECK_THROWS_WITH_AS(log_prob(spec, good, TaskParams{{0.0, 1.5}}),
                         doctest::Contains("second"), std::invalid_argument);
    CHECK_THROWS_AS(log_prob(spec, good, TaskParams{{0.0}}), std::invalid_argument);
}

TEST_SUITE_END();
