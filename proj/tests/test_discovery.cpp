#include <doctest.h>

#include <cmath>
#include <fstream>

#include "skillforge/discovery.hpp"
#include "support/test_stats.hpp"
#include "support/toy_world.hpp"

using namespace skillforge;
using test_support::ToyWorldEnv;

TEST_SUITE_BEGIN("discovery");

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("sf_disc_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

DiscoveryConfig toy_config(int k, long iterations) {
    DiscoveryConfig c;
    c.iterations = iterations;
    c.num_skills = k;
    c.seed = 12345;
    c.eval_every = 500;
    c.eval_episodes = 64;
    c.checkpoint_every = 1000000;
    c.sac.batch_size = 32;
    c.sac.lr = 1e-3;
    c.sac_warmup_steps = 200;
    c.gen.lr = 3e-4;
    c.gen_batch = 64;
    c.gen_min_batch = 8;
    c.disc.lr = 3e-3;
    c.disc_batch = 32;
    c.traj_replay_capacity = 512;
    c.target_entropy = 0.05;
    c.alpha_init = 1.0;
    c.alpha_lr = 1e-2;
    return c;
}

}  // namespace

TEST_CASE("update_alpha follows the dual gradient") {
    DiversityState state;
    state.log_alpha = 0.0;
    state.target_entropy = 3.0;
    state.alpha_lr = 0.1;

    SUBCASE("entropy at target leaves alpha unchanged") {
        double a = update_alpha(state, 3.0);
        CHECK(a == doctest::Approx(1.0));
        CHECK(state.log_alpha == 0.0);
    }
    SUBCASE("entropy below target raises alpha, above lowers it") {
        double up = update_alpha(state, 2.0);
        CHECK(up > 1.0);
        state.log_alpha = 0.0;
        double down = update_alpha(state, 4.0);
        CHECK(down < 1.0);
    }
    SUBCASE("log alpha is clamped") {
        state.log_alpha = -9.99;
        update_alpha(state, 100.0);
        CHECK(state.log_alpha == -10.0);
        CHECK(state.alpha() > 0.0);
        state.log_alpha = 4.99;
        update_alpha(state, -100.0);
        CHECK(state.log_alpha == 5.0);
    }
}

TEST_CASE("compute_objective assembles the three terms") {
    auto spec = TaskParamSpec({ParamSpec::discrete("mode", 2)});
    TaskGenerator gen(spec, 2, GeneratorConfig{}, 1);
    TrajectoryDiscriminator disc(3, 1, 2, DiscriminatorConfig{}, 2);

    // Two short synthetic trajectories with constant rewards.
    std::vector<EncodedTrajectory> trajs;
    for (int z = 0; z < 2; ++z) {
        EncodedTrajectory t;
        t.skill = z;
        t.params = TaskParams{{static_cast<double>(z)}};
        t.initial_obs = Vector::Zero(3);
        Vector obs = t.initial_obs;
        for (int s = 0; s < 20; ++s) {
            t.steps.push_back({obs, Vector::Zero(1), 0.01, obs});
        }
        trajs.push_back(std::move(t));
    }
    std::vector<const EncodedTrajectory*> batch{&trajs[0], &trajs[1]};

    SUBCASE("gamma = 1 turns the return term into plain arithmetic") {
        auto b = compute_objective(batch, disc, gen, 0.0, 1.0);
        CHECK(b.mean_return == doctest::Approx(0.2).epsilon(1e-12));
        // alpha = 0 removes the entropy term entirely.
        CHECK(b.total == doctest::Approx(b.mean_log_q + b.mean_return));
    }
    SUBCASE("zero rewards and a uniform posterior give -log K + alpha H") {
        for (auto& t : trajs)
            for (auto& s : t.steps) s.reward = 0.0;
        // Collapse the discriminator head so the posterior is exactly uniform.
        disc.head().layers().back().w.setZero();
        disc.head().layers().back().b.setZero();
        auto b = compute_objective(batch, disc, gen, 0.7, 0.99);
        double expected = -std::log(2.0) + 0.7 * b.mean_entropy;
        CHECK(b.mean_return == 0.0);
        CHECK(b.mean_log_q == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
        CHECK(b.total == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("empty batch is rejected") {
        std::vector<const EncodedTrajectory*> empty;
        CHECK_THROWS_AS(compute_objective(empty, disc, gen, 0.5, 0.99), std::invalid_argument);
    }
}

TEST_CASE("one iteration trace follows the algorithm order") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 1);
    cfg.sac.batch_size = 1;
    cfg.sac_warmup_steps = 0;
    cfg.gen_min_batch = 1;
    cfg.gen_batch = 8;
    cfg.disc_batch = 1;
    cfg.eval_every = 10;

    std::vector<std::string> events;
    auto dir = fresh_dir("trace");
    run_discovery(env, cfg, dir, false,
                  [&](std::string_view e) { events.emplace_back(e); });

    std::vector<std::string> expected{
        "sample_skill", "sample_task",   "instantiate",
        "act",          "env_step",      "policy_update",
        "act",          "env_step",      "policy_update",
        "compute_posterior", "discriminator_update", "generator_update", "alpha_update"};
    CHECK(events == expected);
    std::filesystem::remove_all(dir);
}

TEST_CASE("single skill: the mutual-information bound is exactly zero") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(1, 50);
    cfg.eval_every = 25;
    auto dir = fresh_dir("k1");
    auto artifacts = run_discovery(env, cfg, dir);
    CHECK(artifacts.final_mi_bound == 0.0);
    CHECK(artifacts.final_disc_accuracy == 1.0);

    auto metrics = MetricsTable::read(dir / "metrics.csv");
    for (double v : metrics.numeric_column("mi_lower_bound")) CHECK(v == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("frozen generator with disabled temperature keeps entropy constant") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 600);
    cfg.train_generator = false;
    cfg.alpha_updates = false;
    cfg.eval_every = 200;
    auto dir = fresh_dir("frozen");
    run_discovery(env, cfg, dir);
    auto metrics = MetricsTable::read(dir / "metrics.csv");
    auto entropies = metrics.numeric_column("mean_entropy");
    REQUIRE(entropies.size() >= 2);
    for (double h : entropies) CHECK(std::abs(h - entropies.front()) < 0.05);
    auto alphas = metrics.numeric_column("alpha");
    for (double a : alphas) CHECK(a == doctest::Approx(cfg.alpha_init));
    std::filesystem::remove_all(dir);
}

TEST_CASE("toy world: two skills separate and the MI bound approaches log 2") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 3000);
    auto dir = fresh_dir("separate");
    auto artifacts = run_discovery(env, cfg, dir);

    CHECK(artifacts.final_disc_accuracy > 0.9);
    CHECK(artifacts.final_mi_bound > 0.5);

    // Logged MI bound never exceeds log K and never drops meaningfully
    // below zero.
    auto metrics = MetricsTable::read(dir / "metrics.csv");
    for (double v : metrics.numeric_column("mi_lower_bound")) {
        CHECK(v <= std::log(2.0) + 1e-9);
        CHECK(v >= -0.02);
    }
    // Checkpoint artifacts exist for every trained module.
    CHECK(std::filesystem::exists(dir / "checkpoint" / "generator.bin"));
    CHECK(std::filesystem::exists(dir / "checkpoint" / "discriminator.bin"));
    CHECK(std::filesystem::exists(dir / "checkpoint" / "skills.bin"));
    CHECK(std::filesystem::exists(dir / "confusion.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("stop-and-resume reproduces the uninterrupted metrics byte-for-byte") {
    ToyWorldEnv env(2, 2);
    auto straight_dir = fresh_dir("straight");
    auto split_dir = fresh_dir("split");

    auto cfg = toy_config(2, 200);
    cfg.eval_every = 50;
    cfg.checkpoint_every = 50;
    run_discovery(env, cfg, straight_dir);

    auto cfg_half = cfg;
    cfg_half.iterations = 100;
    run_discovery(env, cfg_half, split_dir);
    run_discovery(env, cfg, split_dir, /*resume=*/true);

    CHECK(slurp(straight_dir / "metrics.csv") == slurp(split_dir / "metrics.csv"));
    CHECK(slurp(straight_dir / "checkpoint" / "skills.bin") ==
          slurp(split_dir / "checkpoint" / "skills.bin"));
    CHECK(slurp(straight_dir / "checkpoint" / "generator.bin") ==
          slurp(split_dir / "checkpoint" / "generator.bin"));

    // Resuming under a different dynamics configuration is refused.
    auto cfg_bad = cfg;
    cfg_bad.target_entropy = 1.0;
    CHECK_THROWS_AS(run_discovery(env, cfg_bad, split_dir, true), ConfigError);
    std::filesystem::remove_all(straight_dir);
    std::filesystem::remove_all(split_dir);
}

TEST_CASE("rerunning with the same seed yields identical metrics") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 150);
    cfg.eval_every = 50;
    auto dir_a = fresh_dir("rerun_a");
    auto dir_b = fresh_dir("rerun_b");
    run_discovery(env, cfg, dir_a);
    run_discovery(env, cfg, dir_b);
    CHECK(slurp(dir_a / "metrics.csv") == slurp(dir_b / "metrics.csv"));

    auto cfg2 = cfg;
    cfg2.seed = 999;
    auto dir_c = fresh_dir("rerun_c");
    run_discovery(env, cfg2, dir_c);
    CHECK(slurp(dir_a / "metrics.csv") != slurp(dir_c / "metrics.csv"));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    std::filesystem::remove_all(dir_c);
}

TEST_CASE("parallel evaluation workers do not change the metrics") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 120);
    cfg.eval_every = 40;
    auto dir_a = fresh_dir("workers1");
    auto dir_b = fresh_dir("workers4");
    run_discovery(env, cfg, dir_a);
    cfg.workers = 4;
    run_discovery(env, cfg, dir_b);
    CHECK(slurp(dir_a / "metrics.csv") == slurp(dir_b / "metrics.csv"));
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("early stop triggers on the accuracy target at an eval boundary") {
    ToyWorldEnv env(2, 2);
    auto cfg = toy_config(2, 5000);
    cfg.early_stop = true;
    cfg.early_stop_accuracy_target = 0.9;
    cfg.eval_every = 250;
    auto dir = fresh_dir("early");
    auto artifacts = run_discovery(env, cfg, dir);
    CHECK(artifacts.early_stopped);
    CHECK(artifacts.iterations_run < 5000);
    CHECK(artifacts.iterations_run % 250 == 0);
    CHECK(artifacts.final_disc_accuracy >= 0.9);
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
