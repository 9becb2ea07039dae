#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "skillforge/baselines.hpp"
#include "skillforge/manifest.hpp"
#include "skillforge/svgplot.hpp"

namespace sf = skillforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::optional<std::string> env_var(const char* name) {
    const char* v = std::getenv(name);
    if (v && *v) return std::string(v);
    return std::nullopt;
}

// Precedence: explicit flag > environment variable > config default.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t flag_value,
                           std::uint64_t config_value) {
    if (opt->count() > 0) return flag_value;
    if (auto e = env_var("SKILLFORGE_SEED")) return std::stoull(*e);
    return config_value;
}

std::string resolve_out_dir(const CLI::Option* opt, const std::string& flag_value) {
    if (opt->count() > 0) return flag_value;
    if (auto e = env_var("SKILLFORGE_OUT_DIR")) return *e;
    throw sf::ConfigError("no output directory: pass --out or set SKILLFORGE_OUT_DIR");
}

sf::TaskParamSpec load_task_space(const std::filesystem::path& run_dir) {
    std::ifstream is(run_dir / "task_space.txt");
    if (!is) throw sf::ConfigError("not a run directory (no task_space.txt): " + run_dir.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return sf::TaskParamSpec::deserialize(buf.str());
}

int cmd_discover(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
                 const std::string& baseline, bool resume, int workers_flag, const std::string& name) {
    auto cfg = sf::KeyValueConfig::parse_file(config_path);
    std::string environment = cfg.get_string_or("run", "environment", "pushworld");
    if (environment != "pushworld")
        throw sf::ConfigError("run.environment: unknown environment '" + environment + "'");
    std::string run_name = name.empty() ? cfg.get_string_or("run", "name", "") : name;
    auto config = sf::DiscoveryConfig::from_config(cfg);
    cfg.ensure_all_consumed();
    config.seed = seed;
    if (workers_flag > 0) config.workers = workers_flag;

    sf::DiscoveryMode mode = sf::DiscoveryMode::Slide;
    std::string kind = "discover";
    if (!baseline.empty()) {
        auto b = sf::baseline_from_string(baseline);
        if (!b || *b == sf::BaselineKind::FlatSac)
            throw sf::ConfigError("--baseline for discover must be uniform_tasks or "
                                  "next_state_discriminator");
        mode = (*b == sf::BaselineKind::UniformTasks) ? sf::DiscoveryMode::UniformTasks
                                                      : sf::DiscoveryMode::DiaynState;
        kind = "discover-" + baseline;
    }

    sf::PushWorldEnv env;
    if (!resume) {
        sf::RunManifest manifest;
        manifest.name = run_name.empty() ? std::filesystem::path(out_dir).filename().string()
                                         : run_name;
        manifest.kind = kind;
        manifest.seed = config.seed;
        manifest.config_fingerprint = cfg.fingerprint();
        manifest.workers = config.workers;
        manifest.write(out_dir, cfg.raw_text());
    }
    auto artifacts = (mode == sf::DiscoveryMode::Slide)
                         ? sf::run_discovery(env, config, out_dir, resume)
                         : (mode == sf::DiscoveryMode::UniformTasks
                                ? sf::run_uniform_discovery(env, config, out_dir, resume)
                                : sf::run_diayn_style(env, config, out_dir, resume));
    sf::RunManifest::mark_completed(out_dir);
    std::cout << "discovery finished: " << artifacts.iterations_run << " iterations"
              << (artifacts.early_stopped ? " (early stop)" : "") << ", mi_lower_bound="
              << sf::format_metric(artifacts.final_mi_bound)
              << ", disc_accuracy=" << sf::format_metric(artifacts.final_disc_accuracy) << "\n";
    return kExitOk;
}

int cmd_transfer(const std::string& skills_dir, const std::string& config_path,
                 const std::string& out_dir, std::uint64_t seed, const std::string& baseline,
                 bool freeze_skills, bool eval_only, bool random_selection, const std::string& name) {
    auto cfg = sf::KeyValueConfig::parse_file(config_path);
    sf::PushWorldEnv env;
    auto config = sf::TransferConfig::from_config(cfg);
    auto target = sf::TransferConfig::target_from_config(cfg, env.param_spec());
    long expect_skills = cfg.get_long_or("transfer", "num_skills", -1);
    std::string run_name = name.empty() ? cfg.get_string_or("transfer", "name", "") : name;
    cfg.ensure_all_consumed();
    config.seed = seed;
    if (freeze_skills) config.finetune_skills = false;
    if (eval_only) config.steps = 0;
    if (random_selection) config.selection = sf::TransferConfig::Selection::UniformRandom;

    std::string kind = "transfer";
    bool flat_sac = false;
    if (!baseline.empty()) {
        auto b = sf::baseline_from_string(baseline);
        if (!b || *b != sf::BaselineKind::FlatSac)
            throw sf::ConfigError("--baseline for transfer must be flat_sac");
        flat_sac = true;
        kind = "flat-sac";
    }

    sf::RunManifest manifest;
    manifest.name = run_name.empty() ? std::filesystem::path(out_dir).filename().string() : run_name;
    manifest.kind = kind;
    manifest.seed = config.seed;
    manifest.config_fingerprint = cfg.fingerprint();
    manifest.write(out_dir, cfg.raw_text());

    sf::TransferArtifacts artifacts;
    if (flat_sac) {
        artifacts = sf::run_flat_sac(env, target, config, out_dir);
    } else {
        if (skills_dir.empty()) throw sf::ConfigError("transfer requires --skills <discovery dir>");
        auto spec = load_task_space(skills_dir);
        if (spec.fingerprint() != env.param_spec().fingerprint())
            throw sf::ConfigError("skills directory task-space fingerprint does not match this "
                                  "environment: " + skills_dir);
        auto ckpt = std::filesystem::path(skills_dir) / "checkpoint" / "skills.bin";
        if (!std::filesystem::exists(ckpt))
            throw sf::ConfigError("no skills checkpoint at " + ckpt.string());
        auto skills = sf::SkillPolicy::load(ckpt);
        if (expect_skills > 0 && skills.num_skills() != expect_skills)
            throw sf::ConfigError("checkpoint has " + std::to_string(skills.num_skills()) +
                                  " skills but transfer.num_skills = " +
                                  std::to_string(expect_skills));
        artifacts = sf::run_transfer(env, std::move(skills), target, config, out_dir);
    }
    sf::RunManifest::mark_completed(out_dir);
    std::cout << "transfer finished: " << artifacts.steps_run
              << " steps, eval_return_mean=" << sf::format_metric(artifacts.final_eval_return_mean)
              << "\n";
    return kExitOk;
}

int cmd_inspect_tasks(const std::string& skills_dir, long n_samples, const std::string& out_dir) {
    sf::PushWorldEnv env;
    auto spec = load_task_space(skills_dir);
    if (spec.fingerprint() != env.param_spec().fingerprint())
        throw sf::ConfigError("skills directory task-space fingerprint does not match pushworld");
    auto ckpt_dir = std::filesystem::path(skills_dir) / "checkpoint";
    auto skills = sf::SkillPolicy::load(ckpt_dir / "skills.bin");
    const int num_skills = skills.num_skills();

    std::optional<sf::TaskGenerator> generator;
    if (std::filesystem::exists(ckpt_dir / "generator.bin"))
        generator = sf::TaskGenerator::load(ckpt_dir / "generator.bin", spec);
    auto uniform = sf::uniform_distribution(spec);
    auto dist_for = [&](int z) { return generator ? generator->distribution_for(z) : uniform; };

    std::filesystem::create_directories(out_dir);
    std::ofstream report(std::filesystem::path(out_dir) / "report.txt", std::ios::trunc);
    report << "task sample report\n";
    report << "skills: " << num_skills << "\n";
    report << "sampler: " << (generator ? "learned generator" : "uniform") << "\n";
    report << "samples_per_skill: " << n_samples << "\n";
    report << "task space:\n" << spec.serialize();
    if (n_samples == 0) {
        report << "(no samples requested)\n";
        std::cout << "wrote header-only report to " << out_dir << "\n";
        return kExitOk;
    }

    const int kBins = 20;
    for (int z = 0; z < num_skills; ++z) {
        auto dist = dist_for(z);
        double h = sf::entropy(spec, dist);
        sf::Rng rng(sf::derive_seed(42, "inspect", static_cast<std::uint64_t>(z)));
        std::vector<sf::TaskParams> samples;
        samples.reserve(static_cast<std::size_t>(n_samples));
        for (long i = 0; i < n_samples; ++i) samples.push_back(sf::sample(spec, dist, rng));

        report << "\nskill " << z << " entropy " << sf::format_metric(h) << "\n";
        std::vector<sf::svg::HistogramPanel> panels;
        for (int d = 0; d < spec.size(); ++d) {
            const auto& p = spec.at(d);
            sf::svg::HistogramPanel panel;
            panel.title = p.name;
            double lo = p.kind == sf::ParamSpec::Kind::Discrete ? -0.5 : p.lower;
            double hi = p.kind == sf::ParamSpec::Kind::Discrete ? p.cardinality - 0.5 : p.upper;
            int bins = p.kind == sf::ParamSpec::Kind::Discrete ? p.cardinality : kBins;
            panel.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
            for (int i = 0; i <= bins; ++i)
                panel.bin_edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
            panel.counts.assign(static_cast<std::size_t>(bins), 0.0);
            for (const auto& w : samples) {
                double v = w.at(d);
                int b = std::min(bins - 1, std::max(0, static_cast<int>((v - lo) / (hi - lo) * bins)));
                panel.counts[static_cast<std::size_t>(b)] += 1.0;
            }
            panels.push_back(std::move(panel));
            report << "  " << p.name << ":";
            for (double c : panels.back().counts) report << " " << static_cast<long>(c);
            report << "\n";
        }
        sf::svg::write_histogram_grid(std::filesystem::path(out_dir) /
                                          ("tasks_skill_" + std::to_string(z) + ".svg"),
                                      "skill " + std::to_string(z) + " task parameters", panels, 5);

        // A few rollout traces on freshly sampled tasks.
        std::vector<sf::svg::UnitSquareScene> scenes;
        for (int e = 0; e < std::min<long>(4, n_samples); ++e) {
            auto w = samples[static_cast<std::size_t>(e)];
            auto inst = sf::pushworld::instantiate(
                w, sf::derive_seed(42, "inspect.ep", static_cast<std::uint64_t>(z * 1000 + e)));
            sf::Rng act_rng(sf::derive_seed(42, "inspect.act", static_cast<std::uint64_t>(z * 1000 + e)));
            sf::svg::UnitSquareScene scene;
            scene.title = "skill " + std::to_string(z) + " episode " + std::to_string(e);
            const char* goal_colors[3] = {"#d62728", "#2ca02c", "#1f77b4"};
            for (int c = 0; c < sf::pushworld::kNumCategories; ++c)
                scene.circles.push_back({inst.goals[static_cast<std::size_t>(c)].center.x(),
                                         inst.goals[static_cast<std::size_t>(c)].center.y(),
                                         inst.goals[static_cast<std::size_t>(c)].radius,
                                         goal_colors[c], false});
            sf::svg::UnitSquareScene::Path pusher_path{"pusher", {}};
            std::array<sf::svg::UnitSquareScene::Path, 3> obj_paths;
            auto state = inst.initial_state;
            auto record = [&]() {
                pusher_path.points.emplace_back(state.pusher.x(), state.pusher.y());
                for (int o = 0; o < sf::pushworld::kNumSlots; ++o)
                    obj_paths[static_cast<std::size_t>(o)].points.emplace_back(
                        state.objects[static_cast<std::size_t>(o)].position.x(),
                        state.objects[static_cast<std::size_t>(o)].position.y());
            };
            record();
            for (int t = 0; t < sf::pushworld::kHorizon; ++t) {
                auto action = skills.act(sf::pushworld::observe(state), z, true, act_rng);
                sf::pushworld::Action a;
                a.displacement = sf::Vec2(action[0], action[1]);
                auto res = sf::pushworld::step(inst, state, a);
                state = res.next;
                record();
            }
            for (int o = 0; o < sf::pushworld::kNumSlots; ++o) {
                const auto& obj = inst.initial_state.objects[static_cast<std::size_t>(o)];
                scene.circles.push_back({obj.position.x(), obj.position.y(), obj.radius,
                                         goal_colors[obj.category], true});
            }
            scene.paths.push_back(std::move(pusher_path));
            for (auto& op : obj_paths) scene.paths.push_back(std::move(op));
            scenes.push_back(std::move(scene));
        }
        sf::svg::write_scene_grid(std::filesystem::path(out_dir) /
                                      ("traces_skill_" + std::to_string(z) + ".svg"),
                                  "skill " + std::to_string(z) + " rollouts", scenes, 4);
    }
    std::cout << "wrote report and plots for " << num_skills << " skills to " << out_dir << "\n";
    return kExitOk;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out_image,
             std::string column) {
    if (csv_paths.empty()) throw sf::ConfigError("plot: no metrics files given");
    struct Run {
        std::string label;
        std::vector<double> x;
        std::vector<double> y;
    };
    std::vector<Run> runs;
    std::string x_column;
    for (const auto& path : csv_paths) {
        auto table = sf::MetricsTable::read(path);
        if (table.row_count() == 0) throw sf::ConfigError("plot: empty metrics file: " + path);
        std::string xc = "iteration";
        for (const auto& c : table.columns())
            if (c == "step") xc = "step";
        if (x_column.empty()) x_column = xc;
        if (xc != x_column)
            throw sf::ConfigError("plot: mixed metrics schemas ('" + x_column + "' vs '" + xc + "')");
        if (column.empty()) {
            bool has_eval = false;
            for (const auto& c : table.columns())
                if (c == "eval_return_mean") has_eval = true;
            column = has_eval ? "eval_return_mean" : "mean_return";
        }
        Run run;
        run.x = table.numeric_column(x_column);
        run.y = table.numeric_column(column);
        auto dir = std::filesystem::path(path).parent_path();
        if (std::filesystem::exists(dir / "manifest.json"))
            run.label = sf::RunManifest::load(dir).name;
        else
            run.label = dir.filename().string();
        runs.push_back(std::move(run));
    }

    // Group runs by label; seeds of one arm must share the evaluation grid.
    std::vector<sf::svg::CurveSeries> series;
    for (const auto& run : runs) {
        sf::svg::CurveSeries* s = nullptr;
        for (auto& existing : series)
            if (existing.label == run.label) s = &existing;
        if (!s) {
            series.push_back({run.label, run.x, std::vector<double>(run.x.size(), 0.0),
                              std::vector<double>(run.x.size(), 0.0)});
            s = &series.back();
        }
        if (run.x != s->x)
            throw sf::ConfigError("plot: runs labeled '" + run.label +
                                  "' have different evaluation grids");
    }
    for (auto& s : series) {
        std::vector<std::vector<double>> ys;
        for (const auto& run : runs)
            if (run.label == s.label) ys.push_back(run.y);
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double mean = 0.0;
            for (const auto& y : ys) mean += y[i];
            mean /= static_cast<double>(ys.size());
            double var = 0.0;
            for (const auto& y : ys) var += (y[i] - mean) * (y[i] - mean);
            var /= static_cast<double>(ys.size());
            s.mean[i] = mean;
            s.stddev[i] = std::sqrt(var);
        }
    }
    sf::svg::write_curve_plot(out_image, column + " (mean +- std over seeds)", x_column, column,
                              series);
    std::cout << "wrote " << out_image << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skill discovery via diverse generated tasks"};
    app.require_subcommand(1);

    auto* discover = app.add_subcommand("discover", "run skill discovery");
    std::string d_config, d_out, d_baseline, d_name;
    std::uint64_t d_seed = 1;
    bool d_resume = false;
    int d_workers = 0;
    discover->add_option("--config", d_config, "config file")->required();
    auto* d_out_opt = discover->add_option("--out", d_out, "output directory");
    auto* d_seed_opt = discover->add_option("--seed", d_seed, "manifest seed");
    discover->add_option("--baseline", d_baseline,
                         "uniform_tasks | next_state_discriminator (default: primary method)");
    discover->add_flag("--resume", d_resume, "resume from the checkpoint in --out");
    discover->add_option("--workers", d_workers, "evaluation worker threads");
    discover->add_option("--name", d_name, "arm label recorded in the manifest");

    auto* transfer = app.add_subcommand("transfer", "train a high-level policy on a target task");
    std::string t_skills, t_config, t_out, t_baseline, t_name;
    std::uint64_t t_seed = 1;
    bool t_freeze = false, t_eval_only = false, t_random = false;
    transfer->add_option("--skills", t_skills, "discovery output directory");
    transfer->add_option("--config", t_config, "config file")->required();
    auto* t_out_opt = transfer->add_option("--out", t_out, "output directory");
    auto* t_seed_opt = transfer->add_option("--seed", t_seed, "manifest seed");
    transfer->add_option("--baseline", t_baseline, "flat_sac");
    transfer->add_flag("--freeze-skills", t_freeze, "disable skill finetuning");
    transfer->add_flag("--eval-only", t_eval_only, "evaluate once and exit");
    transfer->add_flag("--random-selection", t_random, "select skills uniformly at random");
    transfer->add_option("--name", t_name, "arm label recorded in the manifest");

    auto* inspect = app.add_subcommand("inspect-tasks", "sample and plot per-skill tasks");
    std::string i_skills, i_out;
    long i_samples = 256;
    inspect->add_option("--skills", i_skills, "discovery output directory")->required();
    inspect->add_option("--samples", i_samples, "samples per skill");
    auto* i_out_opt = inspect->add_option("--out", i_out, "output directory");

    auto* plot = app.add_subcommand("plot", "multi-seed mean/std curves from metrics files");
    std::vector<std::string> p_csvs;
    std::string p_out, p_column;
    plot->add_option("--out", p_out, "output SVG image")->required();
    plot->add_option("--column", p_column, "metrics column to plot");
    plot->add_option("csvs", p_csvs, "metrics.csv files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (discover->parsed()) {
            auto cfg = sf::KeyValueConfig::parse_file(d_config);
            std::uint64_t seed = resolve_seed(
                d_seed_opt, d_seed, static_cast<std::uint64_t>(cfg.get_long_or("run", "seed", 1)));
            return cmd_discover(d_config, resolve_out_dir(d_out_opt, d_out), seed, d_baseline,
                                d_resume, d_workers, d_name);
        }
        if (transfer->parsed()) {
            auto cfg = sf::KeyValueConfig::parse_file(t_config);
            std::uint64_t seed = resolve_seed(
                t_seed_opt, t_seed,
                static_cast<std::uint64_t>(cfg.get_long_or("transfer", "seed", 1)));
            return cmd_transfer(t_skills, t_config, resolve_out_dir(t_out_opt, t_out), seed,
                                t_baseline, t_freeze, t_eval_only, t_random, t_name);
        }
        if (inspect->parsed())
            return cmd_inspect_tasks(i_skills, i_samples, resolve_out_dir(i_out_opt, i_out));
        if (plot->parsed()) return cmd_plot(p_csvs, p_out, p_column);
    } catch (const sf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const sf::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}
