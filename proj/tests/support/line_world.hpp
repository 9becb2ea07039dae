#pragma once

#include "skillforge/environment.hpp"

namespace test_support {

/// Action-sensitive minimal family: the agent moves a point on [-1, 1] with
/// 1-D displacement actions; one discrete parameter offsets the start. The
/// environment pays no reward, so only intrinsic-reward learners do anything
/// interesting here.
class LineWorldEnv final : public skillforge::TaskEnvironment {
public:
    explicit LineWorldEnv(int horizon = 4)
        : horizon_(horizon), spec_({skillforge::ParamSpec::discrete("start_side", 2)}) {}

    const skillforge::TaskParamSpec& param_spec() const override { return spec_; }
    int obs_dim() const override { return 2; }
    int action_dim() const override { return 1; }
    double action_limit() const override { return 0.25; }
    int horizon() const override { return horizon_; }

    std::unique_ptr<Episode> start(const skillforge::TaskParams& w,
                                   std::uint64_t /*episode_seed*/) const override {
        return std::make_unique<LineEpisode>(w.discrete_at(0) == 0 ? -0.2 : 0.2, horizon_);
    }

private:
    class LineEpisode final : public Episode {
    public:
        LineEpisode(double x, int horizon) : x_(x), horizon_(horizon) {}

        skillforge::Vector observe() const override {
            skillforge::Vector obs(2);
            obs << x_, static_cast<double>(t_) / horizon_;
            return obs;
        }

        std::pair<double, bool> step(const skillforge::Vector& action) override {
            x_ = std::clamp(x_ + action[0], -1.0, 1.0);
            ++t_;
            return {0.0, t_ >= horizon_};
        }

    private:
        double x_;
        int horizon_;
        int t_ = 0;
    };

    int horizon_;
    skillforge::TaskParamSpec spec_;
};

}  // namespace test_support
