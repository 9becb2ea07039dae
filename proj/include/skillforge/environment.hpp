#pragma once

#include <memory>

#include "skillforge/param_space.hpp"
#include "skillforge/pushworld.hpp"

namespace skillforge {

/// A parameterized task family: given w it instantiates an episode with its
/// own initial state, dynamics, and reward. Implementations are stateless;
/// each episode owns its mutable state, so independent episodes may run in
/// parallel workers.
class TaskEnvironment {
public:
    class Episode {
    public:
        virtual ~Episode() = default;
        virtual Vector observe() const = 0;
        /// Advances one step; returns (reward, done).
        virtual std::pair<double, bool> step(const Vector& action) = 0;
    };

    virtual ~TaskEnvironment() = default;
    virtual const TaskParamSpec& param_spec() const = 0;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual double action_limit() const = 0;
    virtual int horizon() const = 0;
    virtual std::unique_ptr<Episode> start(const TaskParams& w, std::uint64_t episode_seed) const = 0;
};

/// TaskEnvironment adapter over the pushworld kinematics.
class PushWorldEnv final : public TaskEnvironment {
public:
    PushWorldEnv() : spec_(pushworld::task_param_spec()) {}

    const TaskParamSpec& param_spec() const override { return spec_; }
    int obs_dim() const override { return pushworld::kObsDim; }
    int action_dim() const override { return pushworld::kActionDim; }
    double action_limit() const override { return pushworld::kMaxDisplacement; }
    int horizon() const override { return pushworld::kHorizon; }
    std::unique_ptr<Episode> start(const TaskParams& w, std::uint64_t episode_seed) const override;

private:
    TaskParamSpec spec_;
};

}  // namespace skillforge
