#pragma once

#include <cstdint>
#include <vector>

#include "skillforge/common.hpp"
#include "skillforge/param_space.hpp"

namespace skillforge {

/// One transition in network-facing form.
struct EncodedStep {
    Vector obs;
    Vector action;
    double reward = 0.0;
    Vector next_obs;
};

/// A rollout as the discriminator and the log files see it: the skill index z
/// it was collected under, the task parameters w, and the flat observation /
/// action / reward stream.
struct EncodedTrajectory {
    int skill = 0;
    TaskParams params;
    std::uint64_t episode_seed = 0;
    Vector initial_obs;
    std::vector<EncodedStep> steps;

    int length() const { return static_cast<int>(steps.size()); }

    double undiscounted_return() const {
        double r = 0.0;
        for (const auto& s : steps) r += s.reward;
        return r;
    }

    double discounted_return(double gamma) const {
        double r = 0.0;
        double g = 1.0;
        for (const auto& s : steps) {
            r += g * s.reward;
            g *= gamma;
        }
        return r;
    }
};

/// One line of the episode log: {skill, params, seed, transitions as flat
/// arrays, return}, JSON-encoded. Each transition flattens to
/// [obs..., action..., reward, next_obs...].
std::string trajectory_log_line(const EncodedTrajectory& traj);
EncodedTrajectory trajectory_from_log_line(const std::string& line);

}  // namespace skillforge
