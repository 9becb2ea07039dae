#pragma once

#include <array>
#include <cstdint>

#include "skillforge/param_space.hpp"
#include "skillforge/trajectory.hpp"

namespace skillforge::pushworld {

inline constexpr int kNumCategories = 3;
inline constexpr int kNumSlots = 3;
inline constexpr int kHorizon = 20;
inline constexpr double kMaxDisplacement = 0.2;  // per action component
inline constexpr double kGoalRadiusMin = 0.05;
inline constexpr double kGoalRadiusMax = 0.2;
inline constexpr double kObjectRadiusMin = 0.03;
inline constexpr double kObjectRadiusMax = 0.08;

/// Observation layout: pusher (2) + per slot [present, x, y, category one-hot
/// (3), radius] * 3 = 23. Goals are never encoded.
inline constexpr int kObsDim = 2 + kNumSlots * (1 + 2 + kNumCategories + 1);
inline constexpr int kActionDim = 2;

struct ObjectSlot {
    bool present = false;
    Vec2 position = Vec2::Zero();
    int category = 0;
    double radius = 0.0;
};

struct WorldState {
    Vec2 pusher = Vec2::Zero();
    std::array<ObjectSlot, kNumSlots> objects;
};

struct Action {
    Vec2 displacement = Vec2::Zero();
};

struct GoalEntry {
    Vec2 center = Vec2::Zero();
    double radius = 0.0;
};

/// A concrete MDP instance M(w): the goal table derived from w, the seeded
/// initial state, and the step budget.
struct TaskInstance {
    TaskParams params;
    std::array<GoalEntry, kNumCategories> goals;
    std::uint64_t episode_seed = 0;
    WorldState initial_state;
    int steps_taken = 0;
    int horizon = kHorizon;

    bool finished() const { return steps_taken >= horizon; }
};

struct Transition {
    WorldState state;
    Action action;
    double reward = 0.0;
    WorldState next_state;
};

struct Trajectory {
    int skill = 0;
    TaskParams params;
    std::uint64_t episode_seed = 0;
    WorldState initial_state;
    std::vector<Transition> transitions;

    double undiscounted_return() const {
        double r = 0.0;
        for (const auto& t : transitions) r += t.reward;
        return r;
    }

    EncodedTrajectory encode() const;
};

/// The 15-dimensional parameterization: per category (goal_x, goal_y,
/// goal_radius), then per object slot (category, radius).
TaskParamSpec task_param_spec();

TaskInstance instantiate(const TaskParams& w, std::uint64_t episode_seed);

struct StepResult {
    WorldState next;
    double reward = 0.0;
    bool done = false;
};

/// Kinematic step. The pusher endpoint is displaced by the clipped action and
/// clamped to the unit square; overlap resolution then runs as documented in
/// resolve_contacts(). Reward is the summed per-object decrease in distance
/// to its category goal. Throws std::logic_error on a finished instance.
StepResult step(TaskInstance& instance, const WorldState& state, const Action& action);

Vector observe(const WorldState& state);

/// Distance from each present object to its category goal center; the
/// telescoping identity makes sum(initial) - sum(final) the exact episode
/// return.
double total_goal_distance(const TaskInstance& instance, const WorldState& state);

}  // namespace skillforge::pushworld
