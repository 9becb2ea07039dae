#include "skillforge/pushworld.hpp"

#include <cmath>

namespace skillforge::pushworld {

namespace {

Vec2 clamp_unit(Vec2 p) {
    return {std::clamp(p.x(), 0.0, 1.0), std::clamp(p.y(), 0.0, 1.0)};
}

/// Push `obj` out of a disc of radius `min_dist` centered at `from`. The
/// separation direction is center-to-center; a degenerate zero distance
/// resolves along +x. When the naive target leaves the unit square the
/// object slides along the blocking wall instead, keeping the separation
/// distance exact.
void push_out(Vec2& obj, const Vec2& from, double min_dist) {
    Vec2 d = obj - from;
    double dist = d.norm();
    if (dist >= min_dist) return;
    Vec2 dir = dist > 1e-12 ? Vec2(d / dist) : Vec2(1.0, 0.0);
    Vec2 naive = from + dir * min_dist;
    if (naive == clamp_unit(naive)) {
        obj = naive;
        return;
    }
    // Wall-pinned exact-distance candidates; pick the one nearest the naive
    // target. Falls back to plain clamping only if no candidate fits (a
    // corner jam tighter than min_dist on both axes).
    bool found = false;
    Vec2 best = Vec2::Zero();
    double best_dist = 0.0;
    for (int pinned = 0; pinned < 2; ++pinned) {
        int free_axis = 1 - pinned;
        double wall = std::clamp(naive[pinned], 0.0, 1.0);
        if (wall == naive[pinned]) continue;
        double disc = min_dist * min_dist - (wall - from[pinned]) * (wall - from[pinned]);
        if (disc < 0.0) continue;
        for (double sign : {1.0, -1.0}) {
            Vec2 cand;
            cand[pinned] = wall;
            cand[free_axis] = from[free_axis] + sign * std::sqrt(disc);
            if (cand[free_axis] < 0.0 || cand[free_axis] > 1.0) continue;
            double err = (cand - naive).norm();
            if (!found || err < best_dist) {
                found = true;
                best = cand;
                best_dist = err;
            }
        }
    }
    obj = found ? best : clamp_unit(naive);
}

double max_penetration(const WorldState& s) {
    double pen = 0.0;
    for (int i = 0; i < kNumSlots; ++i) {
        const auto& a = s.objects[static_cast<std::size_t>(i)];
        if (!a.present) continue;
        pen = std::max(pen, a.radius - (a.position - s.pusher).norm());
        for (int j = i + 1; j < kNumSlots; ++j) {
            const auto& b = s.objects[static_cast<std::size_t>(j)];
            if (!b.present) continue;
            pen = std::max(pen, (a.radius + b.radius) - (a.position - b.position).norm());
        }
    }
    return pen;
}

/// Contact model (documented so tests can recompute it): with the pusher
/// endpoint fixed, (1) every object overlapping the pusher point is pushed
/// out along the center-to-center direction by the penetration depth,
/// sliding along a blocking wall when needed; (2) object-object overlaps are
/// separated symmetrically along the center line, iterated twice; (3)
/// objects are clamped into the unit square. The sequence repeats until the
/// worst remaining penetration falls below 1e-12, capped at 512 sweeps.
void resolve_contacts(WorldState& s) {
    for (int sweep = 0; sweep < 512; ++sweep) {
        for (auto& o : s.objects) {
            if (!o.present) continue;
            push_out(o.position, s.pusher, o.radius);
        }
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < kNumSlots; ++i) {
                for (int j = i + 1; j < kNumSlots; ++j) {
                    auto& a = s.objects[static_cast<std::size_t>(i)];
                    auto& b = s.objects[static_cast<std::size_t>(j)];
                    if (!a.present || !b.present) continue;
                    Vec2 d = b.position - a.position;
                    double dist = d.norm();
                    double min_dist = a.radius + b.radius;
                    if (dist >= min_dist) continue;
                    Vec2 dir = dist > 1e-12 ? Vec2(d / dist) : Vec2(1.0, 0.0);
                    double pen = min_dist - dist;
                    a.position -= dir * (0.5 * pen);
                    b.position += dir * (0.5 * pen);
                }
            }
        }
        for (auto& o : s.objects) {
            if (!o.present) continue;
            o.position = clamp_unit(o.position);
        }
        if (max_penetration(s) < 1e-12) break;
    }
}

}  // namespace

TaskParamSpec task_param_spec() {
    std::vector<ParamSpec> params;
    for (int c = 0; c < kNumCategories; ++c) {
        std::string suffix = "_" + std::to_string(c);
        params.push_back(ParamSpec::continuous("goal_x" + suffix, 0.0, 1.0));
        params.push_back(ParamSpec::continuous("goal_y" + suffix, 0.0, 1.0));
        params.push_back(ParamSpec::continuous("goal_radius" + suffix, kGoalRadiusMin, kGoalRadiusMax));
    }
    for (int s = 0; s < kNumSlots; ++s) {
        std::string suffix = "_" + std::to_string(s);
        params.push_back(ParamSpec::discrete("object_category" + suffix, kNumCategories));
        params.push_back(
            ParamSpec::continuous("object_radius" + suffix, kObjectRadiusMin, kObjectRadiusMax));
    }
    return TaskParamSpec(std::move(params));
}

TaskInstance instantiate(const TaskParams& w, std::uint64_t episode_seed) {
    static const TaskParamSpec spec = task_param_spec();
    validate_params(spec, w);

    TaskInstance inst;
    inst.params = w;
    inst.episode_seed = episode_seed;
    for (int c = 0; c < kNumCategories; ++c) {
        inst.goals[static_cast<std::size_t>(c)].center = Vec2(w.at(3 * c), w.at(3 * c + 1));
        inst.goals[static_cast<std::size_t>(c)].radius = w.at(3 * c + 2);
    }

    Rng rng(derive_seed(episode_seed, "pushworld.init"));
    WorldState s;
    s.pusher = Vec2(rng.uniform(), rng.uniform());
    for (int i = 0; i < kNumSlots; ++i) {
        auto& obj = s.objects[static_cast<std::size_t>(i)];
        obj.present = true;
        obj.category = w.discrete_at(9 + 2 * i);
        obj.radius = w.at(9 + 2 * i + 1);
        obj.position = Vec2(rng.uniform(), rng.uniform());
    }
    resolve_contacts(s);
    inst.initial_state = s;
    return inst;
}

StepResult step(TaskInstance& instance, const WorldState& state, const Action& action) {
    if (instance.finished())
        throw std::logic_error("pushworld: step() called on a finished instance");

    Vec2 delta(std::clamp(action.displacement.x(), -kMaxDisplacement, kMaxDisplacement),
               std::clamp(action.displacement.y(), -kMaxDisplacement, kMaxDisplacement));

    WorldState next = state;
    next.pusher = clamp_unit(state.pusher + delta);
    resolve_contacts(next);

    double reward = total_goal_distance(instance, state) - total_goal_distance(instance, next);

    ++instance.steps_taken;
    return {std::move(next), reward, instance.finished()};
}

Vector observe(const WorldState& state) {
    Vector obs(kObsDim);
    obs[0] = state.pusher.x();
    obs[1] = state.pusher.y();
    int k = 2;
    for (const auto& o : state.objects) {
        obs[k++] = o.present ? 1.0 : 0.0;
        obs[k++] = o.present ? o.position.x() : 0.0;
        obs[k++] = o.present ? o.position.y() : 0.0;
        for (int c = 0; c < kNumCategories; ++c) obs[k++] = (o.present && o.category == c) ? 1.0 : 0.0;
        obs[k++] = o.present ? o.radius : 0.0;
    }
    return obs;
}

double total_goal_distance(const TaskInstance& instance, const WorldState& state) {
    double d = 0.0;
    for (const auto& o : state.objects) {
        if (!o.present) continue;
        d += (o.position - instance.goals[static_cast<std::size_t>(o.category)].center).norm();
    }
    return d;
}

EncodedTrajectory Trajectory::encode() const {
    EncodedTrajectory enc;
    enc.skill = skill;
    enc.params = params;
    enc.episode_seed = episode_seed;
    enc.initial_obs = observe(initial_state);
    enc.steps.reserve(transitions.size());
    for (const auto& t : transitions) {
        EncodedStep s;
        s.obs = observe(t.state);
        s.action = Vector(2);
        s.action << t.action.displacement.x(), t.action.displacement.y();
        s.reward = t.reward;
        s.next_obs = observe(t.next_state);
        enc.steps.push_back(std::move(s));
    }
    return enc;
}

}  // namespace skillforge::pushworld
