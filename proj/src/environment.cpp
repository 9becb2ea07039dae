#include "skillforge/environment.hpp"

namespace skillforge {

namespace {

class PushWorldEpisode final : public TaskEnvironment::Episode {
public:
    PushWorldEpisode(const TaskParams& w, std::uint64_t episode_seed)
        : instance_(pushworld::instantiate(w, episode_seed)), state_(instance_.initial_state) {}

    Vector observe() const override { return pushworld::observe(state_); }

    std::pair<double, bool> step(const Vector& action) override {
        pushworld::Action a;
        a.displacement = Vec2(action[0], action[1]);
        auto result = pushworld::step(instance_, state_, a);
        state_ = result.next;
        return {result.reward, result.done};
    }

private:
    pushworld::TaskInstance instance_;
    pushworld::WorldState state_;
};

}  // namespace

std::unique_ptr<TaskEnvironment::Episode> PushWorldEnv::start(const TaskParams& w,
                                                              std::uint64_t episode_seed) const {
    return std::make_unique<PushWorldEpisode>(w, episode_seed);
}

}  // namespace skillforge
