#include "skillforge/trajectory.hpp"

#include <json.hpp>

namespace skillforge {

namespace {

std::vector<double> to_std(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

Vector from_std(const std::vector<double>& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

}  // namespace

std::string trajectory_log_line(const EncodedTrajectory& traj) {
    nlohmann::json j;
    j["skill"] = traj.skill;
    j["seed"] = traj.episode_seed;
    j["params"] = traj.params.values;
    j["initial_obs"] = to_std(traj.initial_obs);
    auto& transitions = j["transitions"] = nlohmann::json::array();
    for (const auto& s : traj.steps) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(s.obs.size() + s.action.size() + 1 + s.next_obs.size()));
        flat.insert(flat.end(), s.obs.data(), s.obs.data() + s.obs.size());
        flat.insert(flat.end(), s.action.data(), s.action.data() + s.action.size());
        flat.push_back(s.reward);
        flat.insert(flat.end(), s.next_obs.data(), s.next_obs.data() + s.next_obs.size());
        transitions.push_back(std::move(flat));
    }
    j["return"] = traj.undiscounted_return();
    return j.dump();
}

EncodedTrajectory trajectory_from_log_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    EncodedTrajectory traj;
    traj.skill = j.at("skill").get<int>();
    traj.episode_seed = j.at("seed").get<std::uint64_t>();
    traj.params.values = j.at("params").get<std::vector<double>>();
    traj.initial_obs = from_std(j.at("initial_obs").get<std::vector<double>>());
    Eigen::Index obs_dim = traj.initial_obs.size();
    for (const auto& t : j.at("transitions")) {
        auto flat = t.get<std::vector<double>>();
        auto n = static_cast<Eigen::Index>(flat.size());
        Eigen::Index action_dim = n - 2 * obs_dim - 1;
        if (action_dim < 1) throw IoError("trajectory log: malformed transition array");
        EncodedStep s;
        Vector v = from_std(flat);
        s.obs = v.segment(0, obs_dim);
        s.action = v.segment(obs_dim, action_dim);
        s.reward = v[obs_dim + action_dim];
        s.next_obs = v.segment(obs_dim + action_dim + 1, obs_dim);
        traj.steps.push_back(std::move(s));
    }
    return traj;
}

}  // namespace skillforge
