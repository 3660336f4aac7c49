#include "mrnav/world.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mrnav/errors.hpp"
#include "mrnav/rng.hpp"

namespace mrnav {

const char* to_string(Dynamics d) {
    return d == Dynamics::single_integrator ? "single" : "double";
}

Dynamics dynamics_from_string(const std::string& s) {
    if (s == "single") return Dynamics::single_integrator;
    if (s == "double") return Dynamics::double_integrator;
    throw FormatError("unknown dynamics kind: " + s);
}

Vec2 closest_point_on_obstacle(const Vec2& p, const GridCell& cell) {
    const double x0 = static_cast<double>(cell.ix);
    const double y0 = static_cast<double>(cell.iy);
    return {std::clamp(p.x, x0, x0 + 1.0), std::clamp(p.y, y0, y0 + 1.0)};
}

double obstacle_clearance(const Vec2& p, const EnvInstance& env) {
    double best = std::numeric_limits<double>::infinity();
    for (const GridCell& c : env.obstacles) {
        best = std::min(best, (closest_point_on_obstacle(p, c) - p).norm());
    }
    return best;
}

double min_clearance(std::span<const RobotState> states, const EnvInstance& env) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < states.size(); ++i) {
        for (size_t j = i + 1; j < states.size(); ++j) {
            best = std::min(best, (states[j].p - states[i].p).norm());
        }
        best = std::min(best, obstacle_clearance(states[i].p, env));
    }
    return best;
}

bool collision_free(std::span<const RobotState> states, const EnvInstance& env, double r_safe) {
    return min_clearance(states, env) > r_safe;
}

namespace {

bool placement_ok(const Vec2& p, const std::vector<Vec2>& placed, const EnvInstance& env,
                  double spacing) {
    if (obstacle_clearance(p, env) < spacing) return false;
    for (const Vec2& q : placed) {
        if ((q - p).norm() < spacing) return false;
    }
    return true;
}

}  // namespace

EnvInstance make_random_env(int n_robots, double obstacle_fraction, int side, uint64_t seed,
                            double spacing, Dynamics dynamics) {
    if (n_robots < 1) throw std::invalid_argument("make_random_env: n_robots must be >= 1");
    if (side < 1) throw std::invalid_argument("make_random_env: side must be a positive integer");
    if (obstacle_fraction < 0.0 || obstacle_fraction > 0.5) {
        throw std::invalid_argument("make_random_env: obstacle_fraction must be in [0, 0.5]");
    }

    Rng rng(seed);
    EnvInstance env;
    env.bounds = {0.0, 0.0, static_cast<double>(side), static_cast<double>(side)};
    env.dynamics = dynamics;

    // Partial Fisher-Yates over all cells: uniform sample without replacement.
    const int n_cells = side * side;
    const int n_obstacles = static_cast<int>(obstacle_fraction * n_cells);
    std::vector<int> cells(n_cells);
    for (int i = 0; i < n_cells; ++i) cells[i] = i;
    for (int k = 0; k < n_obstacles; ++k) {
        const int j = k + static_cast<int>(rng.uniform_below(static_cast<uint64_t>(n_cells - k)));
        std::swap(cells[k], cells[j]);
        env.obstacles.push_back({cells[k] % side, cells[k] / side});
    }
    std::sort(env.obstacles.begin(), env.obstacles.end());

    // Starts, then goals, with the same spacing rule within each group.
    const int budget = 100 * n_robots;
    for (auto* group : {&env.starts, &env.goals}) {
        std::vector<Vec2> placed;
        int attempts = 0;
        while (static_cast<int>(placed.size()) < n_robots) {
            if (++attempts > budget) {
                throw InfeasibleInstanceError(
                    "instance infeasible: could not place " + std::to_string(n_robots) +
                    " robots with spacing " + std::to_string(spacing) + " (seed " +
                    std::to_string(seed) + ")");
            }
            const Vec2 p{rng.uniform(0.0, static_cast<double>(side)),
                         rng.uniform(0.0, static_cast<double>(side))};
            if (placement_ok(p, placed, env, spacing)) placed.push_back(p);
        }
        group->resize(n_robots);
        for (int i = 0; i < n_robots; ++i) (*group)[i] = RobotState{placed[i], {0.0, 0.0}};
    }
    return env;
}

namespace {

nlohmann::json state_to_json(const RobotState& s, Dynamics d) {
    nlohmann::json j = nlohmann::json::array({s.p.x, s.p.y});
    if (d == Dynamics::double_integrator) {
        j.push_back(s.v.x);
        j.push_back(s.v.y);
    }
    return j;
}

RobotState state_from_json(const nlohmann::json& j, Dynamics d) {
    if (!j.is_array() || j.size() < 2) throw FormatError("robot state must be [x,y] or [x,y,vx,vy]");
    RobotState s;
    s.p = {j[0].get<double>(), j[1].get<double>()};
    if (d == Dynamics::double_integrator) {
        if (j.size() != 4) throw FormatError("double-integrator state must be [x,y,vx,vy]");
        s.v = {j[2].get<double>(), j[3].get<double>()};
    } else if (j.size() != 2) {
        throw FormatError("single-integrator state must be [x,y]");
    }
    return s;
}

}  // namespace

std::string env_to_json(const EnvInstance& env) {
    nlohmann::json j;
    j["bounds"] = {env.bounds.xmin, env.bounds.ymin, env.bounds.xmax, env.bounds.ymax};
    j["dynamics"] = to_string(env.dynamics);
    j["obstacles"] = nlohmann::json::array();
    for (const GridCell& c : env.obstacles) j["obstacles"].push_back({c.ix, c.iy});
    j["starts"] = nlohmann::json::array();
    j["goals"] = nlohmann::json::array();
    for (const RobotState& s : env.starts) j["starts"].push_back(state_to_json(s, env.dynamics));
    for (const RobotState& s : env.goals) j["goals"].push_back(state_to_json(s, env.dynamics));
    return j.dump(2) + "\n";
}

EnvInstance env_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("env file is not valid JSON: ") + e.what());
    }
    EnvInstance env;
    try {
        const auto& b = j.at("bounds");
        env.bounds = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                      b.at(3).get<double>()};
        env.dynamics = dynamics_from_string(j.at("dynamics").get<std::string>());
        for (const auto& c : j.at("obstacles")) {
            env.obstacles.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        }
        for (const auto& s : j.at("starts")) env.starts.push_back(state_from_json(s, env.dynamics));
        for (const auto& s : j.at("goals")) env.goals.push_back(state_from_json(s, env.dynamics));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("env file missing/invalid field: ") + e.what());
    }
    if (env.starts.size() != env.goals.size()) {
        throw FormatError("env file: |starts| != |goals|");
    }
    return env;
}

void save_env(const EnvInstance& env, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << env_to_json(env);
}

EnvInstance load_env(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open env file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return env_from_json(ss.str());
}

}  // namespace mrnav
