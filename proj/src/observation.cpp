#include "mrnav/observation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "mrnav/errors.hpp"
#include "mrnav/safety.hpp"

namespace mrnav {

std::pair<std::vector<int>, std::vector<GridCell>> neighbor_sets(
    int i, std::span<const RobotState> states, const EnvInstance& env, double r_sense) {
    if (i < 0 || i >= static_cast<int>(states.size())) {
        throw std::out_of_range("neighbor_sets: robot index out of range");
    }
    std::vector<int> robots;
    std::vector<GridCell> cells;
    const Vec2 p = states[i].p;
    for (int j = 0; j < static_cast<int>(states.size()); ++j) {
        if (j == i) continue;
        if ((states[j].p - p).norm() <= r_sense) robots.push_back(j);
    }
    for (const GridCell& c : env.obstacles) {
        if ((closest_point_on_obstacle(p, c) - p).norm() <= r_sense) cells.push_back(c);
    }
    return {std::move(robots), std::move(cells)};
}

Observation observe(int i, std::span<const RobotState> states, const EnvInstance& env,
                    const SafetyParams& params, const ObsCaps& caps) {
    Observation obs;
    obs.dynamics = env.dynamics;
    const RobotState& self = states[i];

    // Goal scaling: alpha_g = min(r_sense/||e||, 1) on the position block;
    // the velocity block (-v_i, goals are at rest) passes through unscaled.
    const Vec2 e = env.goals[i].p - self.p;
    const double en = e.norm();
    const double alpha_g = en > params.r_sense ? params.r_sense / en : 1.0;
    obs.rel_goal_p = alpha_g * e;
    if (obs.dynamics == Dynamics::double_integrator) obs.rel_goal_v = -self.v;

    auto [robot_idx, cells] = neighbor_sets(i, states, env, params.r_sense);

    // Sort by range; ties by robot index resp. lexicographic cell order.
    std::vector<std::pair<double, int>> nbr;
    nbr.reserve(robot_idx.size());
    for (int j : robot_idx) nbr.emplace_back((states[j].p - self.p).norm(), j);
    std::sort(nbr.begin(), nbr.end());
    std::vector<std::pair<double, GridCell>> obst;
    obst.reserve(cells.size());
    for (const GridCell& c : cells) {
        obst.emplace_back((closest_point_on_obstacle(self.p, c) - self.p).norm(), c);
    }
    std::sort(obst.begin(), obst.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second < b.second;
    });

    // min h over the uncapped sets, before truncation.
    obs.raw_min_h = std::numeric_limits<double>::infinity();
    const double denom = params.r_sense - params.r_safe;
    auto fold_min_h = [&](double range) {
        obs.raw_min_h = std::min(obs.raw_min_h, (range - params.r_safe) / denom);
    };
    for (const auto& [d, j] : nbr) fold_min_h(d);
    for (const auto& [d, c] : obst) fold_min_h(d);

    const size_t keep_n = std::min<size_t>(nbr.size(), std::max(caps.max_neighbors, 0));
    const size_t keep_o = std::min<size_t>(obst.size(), std::max(caps.max_obstacles, 0));
    obs.neighbors.reserve(keep_n);
    for (size_t k = 0; k < keep_n; ++k) {
        const int j = nbr[k].second;
        NeighborRel rel;
        rel.p = states[j].p - self.p;
        if (obs.dynamics == Dynamics::double_integrator) rel.v = states[j].v - self.v;
        obs.neighbors.push_back(rel);
    }
    obs.obstacles.reserve(keep_o);
    for (size_t k = 0; k < keep_o; ++k) {
        obs.obstacles.push_back(closest_point_on_obstacle(self.p, obst[k].second) - self.p);
    }
    return obs;
}

std::vector<double> encode(const Observation& obs) {
    std::vector<double> flat;
    flat.reserve(obs.encoded_size());
    flat.push_back(obs.rel_goal_p.x);
    flat.push_back(obs.rel_goal_p.y);
    if (obs.dynamics == Dynamics::double_integrator) {
        flat.push_back(obs.rel_goal_v.x);
        flat.push_back(obs.rel_goal_v.y);
    }
    for (const NeighborRel& n : obs.neighbors) {
        flat.push_back(n.p.x);
        flat.push_back(n.p.y);
        if (obs.dynamics == Dynamics::double_integrator) {
            flat.push_back(n.v.x);
            flat.push_back(n.v.y);
        }
    }
    for (const Vec2& o : obs.obstacles) {
        flat.push_back(o.x);
        flat.push_back(o.y);
    }
    return flat;
}

Observation decode(std::span<const double> flat, int n_neighbors, int n_obstacles,
                   Dynamics dynamics, const SafetyParams& params) {
    Observation obs;
    obs.dynamics = dynamics;
    const int nd = obs.neighbor_dim();
    const int gd = obs.goal_dim();
    const size_t expected = static_cast<size_t>(gd + nd * n_neighbors + 2 * n_obstacles);
    if (flat.size() != expected) {
        throw FormatError("decode: flat vector has " + std::to_string(flat.size()) +
                          " values, expected " + std::to_string(expected));
    }
    size_t k = 0;
    obs.rel_goal_p = {flat[k], flat[k + 1]};
    k += 2;
    if (gd == 4) {
        obs.rel_goal_v = {flat[k], flat[k + 1]};
        k += 2;
    }
    obs.neighbors.resize(n_neighbors);
    for (int i = 0; i < n_neighbors; ++i) {
        obs.neighbors[i].p = {flat[k], flat[k + 1]};
        k += 2;
        if (nd == 4) {
            obs.neighbors[i].v = {flat[k], flat[k + 1]};
            k += 2;
        }
    }
    obs.obstacles.resize(n_obstacles);
    for (int i = 0; i < n_obstacles; ++i) {
        obs.obstacles[i] = {flat[k], flat[k + 1]};
        k += 2;
    }

    obs.raw_min_h = std::numeric_limits<double>::infinity();
    const double denom = params.r_sense - params.r_safe;
    for (const NeighborRel& n : obs.neighbors) {
        obs.raw_min_h = std::min(obs.raw_min_h, (n.p.norm() - params.r_safe) / denom);
    }
    for (const Vec2& o : obs.obstacles) {
        obs.raw_min_h = std::min(obs.raw_min_h, (o.norm() - params.r_safe) / denom);
    }
    return obs;
}

}  // namespace mrnav
