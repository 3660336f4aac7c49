#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mrnav/vec2.hpp"
#include "mrnav/world.hpp"

namespace mrnav {

struct SafetyParams;

struct ObsCaps {
    int max_neighbors = 6;  // cap on |N_V|
    int max_obstacles = 6;  // cap on |N_Omega|
};

// Relative state of one in-range robot: p = p_j - p_i, and for double
// integrator v = v_j - v_i.
struct NeighborRel {
    Vec2 p;
    Vec2 v;
};

// Network-ready local observation of one robot. Lists are truncated to the
// caps keeping closest entries, ordered by (range, tie-break) as produced by
// observe(); raw_min_h is the min h over the *uncapped* in-range sets
// (+inf when nothing is in range).
struct Observation {
    Dynamics dynamics = Dynamics::single_integrator;
    Vec2 rel_goal_p;  // alpha_g-scaled position block of e^ii
    Vec2 rel_goal_v;  // double integrator: -v_i, unscaled
    std::vector<NeighborRel> neighbors;
    std::vector<Vec2> obstacles;  // closest-point offsets pbar
    double raw_min_h = 0.0;

    int goal_dim() const { return dynamics == Dynamics::double_integrator ? 4 : 2; }
    int neighbor_dim() const { return dynamics == Dynamics::double_integrator ? 4 : 2; }
    int encoded_size() const {
        return goal_dim() + neighbor_dim() * static_cast<int>(neighbors.size()) +
               2 * static_cast<int>(obstacles.size());
    }
};

// In-range robot indices (||p_ij|| <= r_sense, j != i, non-strict) and
// obstacle cells (closest point within r_sense), in index / cell order.
std::pair<std::vector<int>, std::vector<GridCell>> neighbor_sets(
    int i, std::span<const RobotState> states, const EnvInstance& env, double r_sense);

// Full observation: scaled relative goal, capped sorted lists, raw_min_h.
Observation observe(int i, std::span<const RobotState> states, const EnvInstance& env,
                    const SafetyParams& params, const ObsCaps& caps);

// Flat layout [rel_goal | neighbor blocks | obstacle blocks] in retained order.
std::vector<double> encode(const Observation& obs);

// Inverse of encode; raw_min_h is recomputed from the stored (capped) lists,
// which equals the original whenever the caps were >= 1.
Observation decode(std::span<const double> flat, int n_neighbors, int n_obstacles,
                   Dynamics dynamics, const SafetyParams& params);

}  // namespace mrnav
