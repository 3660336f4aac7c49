#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrnav/vec2.hpp"

namespace mrnav {

enum class Dynamics { single_integrator = 1, double_integrator = 2 };

const char* to_string(Dynamics d);
Dynamics dynamics_from_string(const std::string& s);

// Kinematic state of one robot. v is meaningful only under double-integrator
// dynamics and stays zero otherwise.
struct RobotState {
    Vec2 p;
    Vec2 v;
};

// Unit obstacle cell [ix, ix+1] x [iy, iy+1] in meters.
struct GridCell {
    int ix = 0;
    int iy = 0;
    bool operator==(const GridCell&) const = default;
    bool operator<(const GridCell& o) const { return ix != o.ix ? ix < o.ix : iy < o.iy; }
};

struct Bounds {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
    bool contains(const Vec2& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

struct EnvInstance {
    Bounds bounds;
    std::vector<GridCell> obstacles;
    std::vector<RobotState> starts;
    std::vector<RobotState> goals;
    Dynamics dynamics = Dynamics::single_integrator;

    int robot_count() const { return static_cast<int>(starts.size()); }
};

// Point of the cell (a unit square) nearest to p: componentwise clamp.
// p inside the square returns p itself.
Vec2 closest_point_on_obstacle(const Vec2& p, const GridCell& cell);

// Distance from p to the nearest obstacle cell; +inf when there are none.
double obstacle_clearance(const Vec2& p, const EnvInstance& env);

// Smallest robot-robot center distance and robot-obstacle closest-point
// distance over the joint state; +inf for a single unobstructed robot.
double min_clearance(std::span<const RobotState> states, const EnvInstance& env);

// True iff every clearance is strictly above r_safe.
bool collision_free(std::span<const RobotState> states, const EnvInstance& env, double r_safe);

// Random instance on [0, side]^2: floor(obstacle_fraction * side^2) distinct
// cells sampled uniformly, then starts/goals rejection-sampled so that every
// pair of objects is at least `spacing` apart (spacing = r_safe + delta_r of
// the run). Deterministic per seed. Throws InfeasibleInstanceError after
// 100*n_robots failed placement attempts.
EnvInstance make_random_env(int n_robots, double obstacle_fraction, int side, uint64_t seed,
                            double spacing = 0.2,
                            Dynamics dynamics = Dynamics::single_integrator);

// JSON env file: keys `bounds` [xmin,ymin,xmax,ymax], `obstacles` [[ix,iy],..],
// `starts`/`goals` [[x,y]] or [[x,y,vx,vy]], `dynamics` "single"|"double".
std::string env_to_json(const EnvInstance& env);
EnvInstance env_from_json(const std::string& text);
void save_env(const EnvInstance& env, const std::string& path);
EnvInstance load_env(const std::string& path);

}  // namespace mrnav
