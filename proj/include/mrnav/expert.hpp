#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrnav/observation.hpp"
#include "mrnav/safety.hpp"
#include "mrnav/vec2.hpp"
#include "mrnav/world.hpp"

namespace mrnav {

struct TrajSample {
    double t = 0.0;
    RobotState state;
    Vec2 u;
};

// Per-robot samples on a shared uniform dt_sample grid covering [0, duration];
// robots that arrive early are parked at their goal with u = 0.
struct Trajectory {
    std::vector<std::vector<TrajSample>> robots;
    double dt_sample = 0.5;
    double duration = 0.0;
};

// Demonstration pair: a (capped, scaled) local observation and the expert
// action taken there.
struct DemoRecord {
    Observation obs;
    Vec2 action;
};

struct Dataset {
    Dynamics dynamics = Dynamics::single_integrator;
    std::vector<DemoRecord> records;
};

struct PlannerConfig {
    double grid_step = 0.25;      // lattice resolution [m]
    double step_time = 0.25;      // raw schedule timestep [s]
    double speed_fraction = 0.9;  // max speed (single) / accel (double) <= fraction * u_max
    double di_cruise_speed = 0.45;  // double-integrator cruise speed target [m/s]
    double static_margin = 0.01;  // extra obstacle clearance beyond r_safe + delta_r
    int max_steps = 600;          // schedule horizon per robot
    int node_budget = 400000;     // A* expansion budget per robot
    int relax_iterations = 80;    // elastic-band smoothing passes
};

// Prioritized space-time A* on the lattice (8-connected + wait), then one
// global time dilation so every robot's speed stays below
// speed_fraction*u_max (plus clamped cubic smoothing and an acceleration
// dilation for double-integrator runs). Throws UnsolvedInstanceError when a
// robot exhausts the node budget or the smoothed plan fails the oversampled
// collision check; throws std::invalid_argument when env violates the
// initial-spacing assumption.
Trajectory plan_global(const EnvInstance& env, const SafetyParams& params, double dt_sample = 0.5,
                       const PlannerConfig& cfg = {});

// One record per robot per sample time; post-arrival samples (u = 0) are kept.
std::vector<DemoRecord> extract_demos(const Trajectory& traj, const EnvInstance& env,
                                      const SafetyParams& params, const ObsCaps& caps);

// Dataset file, little-endian: magic "GLASDS01", u8 dynamics (1=single,
// 2=double), u32 record count, then per record u8 n_V, u8 n_Omega, rel_goal
// (2|4 f32), neighbor blocks (2|4 f32 each), obstacle blocks (2 f32 each),
// action (2 f32).
void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path, const SafetyParams& params);

struct DatasetSpec {
    std::vector<int> robot_counts;
    std::vector<double> obstacle_fractions;
    int per_case = 1;       // instances per (robots, fraction) pair
    int side = 8;
    uint64_t seed_base = 0;
    double dt_sample = 0.5;
};

// Plans per_case instances for every (robots, fraction) pair and concatenates
// the demonstrations. Unsolved/infeasible instances are resampled with fresh
// deterministic seeds, never force-included. Deterministic for fixed spec and
// params, independent of jobs.
Dataset build_demo_dataset(const DatasetSpec& spec, const SafetyParams& params,
                           const ObsCaps& caps, int jobs = 1);

}  // namespace mrnav
