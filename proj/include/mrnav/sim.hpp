#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mrnav/observation.hpp"
#include "mrnav/policy.hpp"
#include "mrnav/safety.hpp"
#include "mrnav/world.hpp"

namespace mrnav {

// Desired-action source fed into the safety blend at every step. Implemented
// by the learned policy, the linear barrier baseline, and the adversarial
// test policies.
class PiPolicy {
public:
    virtual ~PiPolicy() = default;
    virtual std::string name() const = 0;
    virtual Vec2 eval(int robot, const Observation& obs, const RobotState& self,
                      const EnvInstance& env, const SafetyParams& params) = 0;
};

class LearnedPiPolicy : public PiPolicy {
public:
    LearnedPiPolicy(PolicyWeights w, std::string name);
    std::string name() const override { return name_; }
    Vec2 eval(int, const Observation& obs, const RobotState&, const EnvInstance&,
              const SafetyParams& params) override {
        return forward_pi(obs, weights_, params.pi_max);
    }
    const PolicyWeights& weights() const { return weights_; }

private:
    PolicyWeights weights_;
    std::string name_;
};

// Linear feedback to goal in place of the network: K e^ii with K = k_p I
// (single) or [k_p I, k_v I] (double), e^ii unscaled.
class BarrierPiPolicy : public PiPolicy {
public:
    std::string name() const override { return "barrier"; }
    Vec2 eval(int robot, const Observation&, const RobotState& self, const EnvInstance& env,
              const SafetyParams& params) override;
};

Vec2 barrier_linear_term(const Vec2& goal_error_p, const Vec2& v, const SafetyParams& params);

struct SimConfig {
    double dt = 0.01;
    double t_f = 60.0;
    double goal_tol = 0.05;   // [m]
    double vel_tol = 0.05;    // [m/s], double integrator success only
    bool clamp_u_max = false; // voids the safety guarantee; logged when used
};

struct StepLog {
    double t = 0.0;
    RobotState state;
    Vec2 u;
    double alpha = 0.0;
    double min_h = 0.0;
};

struct RobotOutcome {
    bool success = false;
    std::string failure;      // "", "collision", "timeout", "nonfinite"
    double reach_time = -1.0; // first time inside goal_tol (and vel_tol), -1 if never
    double effort = 0.0;      // trapezoidal integral of ||u||
    bool collided = false;
};

struct RolloutResult {
    std::vector<RobotOutcome> robots;
    int r_s = 0;
    double r_p = 0.0;          // effort summed over successful robots
    double min_clearance = 0.0;
    double duration = 0.0;     // simulated time (early exit possible)
    double wall_ms = 0.0;
    bool nonfinite_abort = false;
    std::vector<std::vector<StepLog>> log;  // per robot, when recording
};

// Synchronous closed loop: all robots observe, evaluate pi + safety blend,
// then every state advances one explicit-Euler step. Early exit once all
// robots have succeeded. Non-finite states abort the rollout and mark the
// remaining robots failed.
RolloutResult rollout(const EnvInstance& env, PiPolicy& policy, const SafetyParams& params,
                      const ObsCaps& caps, const SimConfig& cfg, bool record_log = false);

// Recomputed success flags from a recorded log (test/orifice view of the
// streaming bookkeeping inside rollout).
std::vector<bool> success_of(const RolloutResult& result, const EnvInstance& env,
                             const SafetyParams& params, double goal_tol, double vel_tol);

// Effort integral of the executed zero-order-hold control, summed over
// robots flagged successful.
double effort_of(const RolloutResult& result, const std::vector<bool>& success);

// robot,t,x,y,vx,vy,ux,uy,alpha,min_h
void write_trajectory_csv(const RolloutResult& result, const std::string& path);

struct EvalRow {
    std::string policy;
    int instance = 0;
    int n_robots = 0;
    double obstacle_frac = 0.0;
    int r_s = 0;
    double r_p = 0.0;
    double wall_ms = 0.0;
};

struct EvalInstance {
    EnvInstance env;
    int id = 0;
    double obstacle_frac = 0.0;
};

std::vector<EvalRow> evaluate_suite(std::span<const EvalInstance> instances,
                                    std::span<PiPolicy* const> policies,
                                    const SafetyParams& params, const ObsCaps& caps,
                                    const SimConfig& cfg, int jobs = 1);

// policy,instance,n_robots,obstacle_frac,r_s,r_p,wall_ms
void write_metrics_csv(std::span<const EvalRow> rows, const std::string& path);

// Per-(policy, n_robots, obstacle_frac) success fraction and mean effort.
void write_summary_csv(std::span<const EvalRow> rows, const std::string& path);

}  // namespace mrnav
