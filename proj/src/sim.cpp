#include "mrnav/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "mrnav/errors.hpp"
#include "mrnav/parallel.hpp"

namespace mrnav {

LearnedPiPolicy::LearnedPiPolicy(PolicyWeights w, std::string name)
    : weights_(std::move(w)), name_(std::move(name)) {}

Vec2 barrier_linear_term(const Vec2& goal_error_p, const Vec2& v, const SafetyParams& params) {
    if (params.dynamics == Dynamics::double_integrator) {
        // K e = k_p (g_p - p) + k_v (0 - v); goals are at rest.
        return params.k_p * goal_error_p - params.k_v * v;
    }
    return params.k_p * goal_error_p;
}

Vec2 BarrierPiPolicy::eval(int robot, const Observation&, const RobotState& self,
                           const EnvInstance& env, const SafetyParams& params) {
    return barrier_linear_term(env.goals[robot].p - self.p, self.v, params);
}

RolloutResult rollout(const EnvInstance& env, PiPolicy& policy, const SafetyParams& params,
                      const ObsCaps& caps, const SimConfig& cfg, bool record_log) {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = env.robot_count();
    RolloutResult res;
    res.robots.resize(n);
    res.min_clearance = std::numeric_limits<double>::infinity();
    if (record_log) res.log.resize(n);

    std::vector<RobotState> states = env.starts;
    if (env.dynamics == Dynamics::single_integrator) {
        for (RobotState& s : states) s.v = {0.0, 0.0};
    }
    std::vector<Vec2> actions(n);
    std::vector<double> prev_unorm(n, 0.0);
    std::vector<double> alphas(n, 0.0), min_hs(n, 0.0);

    const int n_steps = static_cast<int>(std::llround(cfg.t_f / cfg.dt));
    int step = 0;
    for (; step <= n_steps; ++step) {
        const double t = step * cfg.dt;

        // Clearance / goal bookkeeping on the current joint state. A pair at
        // or inside r_safe (plus the singularity guard's sliver) is a hard
        // failure: record it and end the rollout before the barrier math
        // would be evaluated on a violated state.
        bool violated = false;
        for (int i = 0; i < n; ++i) {
            double clear_i = obstacle_clearance(states[i].p, env);
            for (int j = 0; j < n; ++j) {
                if (j != i) clear_i = std::min(clear_i, (states[j].p - states[i].p).norm());
            }
            res.min_clearance = std::min(res.min_clearance, clear_i);
            if (clear_i <= params.r_safe + kEpsilonDiv) {
                res.robots[i].collided = true;
                violated = true;
            }
            const bool at_goal = (env.goals[i].p - states[i].p).norm() < cfg.goal_tol &&
                                 (env.dynamics != Dynamics::double_integrator ||
                                  states[i].v.norm() < cfg.vel_tol);
            if (at_goal && res.robots[i].reach_time < 0.0) res.robots[i].reach_time = t;
        }
        if (violated) {
            res.duration = t;
            break;
        }

        bool all_done = true;
        for (int i = 0; i < n; ++i) {
            if (res.robots[i].reach_time < 0.0 || res.robots[i].collided) all_done = false;
        }

        // Observe all, act all.
        for (int i = 0; i < n; ++i) {
            const Observation obs = observe(i, states, env, params, caps);
            const Vec2 pi = policy.eval(i, obs, states[i], env, params);
            const SafetyEval sv = safe_control(obs, states[i], pi, params);
            actions[i] = blend(pi, sv, params, cfg.clamp_u_max);
            alphas[i] = sv.alpha;
            min_hs[i] = sv.min_h;
        }
        if (record_log) {
            for (int i = 0; i < n; ++i) {
                res.log[i].push_back({t, states[i], actions[i], alphas[i], min_hs[i]});
            }
        }
        // The executed control is zero-order-hold, so the exact effort
        // integral of one step is ||u_k|| dt (the step completed below).
        for (int i = 0; i < n; ++i) {
            if (step > 0) res.robots[i].effort += prev_unorm[i] * cfg.dt;
            prev_unorm[i] = actions[i].norm();
        }
        res.duration = t;
        if (all_done || step == n_steps) break;

        // Synchronous explicit-Euler advance.
        bool finite = true;
        for (int i = 0; i < n; ++i) {
            if (env.dynamics == Dynamics::double_integrator) {
                states[i].p += states[i].v * cfg.dt;
                states[i].v += actions[i] * cfg.dt;
            } else {
                states[i].p += actions[i] * cfg.dt;
            }
            finite = finite && states[i].p.finite() && states[i].v.finite();
        }
        if (!finite) {
            res.nonfinite_abort = true;
            break;
        }
    }

    for (int i = 0; i < n; ++i) {
        RobotOutcome& r = res.robots[i];
        r.success = r.reach_time >= 0.0 && !r.collided && !res.nonfinite_abort;
        if (r.success) {
            res.r_s += 1;
            res.r_p += r.effort;
        } else if (res.nonfinite_abort) {
            r.failure = "nonfinite";
        } else if (r.collided) {
            r.failure = "collision";
        } else {
            r.failure = "timeout";
        }
    }
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return res;
}

std::vector<bool> success_of(const RolloutResult& result, const EnvInstance& env,
                             const SafetyParams& params, double goal_tol, double vel_tol) {
    const int n = static_cast<int>(result.log.size());
    std::vector<bool> flags(n, false);
    for (int i = 0; i < n; ++i) {
        bool reached = false;
        bool collided = false;
        for (const StepLog& s : result.log[i]) {
            const bool at_goal = (env.goals[i].p - s.state.p).norm() < goal_tol &&
                                 (env.dynamics != Dynamics::double_integrator ||
                                  s.state.v.norm() < vel_tol);
            reached = reached || at_goal;
            // min_h <= 0 is exactly a clearance <= r_safe against the
            // nearest sensed object; re-derive the rest from states.
            if (s.min_h <= 0.0) collided = true;
        }
        for (size_t k = 0; k < result.log[i].size(); ++k) {
            const Vec2 p = result.log[i][k].state.p;
            if (obstacle_clearance(p, env) <= params.r_safe) collided = true;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                if ((result.log[j][k].state.p - p).norm() <= params.r_safe) collided = true;
            }
        }
        flags[i] = reached && !collided && !result.nonfinite_abort;
    }
    return flags;
}

double effort_of(const RolloutResult& result, const std::vector<bool>& success) {
    double total = 0.0;
    for (size_t i = 0; i < result.log.size(); ++i) {
        if (i < success.size() && !success[i]) continue;
        const auto& log = result.log[i];
        for (size_t k = 1; k < log.size(); ++k) {
            total += log[k - 1].u.norm() * (log[k].t - log[k - 1].t);
        }
    }
    return total;
}

void write_trajectory_csv(const RolloutResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "# mrnav-csv v1\n";
    out << "robot,t,x,y,vx,vy,ux,uy,alpha,min_h\n";
    char buf[360];
    for (size_t i = 0; i < result.log.size(); ++i) {
        for (const StepLog& s : result.log[i]) {
            std::snprintf(buf, sizeof(buf),
                          "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, s.t,
                          s.state.p.x, s.state.p.y, s.state.v.x, s.state.v.y, s.u.x, s.u.y,
                          s.alpha, s.min_h);
            out << buf;
        }
    }
}

std::vector<EvalRow> evaluate_suite(std::span<const EvalInstance> instances,
                                    std::span<PiPolicy* const> policies,
                                    const SafetyParams& params, const ObsCaps& caps,
                                    const SimConfig& cfg, int jobs) {
    const int n_slots = static_cast<int>(instances.size() * policies.size());
    std::vector<EvalRow> rows(n_slots);
    parallel_for(jobs, n_slots, [&](int slot) {
        const int pi = slot / static_cast<int>(instances.size());
        const int ii = slot % static_cast<int>(instances.size());
        const EvalInstance& inst = instances[ii];
        const RolloutResult r = rollout(inst.env, *policies[pi], params, caps, cfg);
        rows[slot] = EvalRow{policies[pi]->name(), inst.id, inst.env.robot_count(),
                             inst.obstacle_frac, r.r_s, r.r_p, r.wall_ms};
    });
    return rows;
}

void write_metrics_csv(std::span<const EvalRow> rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "# mrnav-csv v1\n";
    out << "policy,instance,n_robots,obstacle_frac,r_s,r_p,wall_ms\n";
    char buf[240];
    for (const EvalRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.17g,%d,%.17g,%.3f\n", r.policy.c_str(),
                      r.instance, r.n_robots, r.obstacle_frac, r.r_s, r.r_p, r.wall_ms);
        out << buf;
    }
}

void write_summary_csv(std::span<const EvalRow> rows, const std::string& path) {
    struct Agg {
        int robots_total = 0;
        int robots_ok = 0;
        double effort = 0.0;
        int solved = 0;
        int cases = 0;
    };
    std::map<std::tuple<std::string, int, double>, Agg> agg;
    for (const EvalRow& r : rows) {
        Agg& a = agg[{r.policy, r.n_robots, r.obstacle_frac}];
        a.robots_total += r.n_robots;
        a.robots_ok += r.r_s;
        a.effort += r.r_p;
        a.solved += (r.r_s == r.n_robots) ? 1 : 0;
        a.cases += 1;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "# mrnav-csv v1\n";
    out << "policy,n_robots,obstacle_frac,cases,success_fraction,solved_fraction,mean_r_p\n";
    char buf[240];
    for (const auto& [key, a] : agg) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%d,%.17g,%.17g,%.17g\n",
                      std::get<0>(key).c_str(), std::get<1>(key), std::get<2>(key), a.cases,
                      a.robots_total ? static_cast<double>(a.robots_ok) / a.robots_total : 0.0,
                      a.cases ? static_cast<double>(a.solved) / a.cases : 0.0,
                      a.cases ? a.effort / a.cases : 0.0);
        out << buf;
    }
}

}  // namespace mrnav
