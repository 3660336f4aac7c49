#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrnav/errors.hpp"
#include "mrnav/expert.hpp"
#include "mrnav/observation.hpp"
#include "mrnav/policy.hpp"
#include "mrnav/rng.hpp"
#include "mrnav/safety.hpp"
#include "mrnav/sim.hpp"
#include "mrnav/training.hpp"
#include "mrnav/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mrnav;

namespace {

// ---------------------------------------------------------------------------
// shared option plumbing

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    std::string dynamics = "single";

    // safety / observation / sim knobs (defaults resolved per dynamics kind)
    double r_sense = 3.0, r_safe = 0.15, delta_r = 0.05;
    double k_p = 1.0, k_v = 2.0, k_c = 0.0, epsilon = 0.01;
    double pi_max = -1.0, u_max = -1.0;  // <0: use per-dynamics default
    int max_neighbors = 6, max_obstacles = 6;
    double dt = 0.01, t_f = 60.0, goal_tol = 0.05, vel_tol = 0.05;
    bool clamp_u_max = false;

    SafetyParams safety() const {
        SafetyParams p = SafetyParams::defaults_for(dynamics_from_string(dynamics));
        p.r_sense = r_sense;
        p.r_safe = r_safe;
        p.delta_r = delta_r;
        p.k_p = k_p;
        p.k_v = k_v;
        p.k_c = k_c;
        p.epsilon = epsilon;
        if (pi_max > 0.0) p.pi_max = pi_max;
        if (u_max > 0.0) p.u_max = u_max;
        return p;
    }
    ObsCaps caps() const { return {max_neighbors, max_obstacles}; }
    SimConfig sim() const { return {dt, t_f, goal_tol, vel_tol, clamp_u_max}; }
};

void add_common(CLI::App* cmd, CommonOpts& c, bool with_sim = true) {
    cmd->add_option("--config", c.config_path,
                    "run-config JSON; values in it override flags");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--jobs", c.jobs, "worker threads (1 = bit-reproducible)");
    cmd->add_option("--dynamics", c.dynamics, "single|double");
    cmd->add_option("--r-sense-m", c.r_sense, "observation radius [m]");
    cmd->add_option("--r-safe-m", c.r_safe, "collision radius [m]");
    cmd->add_option("--delta-r-m", c.delta_r, "boundary-layer width [m]");
    cmd->add_option("--k-p", c.k_p, "barrier/goal position gain");
    cmd->add_option("--k-v", c.k_v, "velocity gain (double integrator)");
    cmd->add_option("--k-c", c.k_c, "decrease-rate gain");
    cmd->add_option("--epsilon", c.epsilon, "discrete-time alpha margin");
    cmd->add_option("--pi-max", c.pi_max, "learned-action norm bound");
    cmd->add_option("--u-max", c.u_max, "action bound");
    cmd->add_option("--max-neighbors", c.max_neighbors, "observation neighbor cap");
    cmd->add_option("--max-obstacles", c.max_obstacles, "observation obstacle cap");
    if (with_sim) {
        cmd->add_option("--dt", c.dt, "integrator step [s]");
        cmd->add_option("--t-f", c.t_f, "rollout horizon [s]");
        cmd->add_option("--goal-tol", c.goal_tol, "success position tolerance [m]");
        cmd->add_option("--vel-tol", c.vel_tol, "success velocity tolerance [m/s]");
        cmd->add_flag("--clamp-u-max", c.clamp_u_max,
                      "rescale u onto the u_max ball (voids the safety guarantee)");
    }
}

json common_to_json(const CommonOpts& c) {
    return json{{"out", c.out_dir},
                {"jobs", c.jobs},
                {"dynamics", c.dynamics},
                {"r_sense", c.r_sense},
                {"r_safe", c.r_safe},
                {"delta_r", c.delta_r},
                {"k_p", c.k_p},
                {"k_v", c.k_v},
                {"k_c", c.k_c},
                {"epsilon", c.epsilon},
                {"pi_max", c.pi_max},
                {"u_max", c.u_max},
                {"max_neighbors", c.max_neighbors},
                {"max_obstacles", c.max_obstacles},
                {"dt", c.dt},
                {"t_f", c.t_f},
                {"goal_tol", c.goal_tol},
                {"vel_tol", c.vel_tol},
                {"clamp_u_max", c.clamp_u_max}};
}

template <class T>
void maybe(const json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

void common_from_json(const json& j, CommonOpts& c) {
    maybe(j, "out", c.out_dir);
    maybe(j, "jobs", c.jobs);
    maybe(j, "dynamics", c.dynamics);
    maybe(j, "r_sense", c.r_sense);
    maybe(j, "r_safe", c.r_safe);
    maybe(j, "delta_r", c.delta_r);
    maybe(j, "k_p", c.k_p);
    maybe(j, "k_v", c.k_v);
    maybe(j, "k_c", c.k_c);
    maybe(j, "epsilon", c.epsilon);
    maybe(j, "pi_max", c.pi_max);
    maybe(j, "u_max", c.u_max);
    maybe(j, "max_neighbors", c.max_neighbors);
    maybe(j, "max_obstacles", c.max_obstacles);
    maybe(j, "dt", c.dt);
    maybe(j, "t_f", c.t_f);
    maybe(j, "goal_tol", c.goal_tol);
    maybe(j, "vel_tol", c.vel_tol);
    maybe(j, "clamp_u_max", c.clamp_u_max);
}

json load_config_file(const std::string& path, const std::string& expect_command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str());
    if (j.contains("command") && j.at("command").get<std::string>() != expect_command) {
        throw FormatError("config file is for command '" + j.at("command").get<std::string>() +
                          "', not '" + expect_command + "'");
    }
    return j;
}

void write_run_config(const json& j, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "run_config.json", std::ios::binary);
    if (!out) throw FormatError("cannot write run_config.json in " + out_dir);
    out << j.dump(2) << "\n";
}

// "barrier" or "name:weights.json"
std::unique_ptr<PiPolicy> make_policy(const std::string& desc, const SafetyParams& params) {
    if (desc == "barrier") return std::make_unique<BarrierPiPolicy>();
    const auto colon = desc.find(':');
    const std::string name = colon == std::string::npos ? "learned" : desc.substr(0, colon);
    const std::string path = colon == std::string::npos ? desc : desc.substr(colon + 1);
    PolicyWeights w = load_weights(path);
    if (w.dynamics != params.dynamics) {
        throw FormatError("policy '" + name + "': weights are for " +
                          std::string(to_string(w.dynamics)) + " dynamics, run uses " +
                          to_string(params.dynamics));
    }
    return std::make_unique<LearnedPiPolicy>(std::move(w), name);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<std::string> parse_str_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_gen_env(CommonOpts& c, int& robots, double& obst, int& side, uint64_t& seed) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "gen-env");
        common_from_json(j, c);
        maybe(j, "robots", robots);
        maybe(j, "obst", obst);
        maybe(j, "side", side);
        maybe(j, "seed", seed);
    }
    const SafetyParams sp = c.safety();
    const EnvInstance env = make_random_env(robots, obst, side, seed, sp.r_safe + sp.delta_r,
                                            sp.dynamics);
    json j = common_to_json(c);
    j["command"] = "gen-env";
    j["robots"] = robots;
    j["obst"] = obst;
    j["side"] = side;
    j["seed"] = seed;
    write_run_config(j, c.out_dir);
    save_env(env, (fs::path(c.out_dir) / "env.json").string());
    std::printf("gen-env: wrote %s (%d robots, %zu obstacle cells)\n",
                (fs::path(c.out_dir) / "env.json").c_str(), env.robot_count(),
                env.obstacles.size());
    return 0;
}

int cmd_plan(CommonOpts& c, std::string& env_path, double& dt_sample) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "plan");
        common_from_json(j, c);
        maybe(j, "env", env_path);
        maybe(j, "dt_sample", dt_sample);
    }
    if (env_path.empty()) throw std::invalid_argument("plan: --env is required");
    const EnvInstance env = load_env(env_path);
    c.dynamics = to_string(env.dynamics);
    const SafetyParams sp = c.safety();
    const Trajectory traj = plan_global(env, sp, dt_sample);

    json j = common_to_json(c);
    j["command"] = "plan";
    j["env"] = env_path;
    j["dt_sample"] = dt_sample;
    write_run_config(j, c.out_dir);

    std::ofstream out(fs::path(c.out_dir) / "expert_traj.csv", std::ios::binary);
    if (!out) throw FormatError("cannot write expert_traj.csv");
    out << "# mrnav-csv v1\n";
    out << "robot,t,x,y,vx,vy,ux,uy\n";
    char buf[280];
    for (size_t i = 0; i < traj.robots.size(); ++i) {
        for (const TrajSample& s : traj.robots[i]) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                          s.t, s.state.p.x, s.state.p.y, s.state.v.x, s.state.v.y, s.u.x, s.u.y);
            out << buf;
        }
    }
    std::printf("plan: %zu robots, duration %.2f s\n", traj.robots.size(), traj.duration);
    return 0;
}

int cmd_build_dataset(CommonOpts& c, std::string& robots_s, std::string& obst_s, int& per_case,
                      int& side, uint64_t& seed_base, double& dt_sample) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "build-dataset");
        common_from_json(j, c);
        maybe(j, "robots", robots_s);
        maybe(j, "obst", obst_s);
        maybe(j, "per_case", per_case);
        maybe(j, "side", side);
        maybe(j, "seed_base", seed_base);
        maybe(j, "dt_sample", dt_sample);
    }
    const SafetyParams sp = c.safety();
    DatasetSpec spec;
    spec.robot_counts = parse_int_list(robots_s);
    spec.obstacle_fractions = parse_double_list(obst_s);
    spec.per_case = per_case;
    spec.side = side;
    spec.seed_base = seed_base;
    spec.dt_sample = dt_sample;
    const Dataset ds = build_demo_dataset(spec, sp, c.caps(), c.jobs);

    json j = common_to_json(c);
    j["command"] = "build-dataset";
    j["robots"] = robots_s;
    j["obst"] = obst_s;
    j["per_case"] = per_case;
    j["side"] = side;
    j["seed_base"] = seed_base;
    j["dt_sample"] = dt_sample;
    write_run_config(j, c.out_dir);
    write_dataset(ds, (fs::path(c.out_dir) / "dataset.bin").string());
    std::printf("build-dataset: %zu records -> %s\n", ds.records.size(),
                (fs::path(c.out_dir) / "dataset.bin").c_str());
    return 0;
}

int cmd_train(CommonOpts& c, std::string& dataset_path, std::string& mode_s, int& batch_size,
              int& epochs, double& lr0, int& patience, double& factor, uint64_t& seed,
              double& val_frac, int& hidden, int& embed) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "train");
        common_from_json(j, c);
        maybe(j, "dataset", dataset_path);
        maybe(j, "mode", mode_s);
        maybe(j, "batch_size", batch_size);
        maybe(j, "epochs", epochs);
        maybe(j, "lr0", lr0);
        maybe(j, "patience", patience);
        maybe(j, "factor", factor);
        maybe(j, "seed", seed);
        maybe(j, "val_frac", val_frac);
        maybe(j, "hidden", hidden);
        maybe(j, "embed", embed);
    }
    if (dataset_path.empty()) throw std::invalid_argument("train: --dataset is required");
    SafetyParams sp = c.safety();
    const Dataset ds = read_dataset(dataset_path, sp);
    if (ds.dynamics != sp.dynamics) {
        c.dynamics = to_string(ds.dynamics);
        sp = c.safety();
    }
    TrainConfig tc;
    tc.mode = train_mode_from_string(mode_s);
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.lr0 = lr0;
    tc.plateau_patience = patience;
    tc.plateau_factor = factor;
    tc.seed = seed;
    tc.validation_fraction = val_frac;

    const PolicyWeights init = init_weights(mix_seed(seed, 0x1417), ds.dynamics,
                                            PolicyShape{hidden, embed});
    const TrainResult res = train(ds, tc, sp, init);

    json j = common_to_json(c);
    j["command"] = "train";
    j["dataset"] = dataset_path;
    j["mode"] = mode_s;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["lr0"] = lr0;
    j["patience"] = patience;
    j["factor"] = factor;
    j["seed"] = seed;
    j["val_frac"] = val_frac;
    j["hidden"] = hidden;
    j["embed"] = embed;
    write_run_config(j, c.out_dir);
    save_weights(res.weights, (fs::path(c.out_dir) / "weights.json").string());
    write_loss_history(res.history, (fs::path(c.out_dir) / "loss.csv").string());
    std::printf("train: best val loss %.6g after %zu epochs -> %s\n", res.best_val_loss,
                res.history.size(), (fs::path(c.out_dir) / "weights.json").c_str());
    return 0;
}

int cmd_rollout(CommonOpts& c, std::string& env_path, std::string& policy_s) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "rollout");
        common_from_json(j, c);
        maybe(j, "env", env_path);
        maybe(j, "policy", policy_s);
    }
    if (env_path.empty()) throw std::invalid_argument("rollout: --env is required");
    const EnvInstance env = load_env(env_path);
    c.dynamics = to_string(env.dynamics);
    const SafetyParams sp = c.safety();
    if (c.clamp_u_max) {
        std::fprintf(stderr,
                     "warning: --clamp-u-max voids the formal safety guarantee of the blend\n");
    }
    auto policy = make_policy(policy_s, sp);
    const RolloutResult res = rollout(env, *policy, sp, c.caps(), c.sim(), true);

    json j = common_to_json(c);
    j["command"] = "rollout";
    j["env"] = env_path;
    j["policy"] = policy_s;
    write_run_config(j, c.out_dir);
    write_trajectory_csv(res, (fs::path(c.out_dir) / "traj.csv").string());
    const EvalRow row{policy->name(), 0, env.robot_count(),
                      env.robot_count() ? static_cast<double>(env.obstacles.size()) /
                                              ((env.bounds.xmax - env.bounds.xmin) *
                                               (env.bounds.ymax - env.bounds.ymin))
                                        : 0.0,
                      res.r_s, res.r_p, res.wall_ms};
    write_metrics_csv({&row, 1}, (fs::path(c.out_dir) / "metrics.csv").string());
    std::printf("rollout: r_s=%d/%d r_p=%.3f min_clearance=%.4f duration=%.2f s\n", res.r_s,
                env.robot_count(), res.r_p, res.min_clearance, res.duration);
    return 0;
}

int cmd_eval(CommonOpts& c, std::string& policies_s, std::string& robots_s, std::string& obst_s,
             int& per_case, int& side, uint64_t& seed_base) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "eval");
        common_from_json(j, c);
        maybe(j, "policies", policies_s);
        maybe(j, "robots", robots_s);
        maybe(j, "obst", obst_s);
        maybe(j, "per_case", per_case);
        maybe(j, "side", side);
        maybe(j, "seed_base", seed_base);
    }
    const SafetyParams sp = c.safety();

    std::vector<std::unique_ptr<PiPolicy>> policies;
    for (const std::string& d : parse_str_list(policies_s)) policies.push_back(make_policy(d, sp));
    std::vector<PiPolicy*> policy_ptrs;
    for (auto& p : policies) policy_ptrs.push_back(p.get());

    std::vector<EvalInstance> instances;
    int id = 0;
    uint64_t stream = 0;
    for (int n : parse_int_list(robots_s)) {
        for (double f : parse_double_list(obst_s)) {
            for (int kcase = 0; kcase < per_case; ++kcase) {
                ++stream;
                for (uint64_t attempt = 0;; ++attempt) {
                    if (attempt > 50) {
                        throw InfeasibleInstanceError("eval: could not sample a feasible instance");
                    }
                    try {
                        EnvInstance env =
                            make_random_env(n, f, side, mix_seed(seed_base, stream * 64 + attempt),
                                            sp.r_safe + sp.delta_r, sp.dynamics);
                        instances.push_back({std::move(env), id++, f});
                        break;
                    } catch (const InfeasibleInstanceError&) {
                    }
                }
            }
        }
    }

    const std::vector<EvalRow> rows =
        evaluate_suite(instances, policy_ptrs, sp, c.caps(), c.sim(), c.jobs);

    json j = common_to_json(c);
    j["command"] = "eval";
    j["policies"] = policies_s;
    j["robots"] = robots_s;
    j["obst"] = obst_s;
    j["per_case"] = per_case;
    j["side"] = side;
    j["seed_base"] = seed_base;
    write_run_config(j, c.out_dir);
    write_metrics_csv(rows, (fs::path(c.out_dir) / "metrics.csv").string());
    write_summary_csv(rows, (fs::path(c.out_dir) / "summary.csv").string());
    std::printf("eval: %zu instances x %zu policies -> %s\n", instances.size(), policies.size(),
                (fs::path(c.out_dir) / "metrics.csv").c_str());
    return 0;
}

int cmd_plot_field(CommonOpts& c, std::string& env_path, std::string& policy_s, int& grid,
                   int& robot) {
    if (!c.config_path.empty()) {
        const json j = load_config_file(c.config_path, "plot-field");
        common_from_json(j, c);
        maybe(j, "env", env_path);
        maybe(j, "policy", policy_s);
        maybe(j, "grid", grid);
        maybe(j, "robot", robot);
    }
    if (env_path.empty()) throw std::invalid_argument("plot-field: --env is required");
    const EnvInstance env = load_env(env_path);
    c.dynamics = to_string(env.dynamics);
    const SafetyParams sp = c.safety();
    auto policy = make_policy(policy_s, sp);
    if (robot < 0 || robot >= env.robot_count()) {
        throw std::invalid_argument("plot-field: robot index out of range");
    }

    // Single virtual robot carrying the chosen robot's goal; obstacles from
    // the env; all other robots absent.
    EnvInstance solo = env;
    solo.starts = {env.starts[robot]};
    solo.goals = {env.goals[robot]};

    json j = common_to_json(c);
    j["command"] = "plot-field";
    j["env"] = env_path;
    j["policy"] = policy_s;
    j["grid"] = grid;
    j["robot"] = robot;
    write_run_config(j, c.out_dir);

    std::ofstream out(fs::path(c.out_dir) / "field.csv", std::ios::binary);
    if (!out) throw FormatError("cannot write field.csv");
    out << "# mrnav-csv v1\n";
    out << "x,y,ux,uy,blocked\n";
    char buf[200];
    for (int gy = 0; gy < grid; ++gy) {
        for (int gx = 0; gx < grid; ++gx) {
            const double fx = grid > 1 ? static_cast<double>(gx) / (grid - 1) : 0.5;
            const double fy = grid > 1 ? static_cast<double>(gy) / (grid - 1) : 0.5;
            const Vec2 p{solo.bounds.xmin + fx * (solo.bounds.xmax - solo.bounds.xmin),
                         solo.bounds.ymin + fy * (solo.bounds.ymax - solo.bounds.ymin)};
            const RobotState state{p, {0.0, 0.0}};
            std::vector<RobotState> states{state};
            int blocked = 0;
            Vec2 u{std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN()};
            try {
                const Observation obs = observe(0, states, solo, sp, c.caps());
                const Vec2 pi = policy->eval(0, obs, state, solo, sp);
                const SafetyEval sv = safe_control(obs, state, pi, sp);
                u = blend(pi, sv, sp, c.clamp_u_max);
            } catch (const SafetyDomainError&) {
                blocked = 1;
            }
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n", p.x, p.y, u.x, u.y,
                          blocked);
            out << buf;
        }
    }
    std::printf("plot-field: %d x %d grid -> %s\n", grid, grid,
                (fs::path(c.out_dir) / "field.csv").c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decentralized multi-robot motion policies: expert demos, imitation training, "
                 "safe rollout"};
    app.require_subcommand(1);

    CommonOpts gen_c, plan_c, ds_c, train_c, roll_c, eval_c, field_c;

    // gen-env
    auto* gen = app.add_subcommand("gen-env", "sample a random environment instance");
    int gen_robots = 8;
    double gen_obst = 0.1;
    int gen_side = 8;
    uint64_t gen_seed = 0;
    add_common(gen, gen_c, false);
    gen->add_option("--robots", gen_robots, "number of robots");
    gen->add_option("--obst", gen_obst, "obstacle fraction of grid cells");
    gen->add_option("--side", gen_side, "workspace side length [m], integer");
    gen->add_option("--seed", gen_seed, "random seed");

    // plan
    auto* plan = app.add_subcommand("plan", "run the expert planner on an env file");
    std::string plan_env;
    double plan_dt_sample = 0.5;
    add_common(plan, plan_c, false);
    plan->add_option("--env", plan_env, "environment JSON");
    plan->add_option("--dt-sample", plan_dt_sample, "trajectory sample period [s]");

    // build-dataset
    auto* bds = app.add_subcommand("build-dataset", "plan demos and write the dataset file");
    std::string bds_robots = "4,8", bds_obst = "0.1";
    int bds_per_case = 10, bds_side = 8;
    uint64_t bds_seed = 0;
    double bds_dt_sample = 0.5;
    add_common(bds, ds_c, false);
    bds->add_option("--robots", bds_robots, "comma list of robot counts");
    bds->add_option("--obst", bds_obst, "comma list of obstacle fractions");
    bds->add_option("--per-case", bds_per_case, "instances per (robots, fraction) pair");
    bds->add_option("--side", bds_side, "workspace side [m]");
    bds->add_option("--seed-base", bds_seed, "base seed");
    bds->add_option("--dt-sample", bds_dt_sample, "demo sample period [s]");

    // train
    auto* tr = app.add_subcommand("train", "imitation-train a policy from a dataset");
    std::string tr_dataset, tr_mode = "end_to_end";
    int tr_batch = 4096, tr_epochs = 100, tr_patience = 10, tr_hidden = 64, tr_embed = 16;
    double tr_lr0 = 1e-3, tr_factor = 0.5, tr_valfrac = 0.1;
    uint64_t tr_seed = 0;
    add_common(tr, train_c, false);
    tr->add_option("--dataset", tr_dataset, "dataset file");
    tr->add_option("--mode", tr_mode, "end_to_end|two_stage");
    tr->add_option("--batch-size", tr_batch, "mini-batch size");
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--lr0", tr_lr0, "initial learning rate");
    tr->add_option("--patience", tr_patience, "plateau patience [epochs]");
    tr->add_option("--factor", tr_factor, "plateau decay factor");
    tr->add_option("--seed", tr_seed, "training seed (init + batching)");
    tr->add_option("--val-frac", tr_valfrac, "validation fraction");
    tr->add_option("--hidden", tr_hidden, "hidden layer width");
    tr->add_option("--embed", tr_embed, "set-embedding width");

    // rollout
    auto* ro = app.add_subcommand("rollout", "closed-loop rollout of a policy on an env");
    std::string ro_env, ro_policy = "barrier";
    add_common(ro, roll_c);
    ro->add_option("--env", ro_env, "environment JSON");
    ro->add_option("--policy", ro_policy, "barrier | name:weights.json");

    // eval
    auto* ev = app.add_subcommand("eval", "batch-evaluate policies over random instances");
    std::string ev_policies = "barrier", ev_robots = "2,4,8", ev_obst = "0.1,0.2";
    int ev_per_case = 10, ev_side = 8;
    uint64_t ev_seed = 0;
    add_common(ev, eval_c);
    ev->add_option("--policies", ev_policies, "comma list: barrier | name:weights.json");
    ev->add_option("--robots", ev_robots, "comma list of robot counts");
    ev->add_option("--obst", ev_obst, "comma list of obstacle fractions");
    ev->add_option("--per-case", ev_per_case, "instances per density bucket");
    ev->add_option("--side", ev_side, "workspace side [m]");
    ev->add_option("--seed-base", ev_seed, "base seed for instance sampling");

    // plot-field
    auto* pf = app.add_subcommand("plot-field", "controller vector field over the workspace");
    std::string pf_env, pf_policy = "barrier";
    int pf_grid = 32, pf_robot = 0;
    add_common(pf, field_c);
    pf->add_option("--env", pf_env, "environment JSON");
    pf->add_option("--policy", pf_policy, "barrier | name:weights.json");
    pf->add_option("--grid", pf_grid, "grid resolution per axis");
    pf->add_option("--robot", pf_robot, "whose goal the virtual robot pursues");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_env(gen_c, gen_robots, gen_obst, gen_side, gen_seed);
        if (plan->parsed()) return cmd_plan(plan_c, plan_env, plan_dt_sample);
        if (bds->parsed()) {
            return cmd_build_dataset(ds_c, bds_robots, bds_obst, bds_per_case, bds_side, bds_seed,
                                     bds_dt_sample);
        }
        if (tr->parsed()) {
            return cmd_train(train_c, tr_dataset, tr_mode, tr_batch, tr_epochs, tr_lr0,
                             tr_patience, tr_factor, tr_seed, tr_valfrac, tr_hidden, tr_embed);
        }
        if (ro->parsed()) return cmd_rollout(roll_c, ro_env, ro_policy);
        if (ev->parsed()) {
            return cmd_eval(eval_c, ev_policies, ev_robots, ev_obst, ev_per_case, ev_side,
                            ev_seed);
        }
        if (pf->parsed()) return cmd_plot_field(field_c, pf_env, pf_policy, pf_grid, pf_robot);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
