// Acceptance suite: one pass/fail line per criterion. Each criterion states
// its tolerance inline; the learning criteria (5-7) share one set of trained
// artifacts. Run with --criterion N [N ...] or --criterion all.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mrnav/errors.hpp"
#include "mrnav/expert.hpp"
#include "mrnav/observation.hpp"
#include "mrnav/parallel.hpp"
#include "mrnav/policy.hpp"
#include "mrnav/rng.hpp"
#include "mrnav/safety.hpp"
#include "mrnav/sim.hpp"
#include "mrnav/training.hpp"
#include "mrnav/world.hpp"

#include "../adversaries.hpp"
#include "../oracles.hpp"

using namespace mrnav;
namespace fs = std::filesystem;

namespace {

struct Line {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Line> g_lines;
std::string g_cli_path;
fs::path g_workdir = "acceptance_work";
int g_jobs = static_cast<int>(std::thread::hardware_concurrency());

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void report(int id, bool pass, const std::string& detail) {
    g_lines.push_back({id, pass, detail});
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: safety guarantee under adversarial/random pi

void criterion_1() {
    const double t0 = now_s();
    double worst_margin = std::numeric_limits<double>::infinity();
    long rollouts_done = 0;

    const auto fuzz_kind = [&](Dynamics dyn) {
        SafetyParams sp = SafetyParams::defaults_for(dyn);
        if (dyn == Dynamics::double_integrator) {
            // Discrete-time validity needs the boundary shell wide relative
            // to the momentum a bounded pi can build; the theorem holds for
            // any delta_r > 0.
            sp.delta_r = 1.0;
        }
        SimConfig cfg;
        cfg.dt = 0.01;
        cfg.t_f = dyn == Dynamics::double_integrator ? 5.0 : 8.0;
        cfg.clamp_u_max = false;
        const ObsCaps caps{64, 64};

        adversaries::ChaseNearest chase;
        adversaries::GoalRush rush;
        const int counts[3] = {2, 4, 8};
        const double fracs[3] = {0.0, 0.1, 0.2};
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> margins(500);
        parallel_for(g_jobs, 500, [&](int i) {
            const int n = counts[i % 3];
            const double f = fracs[(i / 3) % 3];
            EnvInstance env;
            for (uint64_t attempt = 0;; ++attempt) {
                try {
                    env = make_random_env(n, f, 8, mix_seed(4242, i * 100 + attempt),
                                          sp.r_safe + sp.delta_r, dyn);
                    break;
                } catch (const InfeasibleInstanceError&) {
                }
            }
            adversaries::RandomConstant rc(mix_seed(7, i));
            adversaries::RandomWalk rw(mix_seed(8, i), 100);
            PiPolicy* menu[4] = {&chase, &rc, &rw, &rush};
            PiPolicy& pol = *menu[i % 4];
            const RolloutResult res = rollout(env, pol, sp, caps, cfg);
            margins[i] = res.min_clearance;
        });
        for (double m : margins) worst = std::min(worst, m);
        rollouts_done += 500;
        return worst;
    };

    const double worst_si = fuzz_kind(Dynamics::single_integrator);
    const double worst_di = fuzz_kind(Dynamics::double_integrator);
    worst_margin = std::min(worst_si, worst_di);
    const double secs = now_s() - t0;
    const bool pass = worst_si > 0.15 && worst_di > 0.15 && secs < 300.0;
    report(1, pass,
           fmt("safety fuzz, %ld adversarial rollouts, dt=0.01, clamp off: min clearance "
               "%.4f m (single %.4f, double %.4f) vs r_safe 0.15; %.1f s (budget 300 s)",
               rollouts_done, worst_margin, worst_si, worst_di, secs));
}

// ---------------------------------------------------------------------------
// criterion 2: gradient correctness

void criterion_2() {
    const double t0 = now_s();
    Rng rng(20260810);
    SafetyParams sp;  // single-integrator defaults; h-math shared

    double worst_grad = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Observation o = oracles::random_observation(rng, sp, 1 + rng.uniform_int(0, 4),
                                                          rng.uniform_int(0, 3), false,
                                                          Dynamics::single_integrator);
        worst_grad = std::max(worst_grad,
                              oracles::rel_err(grad_psi(o, sp), oracles::fd_grad_psi(o, sp)));
    }

    double worst_ddt = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const Observation o = oracles::random_observation(rng, sp, 1 + rng.uniform_int(0, 3),
                                                          rng.uniform_int(0, 2), false,
                                                          Dynamics::single_integrator);
        const Vec2 v{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        worst_ddt = std::max(worst_ddt, oracles::rel_err(ddt_grad_psi(o, v, sp),
                                                         oracles::fd_ddt_grad_psi(o, v, sp)));
    }

    double worst_w = 0.0;
    for (Dynamics dyn : {Dynamics::single_integrator, Dynamics::double_integrator}) {
        SafetyParams p = SafetyParams::defaults_for(dyn);
        p.delta_r = 0.8;  // exercise the adaptive branch about half the time
        for (int s = 0; s < 100; ++s) {
            PolicyWeights w = init_weights(mix_seed(100, s), dyn, {4, 3});
            const Observation obs =
                oracles::random_observation(rng, p, 2, 1, s % 2 == 0, dyn);
            RobotState st;
            st.v = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
            const Vec2 target{rng.uniform(-1, 1), rng.uniform(-1, 1)};

            GradientTape tape;
            const ControllerEval ev = forward_controller(obs, st, w, p, &tape);
            PolicyWeights grads = zeros_like(w);
            backward_controller(tape, w, p, ev.u - target, grads);
            const std::vector<double> analytic = flatten_params(grads);

            std::vector<double> flat = flatten_params(w);
            const double h = 1e-6;
            double num = 0.0, den = 0.0;
            for (size_t i = 0; i < flat.size(); ++i) {
                const double keep = flat[i];
                auto loss_at = [&](double v) {
                    flat[i] = v;
                    unflatten_params(w, flat);
                    return (forward_controller(obs, st, w, p).u - target).norm_sq() / 2.0;
                };
                const double fd = (loss_at(keep + h) - loss_at(keep - h)) / (2.0 * h);
                flat[i] = keep;
                num += (analytic[i] - fd) * (analytic[i] - fd);
                den += fd * fd;
            }
            unflatten_params(w, flat);
            worst_w = std::max(worst_w, std::sqrt(num / std::max(den, 1e-18)));
        }
    }

    const double secs = now_s() - t0;
    const bool pass = worst_grad < 1e-6 && worst_ddt < 1e-5 && worst_w < 1e-4 && secs < 120.0;
    report(2, pass,
           fmt("gradients vs finite differences: grad_psi %.2e (<1e-6, 1e4 states), "
               "ddt_grad_psi %.2e (<1e-5), dLoss/dw %.2e (<1e-4, 100/dynamics); %.1f s "
               "(budget 120 s)",
               worst_grad, worst_ddt, worst_w, secs));
}

// ---------------------------------------------------------------------------
// criterion 3: boundary-layer decrease with k_c = 0.1

void criterion_3() {
    const double t0 = now_s();
    Rng rng(31);

    SafetyParams si;
    si.k_c = 0.1;
    double worst_si = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
        const Observation o = oracles::random_observation(rng, si, 1 + rng.uniform_int(0, 2),
                                                          rng.uniform_int(0, 1), true,
                                                          Dynamics::single_integrator);
        Vec2 pi{rng.normal(), rng.normal()};
        pi = pi * (si.pi_max / std::max(pi.norm(), 1e-12)) * rng.uniform01();
        const SafetyEval ev = safe_control_si(o, pi, si);
        const Vec2 u = blend(pi, ev, si);
        // 1e-9 headroom, read relative to the inequality's scale where the
        // barrier terms exceed O(1) (double roundoff dominates there).
        const double tol = 1e-9 * std::max(1.0, ev.alpha_denom);
        worst_si = std::max(worst_si, (ev.grad_psi.dot(u) + si.k_c * ev.grad_psi.norm_sq()) - tol);
    }

    SafetyParams di = SafetyParams::defaults_for(Dynamics::double_integrator);
    di.k_c = 0.1;
    double worst_di = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
        const Observation o = oracles::random_observation(rng, di, 1 + rng.uniform_int(0, 2),
                                                          rng.uniform_int(0, 1), true,
                                                          Dynamics::double_integrator);
        const Vec2 v{rng.normal(0, 0.5), rng.normal(0, 0.5)};
        Vec2 pi{rng.normal(), rng.normal()};
        pi = pi * (di.pi_max / std::max(pi.norm(), 1e-12)) * rng.uniform01();
        const SafetyEval ev = safe_control_di(o, v, pi, di);
        const Vec2 u = blend(pi, ev, di);
        const Vec2 w = v + di.k_p * ev.grad_psi;
        const double vdot = di.k_p * ev.grad_psi.dot(v) + w.dot(u + di.k_p * ev.ddt_grad_psi);
        const double tol = 1e-9 * std::max(1.0, ev.a1 + std::abs(ev.a2));
        worst_di = std::max(worst_di, (vdot + di.k_c * ev.lyap) - tol);
    }

    const double secs = now_s() - t0;
    const bool pass = worst_si <= 0.0 && worst_di <= 0.0 && secs < 60.0;
    report(3, pass,
           fmt("boundary-layer decrease at k_c=0.1 over 2x1e4 states: worst single-integrator "
               "excess %.2e, worst Lyapunov excess %.2e (both <= 0 after stated headroom); "
               "%.1f s (budget 60 s)",
               worst_si, worst_di, secs));
}

// ---------------------------------------------------------------------------
// criterion 4: deep-set permutation invariance, bit-exact

void criterion_4() {
    const double t0 = now_s();
    Rng rng(44);
    bool all_equal = true;
    for (Dynamics dyn : {Dynamics::single_integrator, Dynamics::double_integrator}) {
        const SafetyParams sp = SafetyParams::defaults_for(dyn);
        const PolicyWeights w = init_weights(mix_seed(4, dyn == Dynamics::single_integrator),
                                             dyn);
        for (int k = 0; k < 500; ++k) {
            Observation obs = oracles::random_observation(rng, sp, 1 + rng.uniform_int(0, 5),
                                                          rng.uniform_int(0, 6), false, dyn);
            const Vec2 a = forward_pi(obs, w, sp.pi_max);
            rng.shuffle(obs.neighbors);
            rng.shuffle(obs.obstacles);
            const Vec2 b = forward_pi(obs, w, sp.pi_max);
            all_equal = all_equal && std::memcmp(&a, &b, sizeof(Vec2)) == 0;
        }
    }
    const double secs = now_s() - t0;
    report(4, all_equal,
           fmt("deep-set outputs bit-identical under 1000 random permutations "
               "(both dynamics); %.1f s",
               secs));
}

// ---------------------------------------------------------------------------
// criteria 5-7: learning efficacy, effort ordering, loss scale

struct LearnResult {
    PolicyWeights weights;
    double best_val_loss;
};

LearnResult run_training(const Dataset& ds, TrainMode mode, const SafetyParams& sp,
                         uint64_t seed, const fs::path& out, int epochs) {
    TrainConfig cfg;
    cfg.mode = mode;
    cfg.batch_size = 256;
    cfg.epochs = epochs;
    cfg.lr0 = 1e-3;
    cfg.plateau_patience = 30;
    cfg.plateau_factor = 0.5;
    cfg.seed = seed;
    cfg.validation_fraction = 0.1;
    const PolicyWeights init = init_weights(mix_seed(seed, 0x1417), ds.dynamics);
    const TrainResult res = train(ds, cfg, sp, init);
    fs::create_directories(out);
    save_weights(res.weights, (out / (std::string(to_string(mode)) + "_weights.json")).string());
    write_loss_history(res.history, (out / (std::string(to_string(mode)) + "_loss.csv")).string());
    return {res.weights, res.best_val_loss};
}

void criteria_5_6_7() {
    const double t0 = now_s();
    const SafetyParams sp;  // single integrator defaults
    const ObsCaps caps;     // 6 / 6 per the deployment configuration
    const fs::path out = g_workdir / "learning";
    fs::create_directories(out);

    // Mixed 4- and 8-robot, 10% obstacles demonstration set (>= 2e5 records).
    DatasetSpec mixed;
    mixed.robot_counts = {4, 8};
    mixed.obstacle_fractions = {0.1};
    mixed.per_case = 420;
    mixed.seed_base = 1000;
    std::printf("  [5-7] building demonstration datasets...\n");
    std::fflush(stdout);
    const Dataset ds_mixed = build_demo_dataset(mixed, sp, caps, g_jobs);
    write_dataset(ds_mixed, (out / "mixed.bin").string());

    DatasetSpec four;
    four.robot_counts = {4};
    four.obstacle_fractions = {0.1};
    four.per_case = 700;
    four.seed_base = 2000;
    const Dataset ds_four = build_demo_dataset(four, sp, caps, g_jobs);

    std::printf("  [5-7] mixed records: %zu, 4-robot records: %zu\n", ds_mixed.records.size(),
                ds_four.records.size());
    std::fflush(stdout);

    std::printf("  [5-7] training end-to-end on the mixed set...\n");
    std::fflush(stdout);
    const LearnResult e2e = run_training(ds_mixed, TrainMode::end_to_end, sp, 11, out, 400);
    std::printf("  [5-7] training two-stage on the mixed set...\n");
    std::fflush(stdout);
    const LearnResult ts = run_training(ds_mixed, TrainMode::two_stage, sp, 11, out, 400);
    std::printf("  [5-7] training two-stage on the 4-robot set...\n");
    std::fflush(stdout);
    const LearnResult ts4 = run_training(ds_four, TrainMode::two_stage, sp, 12, out, 600);

    // Held-out 8-robot / 10% instances.
    std::vector<EvalInstance> instances;
    for (int c = 0; c < 50; ++c) {
        for (uint64_t attempt = 0;; ++attempt) {
            try {
                instances.push_back({make_random_env(8, 0.1, 8, mix_seed(9000, c * 64 + attempt),
                                                     sp.r_safe + sp.delta_r),
                                     c, 0.1});
                break;
            } catch (const InfeasibleInstanceError&) {
            }
        }
    }
    LearnedPiPolicy pol_e2e(e2e.weights, "end2end");
    LearnedPiPolicy pol_ts(ts.weights, "two_stage");
    BarrierPiPolicy pol_barrier;
    std::vector<PiPolicy*> pols{&pol_e2e, &pol_ts, &pol_barrier};
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_f = 100.0;
    std::printf("  [5-7] evaluating on 50 held-out 8-robot instances...\n");
    std::fflush(stdout);
    const std::vector<EvalRow> rows = evaluate_suite(instances, pols, sp, caps, cfg, g_jobs);
    write_metrics_csv(rows, (out / "metrics.csv").string());
    write_summary_csv(rows, (out / "summary.csv").string());

    const auto fraction = [&](const std::string& name) {
        int ok = 0, total = 0;
        for (const EvalRow& r : rows) {
            if (r.policy == name) {
                ok += r.r_s;
                total += r.n_robots;
            }
        }
        return static_cast<double>(ok) / total;
    };
    const double f_e2e = fraction("end2end");
    const double f_barrier = fraction("barrier");
    const double hours = (now_s() - t0) / 3600.0;
    const bool pass5 = ds_mixed.records.size() >= 200000 && f_e2e >= f_barrier + 0.10 &&
                       hours < 4.0;
    report(5, pass5,
           fmt("end-to-end trained on %zu records: held-out success %.3f vs barrier %.3f "
               "(needs >= +0.10); %.2f h (budget 4 h)",
               ds_mixed.records.size(), f_e2e, f_barrier, hours));

    // Criterion 6: effort ordering on instances solved by both variants.
    double sum_e2e = 0.0, sum_ts = 0.0;
    int both = 0;
    for (int c = 0; c < 50; ++c) {
        double rp_e2e = -1, rp_ts = -1;
        bool ok_e2e = false, ok_ts = false;
        for (const EvalRow& r : rows) {
            if (r.instance != c) continue;
            if (r.policy == "end2end") {
                ok_e2e = r.r_s == r.n_robots;
                rp_e2e = r.r_p;
            } else if (r.policy == "two_stage") {
                ok_ts = r.r_s == r.n_robots;
                rp_ts = r.r_p;
            }
        }
        if (ok_e2e && ok_ts) {
            sum_e2e += rp_e2e;
            sum_ts += rp_ts;
            ++both;
        }
    }
    const double ratio = both > 0 ? (sum_e2e / both) / (sum_ts / both) : 1e9;
    const bool pass6 = both > 0 && ratio <= 1.02;
    report(6, pass6,
           fmt("effort ordering on %d commonly-solved instances: mean r_p ratio "
               "end2end/two_stage = %.4f (needs <= 1.02)",
               both, ratio));

    // Criterion 7: two-stage validation RMSE on the easiest dataset.
    const double rmse = std::sqrt(ts4.best_val_loss);
    const bool pass7 = rmse < 0.05 * sp.u_max;
    report(7, pass7,
           fmt("two-stage on 4-robot/10%% data (%zu records): val RMSE %.4f = %.2f%% of "
               "u_max (needs < 5%%)",
               ds_four.records.size(), rmse, 100.0 * rmse / sp.u_max));
}

// ---------------------------------------------------------------------------
// criterion 8: real-time budget

void criterion_8() {
    const double t0 = now_s();
    SafetyParams sp;
    Rng rng(81);
    const PolicyWeights w = init_weights(808, Dynamics::single_integrator);
    const Observation obs =
        oracles::random_observation(rng, sp, 6, 6, false, Dynamics::single_integrator);
    RobotState st;
    // Warm-up.
    Vec2 sink;
    for (int k = 0; k < 100; ++k) sink += forward_controller(obs, st, w, sp).u;
    std::vector<double> us(10000);
    for (int k = 0; k < 10000; ++k) {
        const auto a = std::chrono::steady_clock::now();
        sink += forward_controller(obs, st, w, sp).u;
        const auto b = std::chrono::steady_clock::now();
        us[k] = std::chrono::duration<double, std::micro>(b - a).count();
    }
    std::nth_element(us.begin(), us.begin() + 5000, us.end());
    const double median_us = us[5000];
    const double secs = now_s() - t0;
    const bool pass = median_us < 1000.0 && sink.finite();
    report(8, pass,
           fmt("forward_controller with 6 neighbors + 6 obstacles: median %.1f us over 1e4 "
               "calls (needs < 1000 us); %.1f s",
               median_us, secs));
}

// ---------------------------------------------------------------------------
// criterion 9: byte-identical reruns from emitted run configs

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// run_config.json necessarily differs in its own "out" entry when the rerun
// lands in a fresh directory; mask that one field.
std::string mask_out_field(const std::string& text) {
    std::string s = text;
    const auto pos = s.find("\"out\": \"");
    if (pos != std::string::npos) {
        const auto end = s.find('"', pos + 8);
        if (end != std::string::npos) s.replace(pos + 8, end - (pos + 8), "<out>");
    }
    return s;
}

// metrics.csv carries a wall-clock column; strip it before comparing.
std::string strip_wall_ms(const std::string& csv) {
    std::stringstream out;
    std::stringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') {
            const auto pos = line.rfind(',');
            if (pos != std::string::npos) line = line.substr(0, pos);
        }
        out << line << "\n";
    }
    return out.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

void criterion_9() {
    const double t0 = now_s();
    if (g_cli_path.empty()) {
        report(9, false, "reproducibility: --cli <path to mrnav binary> not given");
        return;
    }
    const fs::path wd = g_workdir / "repro";
    fs::remove_all(wd);
    fs::create_directories(wd);
    const auto P = [&](const char* s) { return (wd / s).string(); };

    bool ok = true;
    std::string what = "reproducibility from emitted run configs (--jobs 1):";

    // mode 0: bytes, 1: strip the wall_ms column, 2: mask the config's out field
    auto compare = [&](const fs::path& a, const fs::path& b, int mode, const char* label) {
        auto view = [&](const fs::path& p) {
            const std::string raw = slurp(p);
            if (mode == 1) return strip_wall_ms(raw);
            if (mode == 2) return mask_out_field(raw);
            return raw;
        };
        const std::string sa = view(a);
        const std::string sb = view(b);
        const bool same = !sa.empty() && sa == sb;
        ok = ok && same;
        what += fmt(" %s=%s", label, same ? "ok" : "DIFF");
    };

    ok = ok && run_cli("gen-env --robots 4 --obst 0.1 --seed 7 --jobs 1 --out " + P("envA")) == 0;

    // The emitted config pins its own out directory; patch only that field so
    // the rerun lands in a fresh directory, then compare bytes.
    {
        std::string cfgtext = slurp(P("envA") + "/run_config.json");
        const std::string from = std::string("\"out\": \"") + P("envA") + "\"";
        const std::string to = std::string("\"out\": \"") + P("envC") + "\"";
        const auto pos = cfgtext.find(from);
        if (pos == std::string::npos) {
            ok = false;
        } else {
            cfgtext.replace(pos, from.size(), to);
            std::ofstream(P("cfg_env.json")) << cfgtext;
            ok = ok && run_cli("gen-env --config " + P("cfg_env.json")) == 0;
            compare(P("envA") + "/env.json", P("envC") + "/env.json", 0, "gen-env");
            compare(P("envA") + "/run_config.json", P("envC") + "/run_config.json", 2,
                    "gen-env-cfg");
        }
    }

    auto rerun_compare = [&](const std::string& base_args, const char* dirA, const char* dirC,
                             const std::vector<std::pair<const char*, int>>& files,
                             const char* label) {
        if (!ok) return;
        ok = ok && run_cli(base_args + " --jobs 1 --out " + P(dirA)) == 0;
        std::string cfgtext = slurp(P(dirA) + std::string("/run_config.json"));
        const std::string from = std::string("\"out\": \"") + P(dirA) + "\"";
        const std::string to = std::string("\"out\": \"") + P(dirC) + "\"";
        const auto pos = cfgtext.find(from);
        if (pos == std::string::npos) {
            ok = false;
            return;
        }
        cfgtext.replace(pos, from.size(), to);
        const std::string cfgfile = P(dirA) + std::string(".cfg.json");
        std::ofstream(cfgfile) << cfgtext;
        const std::string cmdname = base_args.substr(0, base_args.find(' '));
        ok = ok && run_cli(cmdname + " --config " + cfgfile) == 0;
        for (const auto& [f, mode] : files) {
            compare(P(dirA) + std::string("/") + f, P(dirC) + std::string("/") + f, mode,
                    (std::string(label) + ":" + f).c_str());
        }
    };

    rerun_compare("build-dataset --robots 2 --obst 0.1 --per-case 2 --seed-base 5", "dsA", "dsC",
                  {{"dataset.bin", 0}, {"run_config.json", 2}}, "build-dataset");
    rerun_compare("train --dataset " + P("dsA") + "/dataset.bin --mode two_stage --epochs 3 "
                  "--batch-size 64 --hidden 8 --embed 4 --seed 2",
                  "trA", "trC", {{"weights.json", 0}, {"loss.csv", 0}}, "train");
    rerun_compare("rollout --env " + P("envA") + "/env.json --policy barrier --t-f 5",
                  "roA", "roC", {{"traj.csv", 0}, {"metrics.csv", 1}}, "rollout");
    rerun_compare("eval --policies barrier --robots 2 --obst 0.1 --per-case 2 --seed-base 3 "
                  "--t-f 20",
                  "evA", "evC", {{"metrics.csv", 1}, {"summary.csv", 0}}, "eval");
    rerun_compare("plot-field --env " + P("envA") + "/env.json --policy barrier --grid 8",
                  "pfA", "pfC", {{"field.csv", 0}}, "plot-field");

    const double secs = now_s() - t0;
    report(9, ok, what + fmt("; %.1f s", secs));
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion") {
            for (int j = i + 1; j < argc && argv[j][0] != '-'; ++j, ++i) {
                if (std::string(argv[j]) == "all") {
                    which = {1, 2, 3, 4, 5, 8, 9};
                } else {
                    which.push_back(std::atoi(argv[j]));
                }
            }
        } else if (a == "--cli" && i + 1 < argc) {
            g_cli_path = argv[++i];
        } else if (a == "--workdir" && i + 1 < argc) {
            g_workdir = argv[++i];
        } else if (a == "--jobs" && i + 1 < argc) {
            g_jobs = std::atoi(argv[++i]);
        }
    }
    if (which.empty()) which = {1, 2, 3, 4, 5, 8, 9};
    fs::create_directories(g_workdir);

    bool ran_567 = false;
    for (int c : which) {
        switch (c) {
            case 1: criterion_1(); break;
            case 2: criterion_2(); break;
            case 3: criterion_3(); break;
            case 4: criterion_4(); break;
            case 5:
            case 6:
            case 7:
                if (!ran_567) {
                    criteria_5_6_7();
                    ran_567 = true;
                }
                break;
            case 8: criterion_8(); break;
            case 9: criterion_9(); break;
            default: std::fprintf(stderr, "unknown criterion %d\n", c); return 2;
        }
    }
    bool all = true;
    for (const Line& l : g_lines) all = all && l.pass;
    return all ? 0 : 1;
}
