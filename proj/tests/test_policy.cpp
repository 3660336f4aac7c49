#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrnav/errors.hpp"
#include "mrnav/policy.hpp"
#include "mrnav/rng.hpp"
#include "oracles.hpp"

using namespace mrnav;

namespace {

Observation random_obs(Rng& rng, const SafetyParams& sp, Dynamics dyn, int n_nbr, int n_obs) {
    return oracles::random_observation(rng, sp, n_nbr, n_obs, false, dyn);
}

// Mean squared error of u against a fixed target; the gradient-check loss.
double controller_loss(const Observation& obs, const RobotState& st, const PolicyWeights& w,
                       const SafetyParams& sp, const Vec2& target) {
    return (forward_controller(obs, st, w, sp).u - target).norm_sq() / 2.0;
}

}  // namespace

TEST_CASE("init_weights: determinism and the published layer table") {
    const PolicyWeights a = init_weights(9, Dynamics::single_integrator);
    const PolicyWeights b = init_weights(9, Dynamics::single_integrator);
    CHECK(flatten_params(a) == flatten_params(b));
    const PolicyWeights c = init_weights(10, Dynamics::single_integrator);
    CHECK(flatten_params(a) != flatten_params(c));

    CHECK(a.phi_obstacle.l1.in == 2);
    CHECK(a.phi_obstacle.l1.out == 64);
    CHECK(a.phi_obstacle.l2.out == 16);
    CHECK(a.rho_obstacle.l1.in == 16);
    CHECK(a.rho_obstacle.l2.out == 16);
    CHECK(a.phi_neighbor.l1.in == 2);
    CHECK(a.head.l1.in == 34);
    CHECK(a.head.l2.out == 2);

    const PolicyWeights d = init_weights(9, Dynamics::double_integrator);
    CHECK(d.phi_neighbor.l1.in == 4);
    CHECK(d.phi_obstacle.l1.in == 2);
    CHECK(d.head.l1.in == 36);
}

TEST_CASE("forward_pi: permutation invariance is bit-exact") {
    SafetyParams sp;
    Rng rng(31);
    for (Dynamics dyn : {Dynamics::single_integrator, Dynamics::double_integrator}) {
        const SafetyParams p = SafetyParams::defaults_for(dyn);
        const PolicyWeights w = init_weights(3, dyn);
        for (int k = 0; k < 100; ++k) {
            Observation obs = random_obs(rng, p, dyn, 5, 4);
            const Vec2 out = forward_pi(obs, w, p.pi_max);
            Observation shuffled = obs;
            rng.shuffle(shuffled.neighbors);
            rng.shuffle(shuffled.obstacles);
            const Vec2 out2 = forward_pi(shuffled, w, p.pi_max);
            CHECK(out.x == out2.x);
            CHECK(out.y == out2.y);
        }
    }
    (void)sp;
}

TEST_CASE("forward_pi: norm cap and empty-set behaviour") {
    SafetyParams sp;
    Rng rng(32);
    PolicyWeights w = init_weights(4, Dynamics::single_integrator);
    // Scale the head output weights until the raw norm clearly exceeds pi_max.
    for (double& v : w.head.l2.w) v *= 50.0;
    for (double& v : w.head.l2.b) v *= 50.0;
    int capped_seen = 0;
    for (int k = 0; k < 50; ++k) {
        const Observation obs = random_obs(rng, sp, Dynamics::single_integrator, 3, 2);
        GradientTape tape;
        const Vec2 out = forward_pi(obs, w, sp.pi_max, &tape);
        CHECK(out.norm() <= sp.pi_max + 1e-12);
        if (tape.capped) {
            ++capped_seen;
            CHECK(out.norm() == doctest::Approx(sp.pi_max).epsilon(1e-12));
        }
    }
    CHECK(capped_seen > 0);

    // Empty sets: the output is a function of rel_goal alone.
    Observation e1;
    e1.dynamics = Dynamics::single_integrator;
    e1.rel_goal_p = {0.4, -0.2};
    e1.raw_min_h = std::numeric_limits<double>::infinity();
    Observation e2 = e1;
    e2.raw_min_h = 0.9;  // irrelevant to pi
    const PolicyWeights w2 = init_weights(4, Dynamics::single_integrator);
    CHECK(forward_pi(e1, w2, sp.pi_max) == forward_pi(e2, w2, sp.pi_max));
}

TEST_CASE("weights file round trip and error paths") {
    const PolicyWeights w = init_weights(77, Dynamics::double_integrator, {8, 4});
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "mrnav_test_w";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "w.json").string();
    save_weights(w, path);
    const PolicyWeights back = load_weights(path);
    CHECK(flatten_params(back) == flatten_params(w));
    CHECK(back.dynamics == Dynamics::double_integrator);

    SafetyParams sp = SafetyParams::defaults_for(Dynamics::double_integrator);
    Rng rng(5);
    const Observation obs = random_obs(rng, sp, Dynamics::double_integrator, 2, 2);
    CHECK(forward_pi(obs, w, sp.pi_max) == forward_pi(obs, back, sp.pi_max));

    // Truncated file.
    std::string text;
    {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    const std::string trunc_path = (dir / "trunc.json").string();
    std::ofstream(trunc_path) << text.substr(0, text.size() / 2);
    CHECK_THROWS_AS(load_weights(trunc_path), FormatError);

    // Tampered shape.
    std::string bad = text;
    const auto pos = bad.find("\"hidden\":8");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 10, "\"hidden\":9");
    const std::string bad_path = (dir / "bad.json").string();
    std::ofstream(bad_path) << bad;
    CHECK_THROWS_AS(load_weights(bad_path), FormatError);
}

TEST_CASE("controller jacobian on the safe branch is (1-eps) times the pi jacobian") {
    Rng rng(71);
    for (Dynamics dyn : {Dynamics::single_integrator, Dynamics::double_integrator}) {
        SafetyParams sp = SafetyParams::defaults_for(dyn);
        const PolicyWeights w = init_weights(11, dyn, {6, 3});
        Observation obs = random_obs(rng, sp, dyn, 2, 1);
        obs.raw_min_h = 10.0;  // force the safe branch
        RobotState st;
        st.v = {0.2, -0.1};

        GradientTape tape;
        forward_controller(obs, st, w, sp, &tape);
        REQUIRE(tape.safety.branch == AlphaBranch::safe);

        const Vec2 seed{0.37, -1.11};
        PolicyWeights g_u = zeros_like(w);
        backward_controller(tape, w, sp, seed, g_u);
        PolicyWeights g_pi = zeros_like(w);
        backward_pi(tape, w, seed, g_pi);

        const std::vector<double> fu = flatten_params(g_u);
        const std::vector<double> fp = flatten_params(g_pi);
        for (size_t i = 0; i < fu.size(); ++i) {
            CHECK(fu[i] == doctest::Approx((1.0 - sp.epsilon) * fp[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("end-to-end gradients match finite differences (shrunken network)") {
    Rng rng(202);
    for (Dynamics dyn : {Dynamics::single_integrator, Dynamics::double_integrator}) {
        SafetyParams sp = SafetyParams::defaults_for(dyn);
        sp.delta_r = 0.8;  // wide boundary layer: exercise the adaptive branch
        double worst = 0.0;
        for (int s = 0; s < 10; ++s) {
            PolicyWeights w = init_weights(1000 + s, dyn, {4, 3});
            const Observation obs = oracles::random_observation(rng, sp, 2, 1, s % 2 == 0, dyn);
            RobotState st;
            st.v = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
            const Vec2 target{rng.uniform(-1, 1), rng.uniform(-1, 1)};

            GradientTape tape;
            const ControllerEval ev = forward_controller(obs, st, w, sp, &tape);
            PolicyWeights grads = zeros_like(w);
            backward_controller(tape, w, sp, ev.u - target, grads);
            const std::vector<double> analytic = flatten_params(grads);

            std::vector<double> flat = flatten_params(w);
            std::vector<double> fd(flat.size());
            const double h = 1e-6;
            for (size_t i = 0; i < flat.size(); ++i) {
                const double keep = flat[i];
                flat[i] = keep + h;
                unflatten_params(w, flat);
                const double lp = controller_loss(obs, st, w, sp, target);
                flat[i] = keep - h;
                unflatten_params(w, flat);
                const double lm = controller_loss(obs, st, w, sp, target);
                flat[i] = keep;
                fd[i] = (lp - lm) / (2.0 * h);
            }
            unflatten_params(w, flat);

            double num = 0.0, den = 0.0;
            for (size_t i = 0; i < fd.size(); ++i) {
                num += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
                den += fd[i] * fd[i];
            }
            worst = std::max(worst, std::sqrt(num / std::max(den, 1e-18)));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("controller evaluation stays within the real-time budget") {
    SafetyParams sp;
    Rng rng(88);
    const PolicyWeights w = init_weights(1, Dynamics::single_integrator);
    const Observation obs = random_obs(rng, sp, Dynamics::single_integrator, 6, 6);
    RobotState st;
    // Warm-up + a coarse smoke check; the acceptance suite measures properly.
    const auto t0 = std::chrono::steady_clock::now();
    Vec2 acc{0, 0};
    for (int k = 0; k < 1000; ++k) acc += forward_controller(obs, st, w, sp).u;
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms / 1000.0 < 1.0);
    CHECK(acc.finite());
}
