#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrnav/observation.hpp"
#include "mrnav/safety.hpp"
#include "mrnav/vec2.hpp"
#include "mrnav/world.hpp"

namespace mrnav {

struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // row-major [out][in]
    std::vector<double> b;  // [out]
};

// Two dense layers with ReLU between, linear output.
struct FFNet {
    DenseLayer l1;
    DenseLayer l2;
};

struct PolicyShape {
    int hidden = 64;
    int embed = 16;
    bool operator==(const PolicyShape&) const = default;
};

// The five feed-forward blocks of the set policy:
//   phi_obstacle: 2 -> hidden -> embed        (per in-range obstacle offset)
//   rho_obstacle: embed -> hidden -> embed    (pooled obstacle code)
//   phi_neighbor: 2|4 -> hidden -> embed      (per in-range neighbor state)
//   rho_neighbor: embed -> hidden -> embed
//   head: 2*embed + goal_dim -> hidden -> 2   (34 or 36 wide at defaults)
struct PolicyWeights {
    Dynamics dynamics = Dynamics::single_integrator;
    PolicyShape shape;
    FFNet phi_obstacle;
    FFNet rho_obstacle;
    FFNet phi_neighbor;
    FFNet rho_neighbor;
    FFNet head;

    int neighbor_dim() const { return dynamics == Dynamics::double_integrator ? 4 : 2; }
    int goal_dim() const { return dynamics == Dynamics::double_integrator ? 4 : 2; }
};

// Fan-in-scaled uniform init, deterministic per seed.
PolicyWeights init_weights(uint64_t seed, Dynamics dynamics, PolicyShape shape = {});

// Same structure, all parameters zero (gradient accumulator).
PolicyWeights zeros_like(const PolicyWeights& w);

// Visits every parameter array in a fixed order (l1.w, l1.b, l2.w, l2.b per
// block; blocks in declaration order). Shared by the optimizer, the
// finite-difference tests and (de)serialization.
void for_each_param(PolicyWeights& w, const std::function<void(std::vector<double>&)>& fn);
void for_each_param(const PolicyWeights& w,
                    const std::function<void(const std::vector<double>&)>& fn);
size_t param_count(const PolicyWeights& w);
std::vector<double> flatten_params(const PolicyWeights& w);
void unflatten_params(PolicyWeights& w, std::span<const double> flat);

// Forward/backward intermediates for one controller evaluation. Reusable
// across calls; reverse passes leave the recorded primals untouched.
struct GradientTape {
    struct NetTrace {
        std::vector<double> input;
        std::vector<double> hidden;  // post-ReLU
        std::vector<double> out;
    };
    std::vector<NetTrace> phi_obstacle;
    std::vector<NetTrace> phi_neighbor;
    NetTrace rho_obstacle;
    NetTrace rho_neighbor;
    NetTrace head;

    Vec2 pi_n;            // pre-cap head output
    double pi_n_norm = 0.0;
    bool capped = false;
    double cap_scale = 1.0;
    Vec2 pi;

    SafetyEval safety;
    Vec2 backstep_w;      // v + k_p grad_psi (double integrator)
    Vec2 u;

    // scratch for the reverse pass
    std::vector<double> adj_a, adj_b, adj_c;
};

// pi(o): Deep-Set forward with canonically ordered summation (members sorted
// by range then components, so permuting the lists is bit-exact) and the
// pi_max norm cap.
Vec2 forward_pi(const Observation& obs, const PolicyWeights& w, double pi_max,
                GradientTape* tape = nullptr);

struct ControllerEval {
    Vec2 u;
    Vec2 pi;
    SafetyEval safety;
};

// u = blend(pi, safe_control(...)). state.v feeds the double-integrator
// barrier; unused for single integrator.
ControllerEval forward_controller(const Observation& obs, const RobotState& state,
                                  const PolicyWeights& w, const SafetyParams& params,
                                  GradientTape* tape = nullptr);

// Accumulates d(loss)/d(params) into grads given d(loss)/du. The blend's b
// term carries no parameters; alpha depends on pi on the adaptive branch.
void backward_controller(const GradientTape& tape, const PolicyWeights& w,
                         const SafetyParams& params, const Vec2& u_adjoint,
                         PolicyWeights& grads);

// Two-stage variant: adjoint enters at the capped pi output.
void backward_pi(const GradientTape& tape, const PolicyWeights& w, const Vec2& pi_adjoint,
                 PolicyWeights& grads);

// Versioned JSON weights file; lossless decimal round trip.
void save_weights(const PolicyWeights& w, const std::string& path);
PolicyWeights load_weights(const std::string& path);

}  // namespace mrnav
