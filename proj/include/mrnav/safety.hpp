#pragma once

#include "mrnav/observation.hpp"
#include "mrnav/vec2.hpp"
#include "mrnav/world.hpp"

namespace mrnav {

struct SafetyParams {
    double r_sense = 3.0;   // observation radius [m]
    double r_safe = 0.15;   // collision radius [m]
    double delta_r = 0.05;  // boundary-layer width [m]
    double k_p = 1.0;
    double k_v = 2.0;       // double integrator only
    double k_c = 0.0;
    double epsilon = 0.01;  // discrete-time margin on alpha
    double pi_max = 0.5;    // learned-action norm bound
    double u_max = 0.5;     // action bound (experts; optional output clamp)
    Dynamics dynamics = Dynamics::single_integrator;

    // h-threshold equivalent of the distance margin delta_r: h at range
    // r_safe + delta_r. The alpha branch flips where min_h crosses this.
    double delta_h_threshold() const { return delta_r / (r_sense - r_safe); }

    static SafetyParams defaults_for(Dynamics d) {
        SafetyParams p;
        p.dynamics = d;
        if (d == Dynamics::double_integrator) {
            // Stiffer gains: the acceleration-level barrier must out-brake
            // the momentum a bounded pi can build up.
            p.k_p = 3.0;
            p.k_v = 6.0;
            p.pi_max = 1.0;
            p.u_max = 1.0;
        }
        return p;
    }
};

// Floor for barrier denominators; pairs closer than r_safe + this to the
// singularity are rejected as domain errors before the floor could matter.
inline constexpr double kEpsilonDiv = 1e-9;

enum class AlphaBranch {
    safe,        // delta_h >= 0: alpha = 1 - epsilon, constant in pi
    gain,        // unclamped adaptive gain (depends on pi)
    gain_clamped // adaptive gain hit [0, 1-eps]; zero derivative in pi
};

struct SafetyEval {
    Vec2 b;
    double alpha = 1.0;
    Vec2 grad_psi;
    Vec2 ddt_grad_psi;  // double integrator only
    double min_h = 0.0;
    double psi = 0.0;

    // Recorded for reverse mode through alpha and for diagnostics.
    AlphaBranch branch = AlphaBranch::safe;
    double alpha_raw = 1.0;   // pre-clamp value on the gain branch
    double alpha_denom = 0.0; // D (single) or a1+|a2| (double)
    double inner_sign = 0.0;  // sign(<grad_psi, pi>) resp. sign(a2)
    double a1 = 0.0;          // double integrator only
    double a2 = 0.0;
    double lyap = 0.0;        // k_p*psi + 0.5*||v + k_p*grad_psi||^2
};

// h(pbar) = (||pbar|| - r_safe) / (r_sense - r_safe). May be <= 0.
double h_value(const Vec2& pbar, const SafetyParams& params);

// psi = -sum_j log h(pbar_j) over the observation's neighbor and obstacle
// lists; 0 for empty sets. Throws SafetyDomainError if any h <= 0.
double psi_local(const Observation& obs, const SafetyParams& params);

// grad_{p_i} psi = sum_j pbar_j / (||pbar_j|| (||pbar_j|| - r_safe)).
// Throws SafetyDomainError when a pair sits within kEpsilonDiv of r_safe.
Vec2 grad_psi(const Observation& obs, const SafetyParams& params);

// Time derivative of grad_psi along p_i(t) = p_i + t v_i with every listed
// object held fixed:
//   sum_j [ -v/(r(r-rs)) + pbar <pbar,v> (2r-rs) / (r^3 (r-rs)^2) ].
Vec2 ddt_grad_psi(const Observation& obs, const Vec2& v_i, const SafetyParams& params);

// Single integrator: b = -k_p grad_psi; adaptive gain per the boundary-layer
// branch on delta_h = min_h - delta_h_threshold.
SafetyEval safe_control_si(const Observation& obs, const Vec2& pi_out, const SafetyParams& params);

// Double integrator backstepping variant.
SafetyEval safe_control_di(const Observation& obs, const Vec2& v_i, const Vec2& pi_out,
                           const SafetyParams& params);

SafetyEval safe_control(const Observation& obs, const RobotState& state, const Vec2& pi_out,
                        const SafetyParams& params);

// u = alpha*pi + (1-alpha)*b. With clamp_u_max the result is rescaled onto
// the u_max ball (voids the formal guarantee; off by default) and *clamped
// reports whether rescaling triggered.
Vec2 blend(const Vec2& pi_out, const SafetyEval& eval, const SafetyParams& params,
           bool clamp_u_max = false, bool* clamped = nullptr);

}  // namespace mrnav
