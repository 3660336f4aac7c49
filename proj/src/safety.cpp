#include "mrnav/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrnav/errors.hpp"

namespace mrnav {

namespace {

// Applies fn(pbar) to every listed object; the barrier treats robots and
// obstacle closest points uniformly.
template <class Fn>
void for_each_pbar(const Observation& obs, Fn&& fn) {
    for (const NeighborRel& n : obs.neighbors) fn(n.p);
    for (const Vec2& o : obs.obstacles) fn(o);
}

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double h_value(const Vec2& pbar, const SafetyParams& params) {
    return (pbar.norm() - params.r_safe) / (params.r_sense - params.r_safe);
}

double psi_local(const Observation& obs, const SafetyParams& params) {
    double psi = 0.0;
    for_each_pbar(obs, [&](const Vec2& pbar) {
        const double h = h_value(pbar, params);
        if (h <= 0.0) {
            throw SafetyDomainError("psi_local: safety set violated (h = " + std::to_string(h) + ")");
        }
        psi -= std::log(h);
    });
    return psi;
}

Vec2 grad_psi(const Observation& obs, const SafetyParams& params) {
    Vec2 g;
    for_each_pbar(obs, [&](const Vec2& pbar) {
        const double r = pbar.norm();
        if (r - params.r_safe <= kEpsilonDiv) {
            throw SafetyDomainError("grad_psi: pair within singularity guard of r_safe");
        }
        const double den = std::max(r * (r - params.r_safe), kEpsilonDiv);
        g += pbar / den;
    });
    return g;
}

Vec2 ddt_grad_psi(const Observation& obs, const Vec2& v_i, const SafetyParams& params) {
    Vec2 g;
    const double rs = params.r_safe;
    for_each_pbar(obs, [&](const Vec2& pbar) {
        const double r = pbar.norm();
        if (r - rs <= kEpsilonDiv) {
            throw SafetyDomainError("ddt_grad_psi: pair within singularity guard of r_safe");
        }
        const double d1 = std::max(r * (r - rs), kEpsilonDiv);
        const double d2 = std::max(r * r * r * (r - rs) * (r - rs), kEpsilonDiv);
        g += v_i * (-1.0 / d1) + pbar * (pbar.dot(v_i) * (2.0 * r - rs) / d2);
    });
    return g;
}

namespace {

// Shared alpha finishing: clamp the gain branch into [0, 1-eps] and record
// how the value was produced (needed for the reverse pass).
void finish_alpha(SafetyEval& ev, double numer, double denom, const SafetyParams& params) {
    ev.alpha_denom = denom;
    if (denom <= kEpsilonDiv) {
        // Gridlock equilibrium: the learned action is fully cancelled.
        ev.alpha_raw = 0.0;
        ev.alpha = 0.0;
        ev.branch = AlphaBranch::gain_clamped;
        return;
    }
    ev.alpha_raw = numer / denom;
    const double hi = 1.0 - params.epsilon;
    if (ev.alpha_raw < 0.0) {
        ev.alpha = 0.0;
        ev.branch = AlphaBranch::gain_clamped;
    } else if (ev.alpha_raw > hi) {
        ev.alpha = hi;
        ev.branch = AlphaBranch::gain_clamped;
    } else {
        ev.alpha = ev.alpha_raw;
        ev.branch = AlphaBranch::gain;
    }
}

}  // namespace

SafetyEval safe_control_si(const Observation& obs, const Vec2& pi_out, const SafetyParams& params) {
    SafetyEval ev;
    ev.min_h = obs.raw_min_h;
    ev.grad_psi = grad_psi(obs, params);
    ev.psi = psi_local(obs, params);
    ev.b = -params.k_p * ev.grad_psi;

    if (ev.min_h >= params.delta_h_threshold()) {
        ev.branch = AlphaBranch::safe;
        ev.alpha = 1.0 - params.epsilon;
        ev.alpha_raw = ev.alpha;
        return ev;
    }
    const double g2 = ev.grad_psi.norm_sq();
    const double inner = ev.grad_psi.dot(pi_out);
    ev.inner_sign = sign_or_zero(inner);
    finish_alpha(ev, (params.k_p - params.k_c) * g2, params.k_p * g2 + std::abs(inner), params);
    return ev;
}

SafetyEval safe_control_di(const Observation& obs, const Vec2& v_i, const Vec2& pi_out,
                           const SafetyParams& params) {
    SafetyEval ev;
    ev.min_h = obs.raw_min_h;
    ev.grad_psi = grad_psi(obs, params);
    ev.ddt_grad_psi = ddt_grad_psi(obs, v_i, params);
    ev.psi = psi_local(obs, params);

    const Vec2 w = v_i + params.k_p * ev.grad_psi;  // v - k, backstepping error
    ev.b = -params.k_v * w - params.k_p * ev.ddt_grad_psi - params.k_p * ev.grad_psi;
    ev.lyap = params.k_p * ev.psi + 0.5 * w.norm_sq();

    if (ev.min_h >= params.delta_h_threshold()) {
        ev.branch = AlphaBranch::safe;
        ev.alpha = 1.0 - params.epsilon;
        ev.alpha_raw = ev.alpha;
        return ev;
    }
    ev.a1 = params.k_v * w.norm_sq() + params.k_p * params.k_p * ev.grad_psi.norm_sq();
    ev.a2 = v_i.dot(params.k_p * ev.grad_psi) +
            w.dot(pi_out + params.k_p * ev.ddt_grad_psi);
    ev.inner_sign = sign_or_zero(ev.a2);
    finish_alpha(ev, ev.a1 - params.k_c * ev.lyap, ev.a1 + std::abs(ev.a2), params);
    return ev;
}

SafetyEval safe_control(const Observation& obs, const RobotState& state, const Vec2& pi_out,
                        const SafetyParams& params) {
    return params.dynamics == Dynamics::double_integrator
               ? safe_control_di(obs, state.v, pi_out, params)
               : safe_control_si(obs, pi_out, params);
}

Vec2 blend(const Vec2& pi_out, const SafetyEval& eval, const SafetyParams& params,
           bool clamp_u_max, bool* clamped) {
    Vec2 u = eval.alpha * pi_out + (1.0 - eval.alpha) * eval.b;
    bool did = false;
    if (clamp_u_max) {
        const double n = u.norm();
        if (n > params.u_max) {
            u *= params.u_max / n;
            did = true;
        }
    }
    if (clamped) *clamped = did;
    return u;
}

}  // namespace mrnav
