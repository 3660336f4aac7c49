#include "mrnav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mrnav/errors.hpp"
#include "mrnav/rng.hpp"

namespace mrnav {

namespace {

DenseLayer make_layer(int in, int out, Rng& rng) {
    DenseLayer l;
    l.in = in;
    l.out = out;
    l.w.resize(static_cast<size_t>(in) * out);
    l.b.resize(out);
    const double wb = std::sqrt(6.0 / in);
    const double bb = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : l.w) v = rng.uniform(-wb, wb);
    for (double& v : l.b) v = rng.uniform(-bb, bb);
    return l;
}

FFNet make_net(int in, int hidden, int out, Rng& rng) {
    return {make_layer(in, hidden, rng), make_layer(hidden, out, rng)};
}

void dense_forward(const DenseLayer& l, std::span<const double> x, std::vector<double>& out) {
    out.assign(l.out, 0.0);
    for (int i = 0; i < l.out; ++i) {
        const double* row = l.w.data() + static_cast<size_t>(i) * l.in;
        double acc = l.b[i];
        for (int j = 0; j < l.in; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
}

// x_adj may be null when the input is a leaf (observation values).
void dense_backward(const DenseLayer& l, std::span<const double> x, std::span<const double> g,
                    DenseLayer& l_grad, double* x_adj) {
    for (int i = 0; i < l.out; ++i) {
        const double gi = g[i];
        l_grad.b[i] += gi;
        double* wg_row = l_grad.w.data() + static_cast<size_t>(i) * l.in;
        const double* w_row = l.w.data() + static_cast<size_t>(i) * l.in;
        for (int j = 0; j < l.in; ++j) {
            wg_row[j] += gi * x[j];
            if (x_adj) x_adj[j] += w_row[j] * gi;
        }
    }
}

void net_forward(const FFNet& net, std::span<const double> x, GradientTape::NetTrace& t) {
    t.input.assign(x.begin(), x.end());
    dense_forward(net.l1, x, t.hidden);
    for (double& h : t.hidden) h = h > 0.0 ? h : 0.0;
    dense_forward(net.l2, t.hidden, t.out);
}

// ReLU slope at exactly 0 taken as 0 (mask from post-activation > 0).
void net_backward(const FFNet& net, const GradientTape::NetTrace& t, std::span<const double> g_out,
                  FFNet& grad, std::vector<double>& scratch, double* input_adj) {
    scratch.assign(net.l1.out, 0.0);
    dense_backward(net.l2, t.hidden, g_out, grad.l2, scratch.data());
    for (int i = 0; i < net.l1.out; ++i) {
        if (!(t.hidden[i] > 0.0)) scratch[i] = 0.0;
    }
    dense_backward(net.l1, t.input, scratch, grad.l1, input_adj);
}

// Canonical accumulation order: by range, then componentwise. Makes the set
// sums independent of the caller's list order down to the last bit.
std::vector<int> canonical_order_neighbors(const Observation& obs) {
    std::vector<int> idx(obs.neighbors.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const NeighborRel& na = obs.neighbors[a];
        const NeighborRel& nb = obs.neighbors[b];
        const double ra = na.p.norm_sq(), rb = nb.p.norm_sq();
        if (ra != rb) return ra < rb;
        if (na.p.x != nb.p.x) return na.p.x < nb.p.x;
        if (na.p.y != nb.p.y) return na.p.y < nb.p.y;
        if (na.v.x != nb.v.x) return na.v.x < nb.v.x;
        return na.v.y < nb.v.y;
    });
    return idx;
}

std::vector<int> canonical_order_obstacles(const Observation& obs) {
    std::vector<int> idx(obs.obstacles.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const Vec2& oa = obs.obstacles[a];
        const Vec2& ob = obs.obstacles[b];
        const double ra = oa.norm_sq(), rb = ob.norm_sq();
        if (ra != rb) return ra < rb;
        if (oa.x != ob.x) return oa.x < ob.x;
        return oa.y < ob.y;
    });
    return idx;
}

}  // namespace

PolicyWeights init_weights(uint64_t seed, Dynamics dynamics, PolicyShape shape) {
    Rng rng(seed);
    PolicyWeights w;
    w.dynamics = dynamics;
    w.shape = shape;
    const int h = shape.hidden, e = shape.embed;
    w.phi_obstacle = make_net(2, h, e, rng);
    w.rho_obstacle = make_net(e, h, e, rng);
    w.phi_neighbor = make_net(w.neighbor_dim(), h, e, rng);
    w.rho_neighbor = make_net(e, h, e, rng);
    w.head = make_net(2 * e + w.goal_dim(), h, 2, rng);
    return w;
}

PolicyWeights zeros_like(const PolicyWeights& w) {
    PolicyWeights z = w;
    for_each_param(z, [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
    return z;
}

void for_each_param(PolicyWeights& w, const std::function<void(std::vector<double>&)>& fn) {
    for (FFNet* net : {&w.phi_obstacle, &w.rho_obstacle, &w.phi_neighbor, &w.rho_neighbor, &w.head}) {
        fn(net->l1.w);
        fn(net->l1.b);
        fn(net->l2.w);
        fn(net->l2.b);
    }
}

void for_each_param(const PolicyWeights& w,
                    const std::function<void(const std::vector<double>&)>& fn) {
    for (const FFNet* net :
         {&w.phi_obstacle, &w.rho_obstacle, &w.phi_neighbor, &w.rho_neighbor, &w.head}) {
        fn(net->l1.w);
        fn(net->l1.b);
        fn(net->l2.w);
        fn(net->l2.b);
    }
}

size_t param_count(const PolicyWeights& w) {
    size_t n = 0;
    for_each_param(w, [&](const std::vector<double>& v) { n += v.size(); });
    return n;
}

std::vector<double> flatten_params(const PolicyWeights& w) {
    std::vector<double> flat;
    flat.reserve(param_count(w));
    for_each_param(w, [&](const std::vector<double>& v) {
        flat.insert(flat.end(), v.begin(), v.end());
    });
    return flat;
}

void unflatten_params(PolicyWeights& w, std::span<const double> flat) {
    size_t k = 0;
    for_each_param(w, [&](std::vector<double>& v) {
        if (k + v.size() > flat.size()) throw FormatError("unflatten_params: size mismatch");
        std::copy(flat.begin() + k, flat.begin() + k + v.size(), v.begin());
        k += v.size();
    });
    if (k != flat.size()) throw FormatError("unflatten_params: size mismatch");
}

Vec2 forward_pi(const Observation& obs, const PolicyWeights& w, double pi_max, GradientTape* tape) {
    thread_local GradientTape scratch;
    GradientTape& t = tape ? *tape : scratch;

    const std::vector<int> ord_o = canonical_order_obstacles(obs);
    const std::vector<int> ord_n = canonical_order_neighbors(obs);

    t.phi_obstacle.resize(ord_o.size());
    t.phi_neighbor.resize(ord_n.size());

    const int e = w.shape.embed;
    std::vector<double>& sum_o = t.adj_a;
    sum_o.assign(e, 0.0);
    for (size_t k = 0; k < ord_o.size(); ++k) {
        const Vec2& pb = obs.obstacles[ord_o[k]];
        const double x[2] = {pb.x, pb.y};
        net_forward(w.phi_obstacle, {x, 2}, t.phi_obstacle[k]);
        for (int i = 0; i < e; ++i) sum_o[i] += t.phi_obstacle[k].out[i];
    }
    dense_forward(w.rho_obstacle.l1, sum_o, t.rho_obstacle.hidden);
    t.rho_obstacle.input.assign(sum_o.begin(), sum_o.end());
    for (double& h : t.rho_obstacle.hidden) h = h > 0.0 ? h : 0.0;
    dense_forward(w.rho_obstacle.l2, t.rho_obstacle.hidden, t.rho_obstacle.out);

    std::vector<double>& sum_n = t.adj_b;
    sum_n.assign(e, 0.0);
    const int nd = w.neighbor_dim();
    for (size_t k = 0; k < ord_n.size(); ++k) {
        const NeighborRel& nb = obs.neighbors[ord_n[k]];
        const double x[4] = {nb.p.x, nb.p.y, nb.v.x, nb.v.y};
        net_forward(w.phi_neighbor, {x, static_cast<size_t>(nd)}, t.phi_neighbor[k]);
        for (int i = 0; i < e; ++i) sum_n[i] += t.phi_neighbor[k].out[i];
    }
    t.rho_neighbor.input.assign(sum_n.begin(), sum_n.end());
    dense_forward(w.rho_neighbor.l1, sum_n, t.rho_neighbor.hidden);
    for (double& h : t.rho_neighbor.hidden) h = h > 0.0 ? h : 0.0;
    dense_forward(w.rho_neighbor.l2, t.rho_neighbor.hidden, t.rho_neighbor.out);

    std::vector<double>& z = t.adj_c;
    z.clear();
    z.insert(z.end(), t.rho_obstacle.out.begin(), t.rho_obstacle.out.end());
    z.insert(z.end(), t.rho_neighbor.out.begin(), t.rho_neighbor.out.end());
    z.push_back(obs.rel_goal_p.x);
    z.push_back(obs.rel_goal_p.y);
    if (w.goal_dim() == 4) {
        z.push_back(obs.rel_goal_v.x);
        z.push_back(obs.rel_goal_v.y);
    }
    net_forward(w.head, z, t.head);

    t.pi_n = {t.head.out[0], t.head.out[1]};
    t.pi_n_norm = t.pi_n.norm();
    if (t.pi_n_norm > pi_max) {
        t.capped = true;
        t.cap_scale = pi_max / t.pi_n_norm;
    } else {
        t.capped = false;
        t.cap_scale = 1.0;
    }
    t.pi = t.cap_scale * t.pi_n;
    return t.pi;
}

ControllerEval forward_controller(const Observation& obs, const RobotState& state,
                                  const PolicyWeights& w, const SafetyParams& params,
                                  GradientTape* tape) {
    thread_local GradientTape scratch;
    GradientTape& t = tape ? *tape : scratch;
    ControllerEval ev;
    ev.pi = forward_pi(obs, w, params.pi_max, &t);
    ev.safety = safe_control(obs, state, ev.pi, params);
    ev.u = blend(ev.pi, ev.safety, params);
    t.safety = ev.safety;
    t.backstep_w = state.v + params.k_p * ev.safety.grad_psi;
    t.u = ev.u;
    return ev;
}

namespace {

// Shared tail of both reverse passes: from d(loss)/d(pi) down to parameters.
void backward_from_pi(const GradientTape& t, const PolicyWeights& w, const Vec2& pi_adj_in,
                      PolicyWeights& grads) {
    // Norm cap: pi = s * pi_n with s = pi_max/||pi_n|| on the capped branch,
    // Jacobian s (I - pihat pihat^T); identity otherwise.
    Vec2 g = pi_adj_in;
    if (t.capped) {
        const Vec2 pihat = t.pi_n / t.pi_n_norm;
        g = t.cap_scale * (g - pihat.dot(g) * pihat);
    }

    const int e = w.shape.embed;
    const double g_head[2] = {g.x, g.y};
    thread_local std::vector<double> z_adj, scratch, s_adj;
    z_adj.assign(t.head.input.size(), 0.0);
    net_backward(w.head, t.head, {g_head, 2}, grads.head, scratch, z_adj.data());

    // Split head-input adjoint; the goal block is a leaf.
    s_adj.assign(e, 0.0);
    net_backward(w.rho_obstacle, t.rho_obstacle, {z_adj.data(), static_cast<size_t>(e)},
                 grads.rho_obstacle, scratch, s_adj.data());
    for (const GradientTape::NetTrace& tr : t.phi_obstacle) {
        net_backward(w.phi_obstacle, tr, s_adj, grads.phi_obstacle, scratch, nullptr);
    }

    s_adj.assign(e, 0.0);
    net_backward(w.rho_neighbor, t.rho_neighbor, {z_adj.data() + e, static_cast<size_t>(e)},
                 grads.rho_neighbor, scratch, s_adj.data());
    for (const GradientTape::NetTrace& tr : t.phi_neighbor) {
        net_backward(w.phi_neighbor, tr, s_adj, grads.phi_neighbor, scratch, nullptr);
    }
}

}  // namespace

void backward_pi(const GradientTape& t, const PolicyWeights& w, const Vec2& pi_adjoint,
                 PolicyWeights& grads) {
    backward_from_pi(t, w, pi_adjoint, grads);
}

void backward_controller(const GradientTape& t, const PolicyWeights& w, const SafetyParams& params,
                         const Vec2& u_adjoint, PolicyWeights& grads) {
    const SafetyEval& sv = t.safety;
    // u = alpha pi + (1-alpha) b; b carries no parameters.
    Vec2 pi_adj = sv.alpha * u_adjoint;
    if (sv.branch == AlphaBranch::gain && sv.alpha_denom > kEpsilonDiv) {
        // d(alpha)/d(pi) = -alpha_raw * sign * dir / denom, with dir = grad_psi
        // (single) or the backstepping error v + k_p grad_psi (double).
        const Vec2 dir = params.dynamics == Dynamics::double_integrator ? t.backstep_w : sv.grad_psi;
        const Vec2 dalpha_dpi = (-sv.alpha_raw * sv.inner_sign / sv.alpha_denom) * dir;
        const double u_dot = u_adjoint.dot(t.pi - sv.b);
        pi_adj += u_dot * dalpha_dpi;
    }
    backward_from_pi(t, w, pi_adj, grads);
}

namespace {

nlohmann::json layer_to_json(const DenseLayer& l) {
    return {{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
    DenseLayer l;
    l.in = j.at("in").get<int>();
    l.out = j.at("out").get<int>();
    l.w = j.at("w").get<std::vector<double>>();
    l.b = j.at("b").get<std::vector<double>>();
    if (l.in <= 0 || l.out <= 0 || l.w.size() != static_cast<size_t>(l.in) * l.out ||
        l.b.size() != static_cast<size_t>(l.out)) {
        throw FormatError("weights file: layer shape mismatch");
    }
    return l;
}

constexpr const char* kBlockNames[5] = {"phi_obstacle", "rho_obstacle", "phi_neighbor",
                                        "rho_neighbor", "head"};

}  // namespace

void save_weights(const PolicyWeights& w, const std::string& path) {
    nlohmann::json j;
    j["format"] = "mrnav-weights";
    j["version"] = 1;
    j["dynamics"] = to_string(w.dynamics);
    j["hidden"] = w.shape.hidden;
    j["embed"] = w.shape.embed;
    const FFNet* nets[5] = {&w.phi_obstacle, &w.rho_obstacle, &w.phi_neighbor, &w.rho_neighbor,
                            &w.head};
    j["blocks"] = nlohmann::json::array();
    for (int i = 0; i < 5; ++i) {
        j["blocks"].push_back({{"name", kBlockNames[i]},
                               {"layers", {layer_to_json(nets[i]->l1), layer_to_json(nets[i]->l2)}}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << j.dump() << "\n";
}

PolicyWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open weights file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weights file is not valid JSON: ") + e.what());
    }
    PolicyWeights w;
    try {
        if (j.at("format").get<std::string>() != "mrnav-weights") {
            throw FormatError("weights file: wrong format tag");
        }
        if (j.at("version").get<int>() != 1) {
            throw FormatError("weights file: unsupported version");
        }
        w.dynamics = dynamics_from_string(j.at("dynamics").get<std::string>());
        w.shape.hidden = j.at("hidden").get<int>();
        w.shape.embed = j.at("embed").get<int>();
        FFNet* nets[5] = {&w.phi_obstacle, &w.rho_obstacle, &w.phi_neighbor, &w.rho_neighbor,
                          &w.head};
        const auto& blocks = j.at("blocks");
        if (blocks.size() != 5) throw FormatError("weights file: expected 5 blocks");
        for (int i = 0; i < 5; ++i) {
            const auto& blk = blocks[i];
            if (blk.at("name").get<std::string>() != kBlockNames[i]) {
                throw FormatError("weights file: unexpected block order/name");
            }
            nets[i]->l1 = layer_from_json(blk.at("layers").at(0));
            nets[i]->l2 = layer_from_json(blk.at("layers").at(1));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weights file missing/invalid field: ") + e.what());
    }
    // Cross-check the declared geometry.
    const int e = w.shape.embed, h = w.shape.hidden;
    auto check = [&](const FFNet& n, int in, int out, const char* name) {
        if (n.l1.in != in || n.l1.out != h || n.l2.in != h || n.l2.out != out) {
            throw FormatError(std::string("weights file: shape mismatch in block ") + name);
        }
    };
    check(w.phi_obstacle, 2, e, "phi_obstacle");
    check(w.rho_obstacle, e, e, "rho_obstacle");
    check(w.phi_neighbor, w.neighbor_dim(), e, "phi_neighbor");
    check(w.rho_neighbor, e, e, "rho_neighbor");
    check(w.head, 2 * e + w.goal_dim(), 2, "head");
    return w;
}

}  // namespace mrnav
