#include "mrnav/expert.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <unordered_map>

#include "mrnav/errors.hpp"
#include "mrnav/parallel.hpp"
#include "mrnav/rng.hpp"

namespace mrnav {

namespace {

// ---------------------------------------------------------------------------
// geometry helpers

// Minimum distance between two points moving linearly over the same unit
// interval: |rel0 + t*drel| for t in [0,1].
double synchronized_min_dist(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const Vec2 rel0 = a0 - b0;
    const Vec2 drel = (a1 - a0) - (b1 - b0);
    const double dd = drel.norm_sq();
    double t = 0.0;
    if (dd > 1e-18) t = std::clamp(-rel0.dot(drel) / dd, 0.0, 1.0);
    return (rel0 + t * drel).norm();
}

// Clearance of a straight move against the static obstacles, sampled densely
// enough that the analytic minimum cannot undershoot by more than ~2 cm.
double segment_obstacle_clearance(const Vec2& a, const Vec2& b, const EnvInstance& env,
                                  int samples = 9) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= samples; ++k) {
        const double t = static_cast<double>(k) / samples;
        best = std::min(best, obstacle_clearance(a + t * (b - a), env));
    }
    return best;
}

// ---------------------------------------------------------------------------
// space-time lattice search

struct Schedule {
    // Position at integer steps 0..K; parked at back() afterwards.
    std::vector<Vec2> pos;
    Vec2 at(int k) const {
        if (k < 0) return pos.front();
        return k < static_cast<int>(pos.size()) ? pos[k] : pos.back();
    }
    int end_step() const { return static_cast<int>(pos.size()) - 1; }
};

struct LatticeMap {
    int nx = 0, ny = 0;
    double step = 0.25;
    Vec2 origin;
    std::vector<double> clearance;  // static obstacle clearance per node

    Vec2 position(int gx, int gy) const { return origin + Vec2{gx * step, gy * step}; }
    int id(int gx, int gy) const { return gy * nx + gx; }
    bool inside(int gx, int gy) const { return gx >= 0 && gx < nx && gy >= 0 && gy < ny; }
};

LatticeMap build_lattice(const EnvInstance& env, double step) {
    LatticeMap m;
    m.step = step;
    m.origin = {env.bounds.xmin, env.bounds.ymin};
    m.nx = static_cast<int>(std::floor((env.bounds.xmax - env.bounds.xmin) / step)) + 1;
    m.ny = static_cast<int>(std::floor((env.bounds.ymax - env.bounds.ymin) / step)) + 1;
    m.clearance.resize(static_cast<size_t>(m.nx) * m.ny);
    for (int gy = 0; gy < m.ny; ++gy) {
        for (int gx = 0; gx < m.nx; ++gx) {
            m.clearance[m.id(gx, gy)] = obstacle_clearance(m.position(gx, gy), env);
        }
    }
    return m;
}

struct SearchProblem {
    const EnvInstance& env;
    const LatticeMap& map;
    const std::vector<Schedule>& others;  // higher-priority robots
    double static_clear;                  // node/segment clearance requirement
    double dynamic_clear;                 // robot-robot requirement
    int max_steps;
    int node_budget;
};

bool move_clear_static(const SearchProblem& pb, const Vec2& a, const Vec2& b) {
    if (a == b) return obstacle_clearance(a, pb.env) >= pb.static_clear;
    return segment_obstacle_clearance(a, b, pb.env) >= pb.static_clear;
}

// Motion a->b over [k, k+1] against every higher-priority robot.
bool move_clear_dynamic(const SearchProblem& pb, const Vec2& a, const Vec2& b, int k) {
    for (const Schedule& s : pb.others) {
        if (synchronized_min_dist(a, b, s.at(k), s.at(k + 1)) < pb.dynamic_clear) return false;
    }
    return true;
}

// Can the robot sit at `goal` from step k on (suffix connector from `node`
// during [k, k+1], parked afterwards) without future conflicts?
bool parking_clear(const SearchProblem& pb, const Vec2& node, const Vec2& goal, int k) {
    if (!move_clear_static(pb, node, goal)) return false;
    int horizon = k + 1;
    for (const Schedule& s : pb.others) horizon = std::max(horizon, s.end_step());
    for (int kk = k; kk <= horizon; ++kk) {
        const Vec2 a = (kk == k) ? node : goal;
        if (!move_clear_dynamic(pb, a, goal, kk)) return false;
    }
    return true;
}

struct OpenEntry {
    double f;
    double dist;  // tie-break: prefer less distance travelled
    int node_step;  // packed (node, k)
    bool operator>(const OpenEntry& o) const {
        return f != o.f ? f > o.f : dist > o.dist;
    }
};

// Plans one robot. Returns its schedule (start at step 0, goal parked at the
// end) or throws UnsolvedInstanceError.
Schedule plan_one(const SearchProblem& pb, const Vec2& start, const Vec2& goal) {
    const LatticeMap& m = pb.map;
    const int n_nodes = m.nx * m.ny;

    // Goal lattice anchor: nearest free node with a clear connector.
    const auto snap_candidates = [&](const Vec2& p) {
        std::vector<std::pair<double, int>> cand;
        const int cx = static_cast<int>(std::floor((p.x - m.origin.x) / m.step));
        const int cy = static_cast<int>(std::floor((p.y - m.origin.y) / m.step));
        for (int gy = cy - 1; gy <= cy + 2; ++gy) {
            for (int gx = cx - 1; gx <= cx + 2; ++gx) {
                if (!m.inside(gx, gy)) continue;
                if (m.clearance[m.id(gx, gy)] < pb.static_clear) continue;
                const Vec2 q = m.position(gx, gy);
                if (!move_clear_static(pb, p, q)) continue;
                cand.emplace_back((q - p).norm(), m.id(gx, gy));
            }
        }
        std::sort(cand.begin(), cand.end());
        return cand;
    };

    const auto goal_cand = snap_candidates(goal);
    if (goal_cand.empty()) {
        throw UnsolvedInstanceError("instance unsolved: goal has no reachable lattice anchor");
    }
    std::vector<char> is_goal_node(n_nodes, 0);
    for (const auto& [d, id] : goal_cand) is_goal_node[id] = 1;

    const auto heuristic = [&](int gx, int gy) {
        const double dx = std::abs(gx * m.step - goal.x);
        const double dy = std::abs(gy * m.step - goal.y);
        return std::floor(std::max(dx, dy) / m.step - 1e-9);  // octile steps lower bound
    };

    const int stride = n_nodes;
    const auto key = [&](int node, int k) { return k * stride + node; };

    std::unordered_map<int, double> g_cost;
    std::unordered_map<int, int> parent;  // key -> parent key (-1 root)
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<OpenEntry>> open;

    // Initial entries: wait at the true start for k0 steps, then take the
    // connector to a snapped node during [k0, k0+1].
    const auto start_cand = snap_candidates(start);
    if (start_cand.empty()) {
        throw UnsolvedInstanceError("instance unsolved: start has no reachable lattice anchor");
    }
    const int max_start_wait = std::min(pb.max_steps / 2, 40);
    for (int k0 = 0; k0 <= max_start_wait; ++k0) {
        if (k0 > 0 && !move_clear_dynamic(pb, start, start, k0 - 1)) break;
        for (const auto& [d, node] : start_cand) {
            if (!move_clear_dynamic(pb, start, m.position(node % m.nx, node / m.nx), k0)) continue;
            const int kk = key(node, k0 + 1);
            const double g = (k0 + 1) * 1.0;
            auto it = g_cost.find(kk);
            if (it == g_cost.end() || g < it->second) {
                g_cost[kk] = g;
                parent[kk] = -1 - k0;  // encodes the start wait count
                open.push({g + heuristic(node % m.nx, node / m.nx), d, kk});
            }
        }
    }

    static const int dxs[9] = {0, 1, -1, 0, 0, 1, 1, -1, -1};
    static const int dys[9] = {0, 0, 0, 1, -1, 1, -1, 1, -1};

    int expansions = 0;
    int found_key = -1;
    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        const int k = top.node_step / stride;
        const int node = top.node_step % stride;
        auto git = g_cost.find(top.node_step);
        if (git == g_cost.end() || top.f - heuristic(node % m.nx, node / m.nx) > git->second + 1e-9) {
            continue;  // stale entry
        }
        if (++expansions > pb.node_budget) {
            throw UnsolvedInstanceError("instance unsolved: node budget exhausted");
        }
        const int gx = node % m.nx, gy = node / m.nx;
        const Vec2 p = m.position(gx, gy);

        if (is_goal_node[node] && parking_clear(pb, p, goal, k)) {
            found_key = top.node_step;
            break;
        }
        if (k >= pb.max_steps) continue;

        for (int mv = 0; mv < 9; ++mv) {
            const int ngx = gx + dxs[mv], ngy = gy + dys[mv];
            if (!m.inside(ngx, ngy)) continue;
            const int nnode = m.id(ngx, ngy);
            if (m.clearance[nnode] < pb.static_clear) continue;
            const Vec2 q = m.position(ngx, ngy);
            if (mv != 0 && !move_clear_static(pb, p, q)) continue;
            if (!move_clear_dynamic(pb, p, q, k)) continue;
            const int kk = key(nnode, k + 1);
            const double g = git->second + 1.0;
            auto it = g_cost.find(kk);
            if (it == g_cost.end() || g < it->second) {
                g_cost[kk] = g;
                parent[kk] = top.node_step;
                open.push({g + heuristic(ngx, ngy), top.dist + (q - p).norm(), kk});
            }
        }
    }
    if (found_key < 0) {
        throw UnsolvedInstanceError("instance unsolved: no schedule found");
    }

    // Reconstruct: start (with waits), lattice nodes, goal connector.
    std::vector<Vec2> rev;
    int cur = found_key;
    while (cur >= 0) {
        rev.push_back(pb.map.position(cur % stride % m.nx, cur % stride / m.nx));
        cur = parent.at(cur);
    }
    const int start_wait = -cur - 1;
    Schedule s;
    for (int k0 = 0; k0 <= start_wait; ++k0) s.pos.push_back(start);
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) s.pos.push_back(*it);
    s.pos.push_back(goal);
    return s;
}

// ---------------------------------------------------------------------------
// smoothing

// Elastic-band relaxation of the joint schedules: every interior knot is
// pulled toward the midpoint of its neighbors, keeping the step timing, and a
// move is accepted only if the two affected intervals stay clear of obstacles
// and of every other robot. Straightens lattice staircases into chords, which
// makes the demonstration action field far less aliased by the grid.
void relax_schedules(std::vector<Schedule>& schedules, const EnvInstance& env,
                     double static_clear, double dynamic_clear, int iterations) {
    const int n = static_cast<int>(schedules.size());
    for (int it = 0; it < iterations; ++it) {
        for (int i = 0; i < n; ++i) {
            Schedule& s = schedules[i];
            for (int k = 1; k + 1 < static_cast<int>(s.pos.size()); ++k) {
                const Vec2 prev = s.pos[k - 1];
                const Vec2 next = s.pos[k + 1];
                const Vec2 prop = 0.5 * s.pos[k] + 0.25 * (prev + next);
                if ((prop - s.pos[k]).norm_sq() < 1e-18) continue;
                if (segment_obstacle_clearance(prev, prop, env) < static_clear) continue;
                if (segment_obstacle_clearance(prop, next, env) < static_clear) continue;
                bool ok = true;
                for (int j = 0; j < n && ok; ++j) {
                    if (j == i) continue;
                    const Schedule& o = schedules[j];
                    ok = synchronized_min_dist(prev, prop, o.at(k - 1), o.at(k)) >= dynamic_clear &&
                         synchronized_min_dist(prop, next, o.at(k), o.at(k + 1)) >= dynamic_clear;
                }
                if (ok) s.pos[k] = prop;
            }
        }
    }
}

// Clamped cubic spline on a uniform grid (zero end slopes). Second
// derivatives are piecewise linear with knot values m_.
class ClampedSpline {
public:
    ClampedSpline(std::vector<double> y, double dt) : y_(std::move(y)), dt_(dt) {
        const int n = static_cast<int>(y_.size());
        m_.assign(n, 0.0);
        if (n < 3) return;
        // Tridiagonal system for second derivatives; clamped ends give
        // 2 m0 + m1 = 6/dt^2 (y1 - y0) etc.
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        b[0] = 2.0;
        c[0] = 1.0;
        d[0] = 6.0 / (dt_ * dt_) * (y_[1] - y_[0]);
        for (int i = 1; i < n - 1; ++i) {
            a[i] = 1.0;
            b[i] = 4.0;
            c[i] = 1.0;
            d[i] = 6.0 / (dt_ * dt_) * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]);
        }
        a[n - 1] = 1.0;
        b[n - 1] = 2.0;
        d[n - 1] = -6.0 / (dt_ * dt_) * (y_[n - 1] - y_[n - 2]);
        for (int i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m_[n - 1] = d[n - 1] / b[n - 1];
        for (int i = n - 2; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }

    double value(double t) const {
        const auto [i, s] = locate(t);
        const double h = dt_;
        const double A = (1.0 - s), B = s;
        return A * y_[i] + B * y_[i + 1] +
               h * h / 6.0 * ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]);
    }

    double derivative(double t) const {
        const auto [i, s] = locate(t);
        const double h = dt_;
        const double A = (1.0 - s), B = s;
        return (y_[i + 1] - y_[i]) / h +
               h / 6.0 * ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]);
    }

    double max_abs_second_derivative() const {
        double best = 0.0;
        for (double m : m_) best = std::max(best, std::abs(m));
        return best;
    }

private:
    std::pair<int, double> locate(double t) const {
        const int n = static_cast<int>(y_.size());
        double s = t / dt_;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, n - 2);
        s = std::clamp(s - i, 0.0, 1.0);
        return {i, s};
    }

    std::vector<double> y_;
    std::vector<double> m_;
    double dt_;
};

// Continuous-time view of one robot's plan after dilation. Both dynamics run
// through the clamped spline so the sampled action field is continuous in
// time (a piecewise-constant lattice velocity is a much harder imitation
// target); the oversampled collision check downstream gates any overshoot.
class RobotTrack {
public:
    RobotTrack(const Schedule& s, double step_time, Dynamics dyn) : dyn_(dyn) {
        pts_ = s.pos;
        dt_ = step_time;
        rebuild_splines();
    }

    void dilate(double factor) {
        dt_ *= factor;
        rebuild_splines();
    }

    double duration() const { return dt_ * (pts_.size() - 1); }

    // Largest spline speed, sampled finely within every knot interval.
    double max_speed() const {
        double best = 0.0;
        const int n = static_cast<int>(pts_.size()) - 1;
        for (int i = 0; i <= 10 * n; ++i) {
            const double t = duration() * static_cast<double>(i) / (10 * n);
            best = std::max(best, Vec2{sx_->derivative(t), sy_->derivative(t)}.norm());
        }
        return best;
    }

    // The spline's second derivative is piecewise linear, so the knot values
    // bound the acceleration exactly.
    double max_accel() const {
        return std::hypot(sx_->max_abs_second_derivative(), sy_->max_abs_second_derivative());
    }

    Vec2 position(double t) const {
        t = std::clamp(t, 0.0, duration());
        return {sx_->value(t), sy_->value(t)};
    }

    Vec2 velocity(double t) const {
        if (dyn_ != Dynamics::double_integrator) return {};  // no velocity state
        t = std::clamp(t, 0.0, duration());
        return {sx_->derivative(t), sy_->derivative(t)};
    }

    // Expert action by central finite differencing of the trajectory:
    // velocity (single) or acceleration (double).
    Vec2 action(double t, double fd_step) const {
        if (t >= duration()) return {};
        if (dyn_ == Dynamics::double_integrator) {
            const Vec2 vp = velocity_clamped(t + fd_step);
            const Vec2 vm = velocity_clamped(t - fd_step);
            return (vp - vm) / (2.0 * fd_step);
        }
        const Vec2 pp = position(t + fd_step);
        const Vec2 pm = position(t - fd_step);
        return (pp - pm) / (2.0 * fd_step);
    }

private:
    Vec2 velocity_clamped(double t) const {
        if (t <= 0.0 || t >= duration()) return {};
        return {sx_->derivative(t), sy_->derivative(t)};
    }

    void rebuild_splines() {
        std::vector<double> xs(pts_.size()), ys(pts_.size());
        for (size_t i = 0; i < pts_.size(); ++i) {
            xs[i] = pts_[i].x;
            ys[i] = pts_[i].y;
        }
        sx_.emplace(std::move(xs), dt_);
        sy_.emplace(std::move(ys), dt_);
    }

    std::vector<Vec2> pts_;
    double dt_ = 0.25;
    Dynamics dyn_;
    std::optional<ClampedSpline> sx_, sy_;
};

}  // namespace

Trajectory plan_global(const EnvInstance& env, const SafetyParams& params, double dt_sample,
                       const PlannerConfig& cfg) {
    const double spacing = params.r_safe + params.delta_r;
    if (min_clearance(env.starts, env) < spacing - 1e-12 ||
        min_clearance(env.goals, env) < spacing - 1e-12) {
        throw std::invalid_argument("plan_global: instance violates the initial-spacing assumption");
    }
    if (env.robot_count() == 0) {
        Trajectory t;
        t.dt_sample = dt_sample;
        return t;
    }

    const LatticeMap map = build_lattice(env, cfg.grid_step);
    std::vector<Schedule> schedules;
    schedules.reserve(env.robot_count());
    for (int i = 0; i < env.robot_count(); ++i) {
        SearchProblem pb{env,
                         map,
                         schedules,
                         spacing + cfg.static_margin,
                         spacing,
                         cfg.max_steps,
                         cfg.node_budget};
        schedules.push_back(plan_one(pb, env.starts[i].p, env.goals[i].p));
    }
    relax_schedules(schedules, env, spacing + cfg.static_margin, spacing, cfg.relax_iterations);

    // Global time dilation keeps the relative schedule intact. The base
    // factor comes from the lattice kinematics (a diagonal move per step), so
    // cruise speeds are uniform across instances; extra passes absorb spline
    // overshoot (and acceleration for the double integrator).
    std::vector<RobotTrack> tracks;
    tracks.reserve(schedules.size());
    for (const Schedule& s : schedules) tracks.emplace_back(s, cfg.step_time, env.dynamics);
    const bool di = env.dynamics == Dynamics::double_integrator;
    const double speed_target = di ? cfg.di_cruise_speed : cfg.speed_fraction * params.u_max;
    const double accel_target = cfg.speed_fraction * params.u_max;
    double raw_speed = cfg.grid_step * std::sqrt(2.0) / cfg.step_time;
    for (const Schedule& s : schedules) {
        for (size_t i = 0; i + 1 < s.pos.size(); ++i) {
            raw_speed = std::max(raw_speed, (s.pos[i + 1] - s.pos[i]).norm() / cfg.step_time);
        }
    }
    if (raw_speed > speed_target) {
        for (RobotTrack& t : tracks) t.dilate(raw_speed / speed_target);
    }
    for (int pass = 0; pass < 6; ++pass) {
        double worst = 0.0;
        for (const RobotTrack& t : tracks) {
            worst = std::max(worst, di ? t.max_accel() / accel_target
                                       : t.max_speed() / speed_target);
        }
        if (worst <= 1.0) break;
        const double gamma = di ? std::sqrt(worst) : worst;
        for (RobotTrack& t : tracks) t.dilate(std::max(gamma, 1.001));
    }

    double duration = 0.0;
    for (const RobotTrack& t : tracks) duration = std::max(duration, t.duration());
    const int n_samples = static_cast<int>(std::ceil(duration / dt_sample - 1e-9)) + 1;

    Trajectory traj;
    traj.dt_sample = dt_sample;
    traj.duration = (n_samples - 1) * dt_sample;
    traj.robots.resize(env.robot_count());
    const double fd_step = dt_sample / 100.0;
    for (int i = 0; i < env.robot_count(); ++i) {
        traj.robots[i].resize(n_samples);
        for (int k = 0; k < n_samples; ++k) {
            const double t = k * dt_sample;
            TrajSample& s = traj.robots[i][k];
            s.t = t;
            s.state.p = tracks[i].position(t);
            s.state.v = tracks[i].velocity(t);
            s.u = tracks[i].action(t, fd_step);
        }
    }

    // 10x oversampled validation of the smoothed plan.
    std::vector<RobotState> states(env.robot_count());
    const int fine = (n_samples - 1) * 10;
    for (int k = 0; k <= fine; ++k) {
        const double t = duration * (fine > 0 ? static_cast<double>(k) / fine : 0.0);
        for (int i = 0; i < env.robot_count(); ++i) states[i].p = tracks[i].position(t);
        if (!collision_free(states, env, params.r_safe)) {
            throw UnsolvedInstanceError("instance unsolved: smoothed plan fails collision check");
        }
    }
    return traj;
}

std::vector<DemoRecord> extract_demos(const Trajectory& traj, const EnvInstance& env,
                                      const SafetyParams& params, const ObsCaps& caps) {
    std::vector<DemoRecord> records;
    const int n = static_cast<int>(traj.robots.size());
    if (n == 0) return records;
    const int n_samples = static_cast<int>(traj.robots[0].size());
    records.reserve(static_cast<size_t>(n) * n_samples);
    std::vector<RobotState> states(n);
    for (int k = 0; k < n_samples; ++k) {
        for (int i = 0; i < n; ++i) states[i] = traj.robots[i][k].state;
        for (int i = 0; i < n; ++i) {
            records.push_back({observe(i, states, env, params, caps), traj.robots[i][k].u});
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// dataset file

namespace {

constexpr char kMagic[8] = {'G', 'L', 'A', 'S', 'D', 'S', '0', '1'};

void put_f32(std::string& buf, double v) {
    const float f = static_cast<float>(v);
    char tmp[4];
    std::memcpy(tmp, &f, 4);
    buf.append(tmp, 4);
}

float get_f32(const std::string& buf, size_t& off) {
    if (off + 4 > buf.size()) throw FormatError("dataset file truncated");
    float f;
    std::memcpy(&f, buf.data() + off, 4);
    off += 4;
    return f;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    if (ds.records.size() > 0xffffffffull) throw FormatError("dataset too large for u32 count");
    std::string buf;
    buf.append(kMagic, 8);
    buf.push_back(static_cast<char>(ds.dynamics == Dynamics::double_integrator ? 2 : 1));
    const uint32_t count = static_cast<uint32_t>(ds.records.size());
    char cnt[4];
    std::memcpy(cnt, &count, 4);
    buf.append(cnt, 4);
    for (const DemoRecord& r : ds.records) {
        const Observation& o = r.obs;
        if (o.neighbors.size() > 255 || o.obstacles.size() > 255) {
            throw FormatError("dataset record exceeds u8 set-cardinality limit");
        }
        buf.push_back(static_cast<char>(o.neighbors.size()));
        buf.push_back(static_cast<char>(o.obstacles.size()));
        for (double v : encode(o)) put_f32(buf, v);
        put_f32(buf, r.action.x);
        put_f32(buf, r.action.y);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Dataset read_dataset(const std::string& path, const SafetyParams& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open dataset file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 13 || std::memcmp(buf.data(), kMagic, 8) != 0) {
        throw FormatError("dataset file: bad magic");
    }
    Dataset ds;
    const uint8_t kind = static_cast<uint8_t>(buf[8]);
    if (kind == 1) {
        ds.dynamics = Dynamics::single_integrator;
    } else if (kind == 2) {
        ds.dynamics = Dynamics::double_integrator;
    } else {
        throw FormatError("dataset file: unknown dynamics kind byte");
    }
    uint32_t count;
    std::memcpy(&count, buf.data() + 9, 4);
    size_t off = 13;
    ds.records.reserve(count);
    const int nd = ds.dynamics == Dynamics::double_integrator ? 4 : 2;
    const int gd = nd;
    std::vector<double> flat;
    for (uint32_t i = 0; i < count; ++i) {
        if (off + 2 > buf.size()) throw FormatError("dataset file truncated");
        const int n_v = static_cast<uint8_t>(buf[off]);
        const int n_o = static_cast<uint8_t>(buf[off + 1]);
        off += 2;
        const int n_vals = gd + nd * n_v + 2 * n_o;
        flat.resize(n_vals);
        for (int k = 0; k < n_vals; ++k) flat[k] = get_f32(buf, off);
        DemoRecord rec;
        rec.obs = decode(flat, n_v, n_o, ds.dynamics, params);
        rec.action.x = get_f32(buf, off);
        rec.action.y = get_f32(buf, off);
        ds.records.push_back(std::move(rec));
    }
    if (off != buf.size()) throw FormatError("dataset file: trailing bytes");
    return ds;
}

Dataset build_demo_dataset(const DatasetSpec& spec, const SafetyParams& params,
                           const ObsCaps& caps, int jobs) {
    struct Slot {
        int n_robots;
        double frac;
        uint64_t stream;
    };
    std::vector<Slot> slots;
    uint64_t stream = 0;
    for (int n : spec.robot_counts) {
        for (double f : spec.obstacle_fractions) {
            for (int c = 0; c < spec.per_case; ++c) slots.push_back({n, f, stream++});
        }
    }
    std::vector<std::vector<DemoRecord>> outputs(slots.size());
    parallel_for(jobs, static_cast<int>(slots.size()), [&](int s) {
        const Slot& slot = slots[s];
        // Fresh deterministic seeds until an instance plans cleanly.
        for (uint64_t attempt = 0;; ++attempt) {
            if (attempt > 50) {
                throw UnsolvedInstanceError("build_demo_dataset: slot failed 50 resamples");
            }
            const uint64_t seed = mix_seed(spec.seed_base, slot.stream * 64 + attempt);
            try {
                const EnvInstance env =
                    make_random_env(slot.n_robots, slot.frac, spec.side, seed,
                                    params.r_safe + params.delta_r, params.dynamics);
                const Trajectory traj = plan_global(env, params, spec.dt_sample);
                outputs[s] = extract_demos(traj, env, params, caps);
                return;
            } catch (const UnsolvedInstanceError&) {
            } catch (const InfeasibleInstanceError&) {
            }
        }
    });
    Dataset ds;
    ds.dynamics = params.dynamics;
    for (auto& recs : outputs) {
        ds.records.insert(ds.records.end(), std::make_move_iterator(recs.begin()),
                          std::make_move_iterator(recs.end()));
    }
    return ds;
}

}  // namespace mrnav
