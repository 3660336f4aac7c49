#include "mrnav/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "mrnav/errors.hpp"
#include "mrnav/rng.hpp"

namespace mrnav {

const char* to_string(TrainMode m) {
    return m == TrainMode::end_to_end ? "end_to_end" : "two_stage";
}

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "end_to_end") return TrainMode::end_to_end;
    if (s == "two_stage") return TrainMode::two_stage;
    throw FormatError("unknown training mode: " + s);
}

std::vector<Batch> make_batches(const Dataset& ds, std::span<const int> subset, int batch_size,
                                uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    std::map<std::pair<int, int>, std::vector<int>> groups;
    for (int i : subset) {
        const Observation& o = ds.records[i].obs;
        groups[{static_cast<int>(o.neighbors.size()), static_cast<int>(o.obstacles.size())}]
            .push_back(i);
    }
    Rng rng(seed);
    std::vector<Batch> batches;
    for (auto& [key, idx] : groups) {
        rng.shuffle(idx);
        for (size_t at = 0; at < idx.size(); at += batch_size) {
            Batch b;
            b.n_neighbors = key.first;
            b.n_obstacles = key.second;
            const size_t end = std::min(idx.size(), at + batch_size);
            b.idx.assign(idx.begin() + at, idx.begin() + end);
            batches.push_back(std::move(b));
        }
    }
    rng.shuffle(batches);
    return batches;
}

std::vector<Batch> make_batches(const Dataset& ds, int batch_size, uint64_t seed) {
    std::vector<int> all(ds.records.size());
    std::iota(all.begin(), all.end(), 0);
    return make_batches(ds, all, batch_size, seed);
}

namespace {

// Prediction for one record under the given mode; fills the tape.
Vec2 predict(const DemoRecord& rec, TrainMode mode, const SafetyParams& params,
             const PolicyWeights& w, GradientTape& tape) {
    if (mode == TrainMode::two_stage) {
        return forward_pi(rec.obs, w, params.pi_max, &tape);
    }
    RobotState self;
    if (rec.obs.dynamics == Dynamics::double_integrator) self.v = -rec.obs.rel_goal_v;
    return forward_controller(rec.obs, self, w, params, &tape).u;
}

class Adam {
public:
    Adam(size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(PolicyWeights& w, const PolicyWeights& g, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        size_t k = 0;
        // Same traversal order on both structures.
        std::vector<const std::vector<double>*> gs;
        for_each_param(g, [&](const std::vector<double>& arr) { gs.push_back(&arr); });
        size_t which = 0;
        for_each_param(w, [&](std::vector<double>& arr) {
            const std::vector<double>& ga = *gs[which++];
            for (size_t i = 0; i < arr.size(); ++i, ++k) {
                m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * ga[i];
                v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * ga[i] * ga[i];
                arr[i] -= lr * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + eps_);
            }
        });
    }

private:
    std::vector<double> m_, v_;
    double beta1_, beta2_, eps_;
    int t_ = 0;
};

}  // namespace

double evaluate_loss(const Dataset& ds, std::span<const int> idx, TrainMode mode,
                     const SafetyParams& params, const PolicyWeights& w) {
    if (idx.empty()) return 0.0;
    GradientTape tape;
    double sse = 0.0;
    for (int i : idx) {
        const Vec2 r = predict(ds.records[i], mode, params, w, tape) - ds.records[i].action;
        sse += r.norm_sq();
    }
    return sse / (2.0 * static_cast<double>(idx.size()));
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const SafetyParams& params,
                  const PolicyWeights& init) {
    if (ds.records.empty()) throw std::invalid_argument("train: dataset is empty");
    if ((ds.dynamics == Dynamics::double_integrator) !=
        (params.dynamics == Dynamics::double_integrator) ||
        init.dynamics != ds.dynamics) {
        throw FormatError("train: dataset/params/weights dynamics kinds disagree");
    }

    // Deterministic validation split.
    std::vector<int> order(ds.records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(mix_seed(cfg.seed, 0x5e11));
    split_rng.shuffle(order);
    const size_t n_val = static_cast<size_t>(cfg.validation_fraction * order.size());
    std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    std::vector<int> train_idx(order.begin() + n_val, order.end());
    if (train_idx.empty()) std::swap(train_idx, val_idx);

    PolicyWeights w = init;
    PolicyWeights grads = zeros_like(w);
    Adam adam(param_count(w));
    GradientTape tape;

    TrainResult result;
    result.weights = w;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    double lr = cfg.lr0;
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<Batch> batches =
            make_batches(ds, train_idx, cfg.batch_size, mix_seed(cfg.seed, 1000 + epoch));
        double train_sse = 0.0;
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch& batch = batches[bi];
            for_each_param(grads, [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
            double batch_sse = 0.0;
            const double inv = 1.0 / static_cast<double>(batch.idx.size());
            for (int i : batch.idx) {
                const DemoRecord& rec = ds.records[i];
                const Vec2 pred = predict(rec, cfg.mode, params, w, tape);
                const Vec2 r = pred - rec.action;
                batch_sse += r.norm_sq();
                const Vec2 adj = r * inv;  // d/dpred of sum ||r||^2 / (2B)
                if (cfg.mode == TrainMode::two_stage) {
                    backward_pi(tape, w, adj, grads);
                } else {
                    backward_controller(tape, w, params, adj, grads);
                }
            }
            if (!std::isfinite(batch_sse)) {
                throw std::runtime_error("train: non-finite loss in epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(bi));
            }
            train_sse += batch_sse;
            adam.step(w, grads, lr);
        }
        const double train_loss = train_sse / (2.0 * static_cast<double>(train_idx.size()));
        const double val_loss =
            val_idx.empty() ? train_loss : evaluate_loss(ds, val_idx, cfg.mode, params, w);

        result.history.push_back({epoch, train_loss, val_loss, lr});
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.weights = w;
            epochs_since_best = 0;
        } else if (++epochs_since_best > cfg.plateau_patience) {
            lr *= cfg.plateau_factor;
            epochs_since_best = 0;
        }
    }
    return result;
}

void write_loss_history(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open for writing: " + path);
    out << "# mrnav-csv v1\n";
    out << "epoch,train_loss,val_loss,lr\n";
    char buf[160];
    for (const EpochStats& e : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss,
                      e.lr);
        out << buf;
    }
}

}  // namespace mrnav
