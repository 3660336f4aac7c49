#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrnav/expert.hpp"
#include "mrnav/policy.hpp"
#include "mrnav/safety.hpp"

namespace mrnav {

enum class TrainMode { end_to_end, two_stage };

const char* to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
    TrainMode mode = TrainMode::end_to_end;
    int batch_size = 4096;
    int epochs = 100;
    double lr0 = 1e-3;
    int plateau_patience = 10;
    double plateau_factor = 0.5;
    uint64_t seed = 0;
    double validation_fraction = 0.1;
};

// Fixed-shape mini-batch: record indices sharing one (n_V, n_Omega) key.
struct Batch {
    int n_neighbors = 0;
    int n_obstacles = 0;
    std::vector<int> idx;
};

// Records grouped by exact shape key, shuffled within groups, chunked, then
// the batch emission order shuffled; deterministic per seed. Remainder
// batches allowed, shapes never mixed.
std::vector<Batch> make_batches(const Dataset& ds, std::span<const int> subset, int batch_size,
                                uint64_t seed);
std::vector<Batch> make_batches(const Dataset& ds, int batch_size, uint64_t seed);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    PolicyWeights weights;  // best validation loss
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
};

// Mini-batch Adam regression of the controller output (end_to_end) or the
// capped network output (two_stage) onto expert actions; MSE over batch and
// action components; ReduceLROnPlateau-style decay on the validation loss.
// Aborts with std::runtime_error naming the batch if the loss goes
// non-finite.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, const SafetyParams& params,
                  const PolicyWeights& init);

// Mean squared error (per component) of the configured mode's prediction
// over a record subset.
double evaluate_loss(const Dataset& ds, std::span<const int> idx, TrainMode mode,
                     const SafetyParams& params, const PolicyWeights& w);

// epoch, train_loss, val_loss, lr (with a format-version comment line).
void write_loss_history(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace mrnav
