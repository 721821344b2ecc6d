// Training loop: RMSprop with reduce-on-plateau and early stopping, both
// monitoring validation loss. Deterministic for a given (network seed,
// TrainConfig seed): batch order comes from one derived stream, dropout masks
// from another, and the loop is single-threaded.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nirsgaf/nn_network.hpp"
#include "nirsgaf/tensor.hpp"

namespace nirsgaf::nn {

struct RmspropConfig {
    double lr = 1e-3;
    double rho = 0.9;
    double eps = 1e-8;
};

struct PlateauConfig {
    double factor = 0.5;
    std::size_t patience = 5;
    double min_lr = 1e-6;
    double min_delta = 1e-4;  // an epoch "improves" if val loss drops by at least this
};

struct EarlyStopConfig {
    std::size_t patience = 10;
};

struct TrainConfig {
    std::size_t batch_size = 8;
    RmspropConfig optimizer;
    PlateauConfig plateau;
    EarlyStopConfig early_stop;
    std::size_t max_epochs = 50;
    uint64_t seed = 1;

    void validate() const;  // positive hyperparameters, batch_size >= 1
    static TrainConfig from_json_text(const std::string& text);
    std::string to_json_text(int indent = 2) const;
    static TrainConfig load(const std::string& path);
    void save(const std::string& path) const;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double learning_rate = 0.0;  // lr in effect during this epoch
};

struct History {
    std::vector<EpochStats> epochs;
    std::vector<std::size_t> lr_drops;  // epochs after which lr was reduced
    std::size_t best_epoch = 0;         // epoch whose weights were restored
    std::size_t stopped_epoch = 0;      // last epoch that ran
    bool early_stopped = false;
};

// v <- rho*v + (1-rho)*g^2;  theta <- theta - lr*g/(sqrt(v) + eps)
void rmsprop_step(std::vector<double>& theta, const std::vector<double>& grad,
                  std::vector<double>& v, const RmspropConfig& opt, double lr);

// Trains in place; on return the network carries the weights (and batchnorm
// running statistics) of History::best_epoch — the last epoch that improved
// the validation loss by at least plateau.min_delta.
History train(Network& net, const Tensor& x_train, const std::vector<int>& y_train,
              const Tensor& x_val, const std::vector<int>& y_val, const TrainConfig& cfg);

}  // namespace nirsgaf::nn
