#include "nirsgaf/nn_train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nirsgaf/errors.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::nn {

using nlohmann::json;

namespace {

constexpr uint64_t kShuffleTag = 0x5348554646u;  // batch-order stream
constexpr uint64_t kDropoutTag = 0x44524f50u;    // dropout-mask stream

double accuracy_of(const std::vector<int>& pred, const std::vector<int>& y) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    return y.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(y.size());
}

std::vector<int> argmax_rows(const Tensor& probs) {
    const std::size_t n = probs.shape[0], k = probs.shape[1];
    std::vector<int> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs.at2(s, j) > probs.at2(s, best)) best = j;
        out[s] = static_cast<int>(best);
    }
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train config: max_epochs must be >= 1");
    if (optimizer.lr <= 0.0 || optimizer.eps <= 0.0)
        throw ConfigError("train config: lr and eps must be positive");
    if (optimizer.rho <= 0.0 || optimizer.rho >= 1.0)
        throw ConfigError("train config: rho must be in (0, 1)");
    if (plateau.factor <= 0.0 || plateau.factor >= 1.0)
        throw ConfigError("train config: plateau factor must be in (0, 1)");
    if (plateau.patience < 1 || early_stop.patience < 1)
        throw ConfigError("train config: patience values must be >= 1");
    if (plateau.min_lr <= 0.0 || plateau.min_delta <= 0.0)
        throw ConfigError("train config: min_lr and min_delta must be positive");
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    TrainConfig cfg;
    try {
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
            cfg.optimizer.rho = o.value("rho", cfg.optimizer.rho);
            cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
        }
        if (j.contains("lr_plateau")) {
            const auto& p = j.at("lr_plateau");
            cfg.plateau.factor = p.value("factor", cfg.plateau.factor);
            cfg.plateau.patience = p.value("patience", cfg.plateau.patience);
            cfg.plateau.min_lr = p.value("min_lr", cfg.plateau.min_lr);
            cfg.plateau.min_delta = p.value("min_delta", cfg.plateau.min_delta);
        }
        if (j.contains("early_stop")) {
            cfg.early_stop.patience = j.at("early_stop").value("patience", cfg.early_stop.patience);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string TrainConfig::to_json_text(int indent) const {
    json j;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["seed"] = seed;
    j["optimizer"] = {{"lr", optimizer.lr}, {"rho", optimizer.rho}, {"eps", optimizer.eps}};
    j["lr_plateau"] = {{"factor", plateau.factor},
                       {"patience", plateau.patience},
                       {"min_lr", plateau.min_lr},
                       {"min_delta", plateau.min_delta}};
    j["early_stop"] = {{"patience", early_stop.patience}};
    return j.dump(indent) + "\n";
}

TrainConfig TrainConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void TrainConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json_text();
    if (!out) throw IoError("write failed: " + path);
}

void rmsprop_step(std::vector<double>& theta, const std::vector<double>& grad,
                  std::vector<double>& v, const RmspropConfig& opt, double lr) {
    if (theta.size() != grad.size() || theta.size() != v.size())
        throw DimensionMismatch("rmsprop_step: size mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = opt.rho * v[i] + (1.0 - opt.rho) * grad[i] * grad[i];
        theta[i] -= lr * grad[i] / (std::sqrt(v[i]) + opt.eps);
    }
}

History train(Network& net, const Tensor& x_train, const std::vector<int>& y_train,
              const Tensor& x_val, const std::vector<int>& y_val, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n_train = x_train.shape.empty() ? 0 : x_train.shape[0];
    const std::size_t n_val = x_val.shape.empty() ? 0 : x_val.shape[0];
    if (n_train == 0) throw EmptyDataset("train: empty training set");
    if (n_val == 0) throw EmptyDataset("train: empty validation set");
    if (y_train.size() != n_train || y_val.size() != n_val)
        throw DimensionMismatch("train: label count does not match sample count");

    const std::size_t k = net.n_classes();
    const Tensor val_one_hot = Network::one_hot(y_val, k);

    Rng shuffle_rng = Rng(cfg.seed).derive(kShuffleTag);
    net.reseed_dropout(Rng(cfg.seed).derive(kDropoutTag).seed());

    auto params = net.params();
    auto state = net.state();
    std::vector<std::vector<double>> opt_state(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        opt_state[i].assign(params[i].value->size(), 0.0);

    std::vector<std::vector<double>> best_params, best_state;
    auto snapshot = [&] {
        best_params.clear();
        best_state.clear();
        for (const auto& pv : params) best_params.push_back(*pv.value);
        for (const auto& sv : state) best_state.push_back(*sv.value);
    };
    auto restore = [&] {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i].value = best_params[i];
        for (std::size_t i = 0; i < state.size(); ++i) *state[i].value = best_state[i];
    };

    History hist;
    double lr = cfg.optimizer.lr;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t plateau_wait = 0, stop_wait = 0;

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t hit_sum = 0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t stop = std::min(n_train, start + cfg.batch_size);
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
            Tensor xb = x_train.gather(idx);
            std::vector<int> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y_train[idx[i]];
            const Tensor yb_one_hot = Network::one_hot(yb, k);

            Tensor probs = net.forward(xb, Mode::kTrain);
            const double batch_loss = net.loss(probs, yb_one_hot);
            if (!std::isfinite(batch_loss))
                throw NumericalInstability("train: non-finite loss at epoch " +
                                           std::to_string(epoch));
            net.backward(probs, yb_one_hot);
            for (std::size_t i = 0; i < params.size(); ++i)
                rmsprop_step(*params[i].value, *params[i].grad, opt_state[i], cfg.optimizer, lr);

            loss_sum += batch_loss * static_cast<double>(idx.size());
            const auto pred = argmax_rows(probs);
            for (std::size_t i = 0; i < idx.size(); ++i)
                if (pred[i] == yb[i]) ++hit_sum;
        }

        Tensor val_probs = net.predict_proba(x_val);
        const double val_loss = net.loss(val_probs, val_one_hot);
        if (!std::isfinite(val_loss))
            throw NumericalInstability("train: non-finite validation loss at epoch " +
                                       std::to_string(epoch));

        EpochStats s;
        s.train_loss = loss_sum / static_cast<double>(n_train);
        s.train_accuracy = static_cast<double>(hit_sum) / static_cast<double>(n_train);
        s.val_loss = val_loss;
        s.val_accuracy = accuracy_of(argmax_rows(val_probs), y_val);
        s.learning_rate = lr;
        hist.epochs.push_back(s);
        hist.stopped_epoch = epoch;

        if (val_loss < best_val - cfg.plateau.min_delta) {
            best_val = val_loss;
            hist.best_epoch = epoch;
            snapshot();
            plateau_wait = 0;
            stop_wait = 0;
        } else {
            ++plateau_wait;
            ++stop_wait;
            if (plateau_wait >= cfg.plateau.patience && lr > cfg.plateau.min_lr) {
                lr = std::max(lr * cfg.plateau.factor, cfg.plateau.min_lr);
                hist.lr_drops.push_back(epoch);
                plateau_wait = 0;
            }
            if (stop_wait >= cfg.early_stop.patience) {
                hist.early_stopped = true;
                break;
            }
        }
    }

    if (best_params.empty()) snapshot();  // no epoch ever improved; keep final weights
    restore();
    return hist;
}

}  // namespace nirsgaf::nn
