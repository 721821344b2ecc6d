// Cross-validation driver over an abstract probabilistic classifier, plus
// adapters for the three implemented models (logreg, knn, cnn). Held-out
// predictions from all folds are pooled into one MetricsReport; per-fold
// accuracies ride along.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nirsgaf/baselines.hpp"
#include "nirsgaf/metrics.hpp"
#include "nirsgaf/nn_train.hpp"
#include "nirsgaf/tensor.hpp"

namespace nirsgaf::eval {

class ProbClassifier {
public:
    virtual ~ProbClassifier() = default;
    virtual void fit(const Tensor& x, const std::vector<int>& y, uint64_t seed) = 0;
    virtual Tensor predict_proba(const Tensor& x) const = 0;
    // Default: arg-max of predict_proba, ties to the lowest class index.
    virtual std::vector<int> predict(const Tensor& x) const;
};

using ModelFactory = std::function<std::unique_ptr<ProbClassifier>()>;

struct CvResult {
    Tensor scores;                 // [n, classes] held-out scores per sample
    std::vector<int> predictions;  // held-out prediction per sample
    MetricsReport report;
};

// Trains one fresh model per fold (fold f gets sub-seed derive(seed, f)),
// pools held-out scores/predictions at their original sample positions, and
// computes the aggregate metrics. Errors from a fold are rethrown with the
// fold index prepended. x may be any rank with samples on axis 0.
CvResult run_cv_detailed(const Tensor& x, const std::vector<int>& y, const ModelFactory& factory,
                         const FoldPlan& folds, uint64_t seed);

MetricsReport run_cv(const Tensor& x, const std::vector<int>& y, const ModelFactory& factory,
                     const FoldPlan& folds, uint64_t seed);

class LogregClassifier final : public ProbClassifier {
public:
    explicit LogregClassifier(double l2 = 1e-4, double lr = 0.1, std::size_t epochs = 500);
    void fit(const Tensor& x, const std::vector<int>& y, uint64_t seed) override;
    Tensor predict_proba(const Tensor& x) const override;
    std::vector<int> predict(const Tensor& x) const override;

private:
    double l2_, lr_;
    std::size_t epochs_;
    baselines::LogregModel model_;
};

class KnnClassifier final : public ProbClassifier {
public:
    explicit KnnClassifier(std::size_t k = 5, std::size_t n_classes = 3);
    void fit(const Tensor& x, const std::vector<int>& y, uint64_t seed) override;
    Tensor predict_proba(const Tensor& x) const override;
    // Uses the documented vote tie rule, not arg-max of the fractions.
    std::vector<int> predict(const Tensor& x) const override;

private:
    std::size_t k_, n_classes_;
    Tensor x_train_;
    std::vector<int> y_train_;
};

// Wraps Network + train(). fit() carves a stratified validation split off
// the given training data (1 / val_denominator of it, at least one sample
// per class) because the plateau/early-stop schedule needs one.
class CnnClassifier final : public ProbClassifier {
public:
    CnnClassifier(nn::NetworkSpec spec, nn::TrainConfig train_cfg,
                  std::size_t val_denominator = 5);
    void fit(const Tensor& x, const std::vector<int>& y, uint64_t seed) override;
    Tensor predict_proba(const Tensor& x) const override;

    const nn::History& history() const { return history_; }
    nn::Network& network() { return *net_; }

private:
    nn::NetworkSpec spec_;
    nn::TrainConfig train_cfg_;
    std::size_t val_denominator_;
    std::unique_ptr<nn::Network> net_;
    nn::History history_;
};

}  // namespace nirsgaf::eval
