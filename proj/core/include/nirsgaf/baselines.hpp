// Feature-space baseline classifiers: multinomial logistic regression
// (full-batch gradient descent on softmax cross-entropy + L2) and k-nearest
// neighbours with a documented deterministic tie rule.
#pragma once

#include <cstddef>
#include <vector>

#include "nirsgaf/tensor.hpp"

namespace nirsgaf::baselines {

struct LogregModel {
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    // Weights live in standardized feature space; mean/sd are the training
    // statistics applied to inputs before the linear map.
    std::vector<double> w;  // [n_classes][n_features]
    std::vector<double> b;  // [n_classes]
    std::vector<double> mean, sd;

    Tensor predict_proba(const Tensor& x) const;  // [N, n_classes]
    std::vector<int> predict(const Tensor& x) const;
};

// Full-batch gradient descent; weights start at zero, inputs are standardized
// internally (constant columns get sd 1), so the run is deterministic with no
// RNG involved. l2 applies to weights only, not biases.
LogregModel train_logreg(const Tensor& x, const std::vector<int>& y, double l2 = 1e-4,
                         double lr = 0.1, std::size_t epochs = 500);

// Majority vote among the k nearest training points by Euclidean distance.
// Vote ties: smallest mean distance among the tied classes, then lowest class
// index. Distance ties when selecting neighbours: lower training index first.
int knn_predict(const Tensor& x_train, const std::vector<int>& y_train,
                const std::vector<double>& x, std::size_t k);

// Per-row vote fractions (scores for ranking metrics). Labels derived from
// these fractions ignore the tie rule, so use knn_predict for the label.
Tensor knn_predict_proba(const Tensor& x_train, const std::vector<int>& y_train,
                         const Tensor& x, std::size_t k, std::size_t n_classes);

}  // namespace nirsgaf::baselines
