// Fold planning and the metric suite: accuracy, one-vs-rest AUROC
// (Mann-Whitney with half credit for ties), micro-averaged AUROC and average
// precision over the pooled one-vs-rest decisions, and the confusion matrix.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nirsgaf/tensor.hpp"

namespace nirsgaf::eval {

struct FoldPlan {
    std::size_t k = 10;
    std::vector<std::size_t> assignments;  // fold index per sample
    bool stratified = true;
    uint64_t seed = 0;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Stratified: per-class counts across folds differ by at most one; requires
// k <= smallest class count. Unstratified: a shuffled round-robin partition.
FoldPlan make_folds(const std::vector<int>& labels, std::size_t k, bool stratified,
                    uint64_t seed);

// AUROC of scores[:, positive_class] for the one-vs-rest binarization of
// labels. Equals (#concordant + 0.5 #tied) / (#pos * #neg).
double auroc_ovr(const Tensor& scores, const std::vector<int>& labels, int positive_class);

// Pool all (sample, class) one-vs-rest decisions into one binary problem of
// n_samples * n_classes points, then compute binary AUROC / average
// precision (step integral sum (R_k - R_{k-1}) P_k over descending-score
// thresholds, tied scores merged into one threshold).
double micro_average_roc(const Tensor& scores, const std::vector<int>& labels);
double average_precision_micro(const Tensor& scores, const std::vector<int>& labels);

struct FoldMetrics {
    std::size_t fold = 0;
    std::size_t n_test = 0;
    double accuracy = 0.0;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::array<double, 3> per_class_auroc{};
    double micro_auroc = 0.0;
    double average_precision = 0.0;
    std::array<std::array<int64_t, 3>, 3> confusion{};  // [true][predicted]
    std::vector<FoldMetrics> per_fold;

    std::string to_json_text(int indent = 2) const;
    static MetricsReport from_json_text(const std::string& text);
};

std::array<std::array<int64_t, 3>, 3> confusion_matrix(const std::vector<int>& labels,
                                                       const std::vector<int>& predictions);

double accuracy_score(const std::vector<int>& labels, const std::vector<int>& predictions);

// Fills every aggregate field of MetricsReport (per_fold is the caller's job).
MetricsReport compute_metrics(const Tensor& scores, const std::vector<int>& labels,
                              const std::vector<int>& predictions);

}  // namespace nirsgaf::eval
