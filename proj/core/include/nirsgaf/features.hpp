// Windowed temporal-mean feature vectors and permutation-based feature
// ranking, used to pick the channel whose series feeds the GAF encoder.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nirsgaf/preprocess.hpp"
#include "nirsgaf/tensor.hpp"

namespace nirsgaf::features {

struct FeatureVector {
    std::vector<double> values;  // 4 x channel count
    Task label = Task::MI;
    std::vector<std::string> names;  // "<ch>_<hbo|hbr>_<w1|w2>"
};

// Per channel: mean HbO over [5,10) s, mean HbO over [10,15) s, then the
// same two windows for HbR. Windows are half-open on the epoch sample grid.
FeatureVector extract_features(const preprocess::Epoch& epoch);

// Rows = epochs, columns in extract_features order.
struct FeatureMatrix {
    Tensor X;                        // [N, D]
    std::vector<int> y;              // task indices
    std::vector<std::string> names;  // D feature names
};

FeatureMatrix feature_matrix(const std::vector<preprocess::Epoch>& epochs);

struct FeatureImportance {
    std::string name;
    double mean = 0.0;  // baseline accuracy minus mean shuffled accuracy
    double sd = 0.0;    // over repeats
};

struct ImportanceReport {
    std::vector<FeatureImportance> ranking;  // descending by mean importance
};

// Model-agnostic prediction hook: class index per row of X.
using PredictFn = std::function<std::vector<int>(const Tensor& X)>;

// Importance of a feature = baseline accuracy - mean accuracy over
// `repeats` independent shuffles of that column. Deterministic per seed.
ImportanceReport permutation_importance(const PredictFn& predict, const Tensor& X,
                                        const std::vector<int>& y,
                                        const std::vector<std::string>& names,
                                        std::size_t repeats, uint64_t seed);

// Channel owning the best-ranked feature; exact ties at the top importance
// resolve to the lexicographically smallest channel id.
std::string select_channel(const ImportanceReport& report);

// "ch03_hbo_w2" -> "ch03"
std::string channel_of_feature(const std::string& feature_name);

void write_features_csv(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_features_csv(const std::string& path);
void write_importance_csv(const std::string& path, const ImportanceReport& report);
ImportanceReport read_importance_csv(const std::string& path);

}  // namespace nirsgaf::features
