#include "nirsgaf/cv.hpp"

#include <algorithm>

#include "nirsgaf/errors.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::eval {

std::vector<int> ProbClassifier::predict(const Tensor& x) const {
    const Tensor probs = predict_proba(x);
    std::vector<int> out(probs.shape[0]);
    for (std::size_t s = 0; s < probs.shape[0]; ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.shape[1]; ++c)
            if (probs.at2(s, c) > probs.at2(s, best)) best = c;
        out[s] = static_cast<int>(best);
    }
    return out;
}

CvResult run_cv_detailed(const Tensor& x, const std::vector<int>& y, const ModelFactory& factory,
                         const FoldPlan& folds, uint64_t seed) {
    const std::size_t n = x.shape.empty() ? 0 : x.shape[0];
    if (n == 0) throw EmptyDataset("run_cv: empty dataset");
    if (y.size() != n) throw DimensionMismatch("run_cv: |y| != samples");
    if (folds.assignments.size() != n)
        throw DimensionMismatch("run_cv: fold plan covers " +
                                std::to_string(folds.assignments.size()) + " samples, data has " +
                                std::to_string(n));

    Tensor pooled_scores;
    std::vector<int> pooled_pred(n, -1);
    MetricsReport report;

    const Rng seeder(seed);
    for (std::size_t f = 0; f < folds.k; ++f) {
        const auto test_idx = folds.test_indices(f);
        const auto train_idx = folds.train_indices(f);
        if (test_idx.empty()) continue;
        if (train_idx.empty()) throw TooFewSamples("run_cv: fold " + std::to_string(f) +
                                                   " leaves no training data");
        try {
            std::vector<int> y_train(train_idx.size());
            for (std::size_t i = 0; i < train_idx.size(); ++i) y_train[i] = y[train_idx[i]];

            auto model = factory();
            model->fit(x.gather(train_idx), y_train, seeder.derive(f).seed());

            const Tensor x_test = x.gather(test_idx);
            const Tensor scores = model->predict_proba(x_test);
            const auto pred = model->predict(x_test);

            if (pooled_scores.size() == 0) {
                pooled_scores = Tensor({n, scores.shape[1]});
            }
            std::vector<int> y_test(test_idx.size());
            for (std::size_t i = 0; i < test_idx.size(); ++i) {
                y_test[i] = y[test_idx[i]];
                pooled_pred[test_idx[i]] = pred[i];
                for (std::size_t c = 0; c < scores.shape[1]; ++c)
                    pooled_scores.at2(test_idx[i], c) = scores.at2(i, c);
            }
            report.per_fold.push_back({f, test_idx.size(), accuracy_score(y_test, pred)});
        } catch (const Error& e) {
            throw Error(e.error_class(), "fold " + std::to_string(f) + ": " + e.what());
        }
    }

    const MetricsReport agg = compute_metrics(pooled_scores, y, pooled_pred);
    report.accuracy = agg.accuracy;
    report.per_class_auroc = agg.per_class_auroc;
    report.micro_auroc = agg.micro_auroc;
    report.average_precision = agg.average_precision;
    report.confusion = agg.confusion;
    return {std::move(pooled_scores), std::move(pooled_pred), std::move(report)};
}

MetricsReport run_cv(const Tensor& x, const std::vector<int>& y, const ModelFactory& factory,
                     const FoldPlan& folds, uint64_t seed) {
    return run_cv_detailed(x, y, factory, folds, seed).report;
}

// --- adapters ---------------------------------------------------------------

LogregClassifier::LogregClassifier(double l2, double lr, std::size_t epochs)
    : l2_(l2), lr_(lr), epochs_(epochs) {}

void LogregClassifier::fit(const Tensor& x, const std::vector<int>& y, uint64_t) {
    model_ = baselines::train_logreg(x, y, l2_, lr_, epochs_);
    // a fold can miss the highest class index entirely; widen to 3 columns
    if (model_.n_classes < 3) {
        model_.w.resize(3 * model_.n_features, 0.0);
        model_.b.resize(3, 0.0);
        model_.n_classes = 3;
    }
}

Tensor LogregClassifier::predict_proba(const Tensor& x) const { return model_.predict_proba(x); }

std::vector<int> LogregClassifier::predict(const Tensor& x) const { return model_.predict(x); }

KnnClassifier::KnnClassifier(std::size_t k, std::size_t n_classes)
    : k_(k), n_classes_(n_classes) {}

void KnnClassifier::fit(const Tensor& x, const std::vector<int>& y, uint64_t) {
    if (x.rank() != 2) throw DimensionMismatch("knn: expected [N, D] features");
    x_train_ = x;
    y_train_ = y;
}

Tensor KnnClassifier::predict_proba(const Tensor& x) const {
    return baselines::knn_predict_proba(x_train_, y_train_, x, k_, n_classes_);
}

std::vector<int> KnnClassifier::predict(const Tensor& x) const {
    std::vector<int> out(x.shape[0]);
    std::vector<double> q(x.shape[1]);
    for (std::size_t s = 0; s < x.shape[0]; ++s) {
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = x.at2(s, j);
        out[s] = baselines::knn_predict(x_train_, y_train_, q, k_);
    }
    return out;
}

CnnClassifier::CnnClassifier(nn::NetworkSpec spec, nn::TrainConfig train_cfg,
                             std::size_t val_denominator)
    : spec_(std::move(spec)), train_cfg_(train_cfg), val_denominator_(val_denominator) {
    if (val_denominator_ < 2) throw ConfigError("cnn: val_denominator must be >= 2");
}

void CnnClassifier::fit(const Tensor& x, const std::vector<int>& y, uint64_t seed) {
    // internal stratified split: fold 0 of a k-way plan becomes validation
    std::size_t smallest = y.size();
    for (int c = 0; c < 3; ++c) {
        const std::size_t count = static_cast<std::size_t>(std::count(y.begin(), y.end(), c));
        if (count > 0) smallest = std::min(smallest, count);
    }
    const std::size_t k_split = std::max<std::size_t>(2, std::min(val_denominator_, smallest));
    const Rng seeder(seed);
    const FoldPlan split = make_folds(y, k_split, true, seeder.derive(0x76616cu).seed());

    const auto val_idx = split.test_indices(0);
    const auto fit_idx = split.train_indices(0);
    std::vector<int> y_fit(fit_idx.size()), y_val(val_idx.size());
    for (std::size_t i = 0; i < fit_idx.size(); ++i) y_fit[i] = y[fit_idx[i]];
    for (std::size_t i = 0; i < val_idx.size(); ++i) y_val[i] = y[val_idx[i]];

    net_ = std::make_unique<nn::Network>(spec_, seeder.derive(0x6e6574u).seed());
    nn::TrainConfig cfg = train_cfg_;
    cfg.seed = seeder.derive(0x747261696eu).seed();
    history_ = nn::train(*net_, x.gather(fit_idx), y_fit, x.gather(val_idx), y_val, cfg);
}

Tensor CnnClassifier::predict_proba(const Tensor& x) const { return net_->predict_proba(x); }

}  // namespace nirsgaf::eval
