#include "nirsgaf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "nirsgaf/errors.hpp"
#include "nirsgaf/rng.hpp"

namespace nirsgaf::eval {

using nlohmann::json;

namespace {

constexpr std::size_t kNumClasses = 3;

// Binary AUROC by average ranks; exactly the Mann-Whitney pair-counting value
// because tied groups contribute dyadic average ranks.
double binary_auroc(const std::vector<double>& score, const std::vector<char>& positive) {
    const std::size_t n = score.size();
    std::size_t n_pos = 0;
    for (char p : positive) n_pos += (p != 0);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateClass("auroc: need at least one positive and one negative");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && score[order[j]] == score[order[i]]) ++j;
        // ranks i+1 .. j averaged over the tied group
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t)
            if (positive[order[t]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                        static_cast<double>(n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

void check_scores(const Tensor& scores, const std::vector<int>& labels) {
    if (scores.rank() != 2) throw DimensionMismatch("metrics: scores must be [N, K]");
    if (scores.shape[0] != labels.size())
        throw DimensionMismatch("metrics: score rows != label count");
    if (labels.empty()) throw EmptyDataset("metrics: no samples");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= scores.shape[1])
            throw DataError("metrics: label outside score columns");
}

void pool_ovr(const Tensor& scores, const std::vector<int>& labels, std::vector<double>& s,
              std::vector<char>& pos) {
    const std::size_t n = scores.shape[0], k = scores.shape[1];
    s.reserve(n * k);
    pos.reserve(n * k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back(scores.at2(i, c));
            pos.push_back(labels[i] == static_cast<int>(c) ? 1 : 0);
        }
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

FoldPlan make_folds(const std::vector<int>& labels, std::size_t k, bool stratified,
                    uint64_t seed) {
    const std::size_t n = labels.size();
    if (n == 0) throw EmptyDataset("make_folds: no samples");
    if (k < 2) throw ConfigError("make_folds: k must be >= 2");

    FoldPlan plan;
    plan.k = k;
    plan.stratified = stratified;
    plan.seed = seed;
    plan.assignments.assign(n, 0);

    Rng rng(seed);
    if (!stratified) {
        if (k > n)
            throw TooFewSamples("make_folds: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(n) + " samples");
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t i = 0; i < n; ++i) plan.assignments[order[i]] = i % k;
        return plan;
    }

    int max_label = 0;
    for (int y : labels) {
        if (y < 0) throw DataError("make_folds: negative label");
        max_label = std::max(max_label, y);
    }
    // Per class: shuffle its indices, deal round-robin. The fold cursor runs
    // on across classes so total fold sizes stay balanced too.
    std::size_t cursor = 0;
    for (int c = 0; c <= max_label; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == c) members.push_back(i);
        if (members.empty()) continue;
        if (members.size() < k)
            throw TooFewSamples("make_folds: class " + std::to_string(c) + " has " +
                                std::to_string(members.size()) + " samples, need >= k = " +
                                std::to_string(k));
        Rng class_rng = rng.derive(static_cast<uint64_t>(c));
        class_rng.shuffle(members);
        for (std::size_t i = 0; i < members.size(); ++i)
            plan.assignments[members[i]] = (cursor + i) % k;
        cursor = (cursor + members.size()) % k;
    }
    return plan;
}

double auroc_ovr(const Tensor& scores, const std::vector<int>& labels, int positive_class) {
    check_scores(scores, labels);
    if (positive_class < 0 || static_cast<std::size_t>(positive_class) >= scores.shape[1])
        throw ConfigError("auroc_ovr: positive_class outside score columns");
    const std::size_t n = scores.shape[0];
    std::vector<double> s(n);
    std::vector<char> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = scores.at2(i, static_cast<std::size_t>(positive_class));
        pos[i] = (labels[i] == positive_class) ? 1 : 0;
    }
    return binary_auroc(s, pos);
}

double micro_average_roc(const Tensor& scores, const std::vector<int>& labels) {
    check_scores(scores, labels);
    std::vector<double> s;
    std::vector<char> pos;
    pool_ovr(scores, labels, s, pos);
    return binary_auroc(s, pos);
}

double average_precision_micro(const Tensor& scores, const std::vector<int>& labels) {
    check_scores(scores, labels);
    std::vector<double> s;
    std::vector<char> pos;
    pool_ovr(scores, labels, s, pos);

    const std::size_t n = s.size();
    std::size_t total_pos = 0;
    for (char p : pos) total_pos += (p != 0);
    if (total_pos == 0 || total_pos == n)
        throw DegenerateClass("average_precision: need both positives and negatives");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });

    double ap = 0.0, recall_prev = 0.0;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && s[order[j]] == s[order[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (pos[order[t]])
                ++tp;
            else
                ++fp;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    return ap;
}

std::array<std::array<int64_t, 3>, 3> confusion_matrix(const std::vector<int>& labels,
                                                       const std::vector<int>& predictions) {
    if (labels.size() != predictions.size())
        throw DimensionMismatch("confusion_matrix: size mismatch");
    std::array<std::array<int64_t, 3>, 3> m{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumClasses) || predictions[i] < 0 ||
            predictions[i] >= static_cast<int>(kNumClasses))
            throw DataError("confusion_matrix: label outside the 3 classes");
        ++m[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
    }
    return m;
}

double accuracy_score(const std::vector<int>& labels, const std::vector<int>& predictions) {
    if (labels.size() != predictions.size())
        throw DimensionMismatch("accuracy_score: size mismatch");
    if (labels.empty()) throw EmptyDataset("accuracy_score: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == predictions[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

MetricsReport compute_metrics(const Tensor& scores, const std::vector<int>& labels,
                              const std::vector<int>& predictions) {
    check_scores(scores, labels);
    if (scores.shape[1] != kNumClasses)
        throw DimensionMismatch("compute_metrics: expected 3 score columns");
    MetricsReport r;
    r.accuracy = accuracy_score(labels, predictions);
    for (std::size_t c = 0; c < kNumClasses; ++c)
        r.per_class_auroc[c] = auroc_ovr(scores, labels, static_cast<int>(c));
    r.micro_auroc = micro_average_roc(scores, labels);
    r.average_precision = average_precision_micro(scores, labels);
    r.confusion = confusion_matrix(labels, predictions);
    return r;
}

std::string MetricsReport::to_json_text(int indent) const {
    json j;
    j["accuracy"] = accuracy;
    j["per_class_auroc"] = per_class_auroc;
    j["micro_auroc"] = micro_auroc;
    j["average_precision"] = average_precision;
    j["confusion"] = confusion;
    j["per_fold"] = json::array();
    for (const auto& f : per_fold)
        j["per_fold"].push_back(
            {{"fold", f.fold}, {"n_test", f.n_test}, {"accuracy", f.accuracy}});
    return j.dump(indent) + "\n";
}

MetricsReport MetricsReport::from_json_text(const std::string& text) {
    MetricsReport r;
    try {
        const json j = json::parse(text);
        r.accuracy = j.at("accuracy").get<double>();
        r.per_class_auroc = j.at("per_class_auroc").get<std::array<double, 3>>();
        r.micro_auroc = j.at("micro_auroc").get<double>();
        r.average_precision = j.at("average_precision").get<double>();
        r.confusion = j.at("confusion").get<std::array<std::array<int64_t, 3>, 3>>();
        for (const auto& f : j.value("per_fold", json::array()))
            r.per_fold.push_back({f.at("fold").get<std::size_t>(),
                                  f.at("n_test").get<std::size_t>(),
                                  f.at("accuracy").get<double>()});
    } catch (const json::exception& e) {
        throw DataError(std::string("metrics report: ") + e.what());
    }
    return r;
}

}  // namespace nirsgaf::eval
