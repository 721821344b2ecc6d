#include "nirsgaf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nirsgaf/errors.hpp"

namespace nirsgaf::baselines {

namespace {

void check_matrix(const Tensor& x, const char* where) {
    if (x.rank() != 2) throw DimensionMismatch(std::string(where) + ": expected a 2-D matrix");
}

// neighbour indices of x among rows of train, nearest first; distance ties
// keep ascending row order (stable sort)
std::vector<std::size_t> nearest(const Tensor& train, const std::vector<double>& x,
                                 std::size_t k) {
    const std::size_t n = train.shape[0], d = train.shape[1];
    if (x.size() != d) throw DimensionMismatch("knn: query dimension mismatch");
    if (k < 1) throw ConfigError("knn: k must be >= 1");
    if (k > n) throw ConfigError("knn: k exceeds training set size");
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = train.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - x[j];
            acc += diff * diff;
        }
        dist[i] = acc;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    order.resize(k);
    return order;
}

}  // namespace

Tensor LogregModel::predict_proba(const Tensor& x) const {
    check_matrix(x, "logreg");
    if (x.shape[1] != n_features)
        throw DimensionMismatch("logreg: input has " + std::to_string(x.shape[1]) +
                                " features, model expects " + std::to_string(n_features));
    const std::size_t n = x.shape[0];
    Tensor probs({n, n_classes});
    std::vector<double> z(n_features);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < n_features; ++j)
            z[j] = (x.at2(s, j) - mean[j]) / sd[j];
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_classes; ++c) {
            double acc = b[c];
            const double* wc = w.data() + c * n_features;
            for (std::size_t j = 0; j < n_features; ++j) acc += wc[j] * z[j];
            probs.at2(s, c) = acc;
            mx = std::max(mx, acc);
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            probs.at2(s, c) = std::exp(probs.at2(s, c) - mx);
            sum += probs.at2(s, c);
        }
        for (std::size_t c = 0; c < n_classes; ++c) probs.at2(s, c) /= sum;
    }
    return probs;
}

std::vector<int> LogregModel::predict(const Tensor& x) const {
    const Tensor probs = predict_proba(x);
    std::vector<int> out(probs.shape[0]);
    for (std::size_t s = 0; s < probs.shape[0]; ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_classes; ++c)
            if (probs.at2(s, c) > probs.at2(s, best)) best = c;
        out[s] = static_cast<int>(best);
    }
    return out;
}

LogregModel train_logreg(const Tensor& x, const std::vector<int>& y, double l2, double lr,
                         std::size_t epochs) {
    check_matrix(x, "train_logreg");
    const std::size_t n = x.shape[0], d = x.shape[1];
    if (n == 0) throw EmptyDataset("train_logreg: no samples");
    if (y.size() != n) throw DimensionMismatch("train_logreg: |y| != rows of x");
    if (l2 < 0.0 || lr <= 0.0) throw ConfigError("train_logreg: need l2 >= 0 and lr > 0");

    int max_label = 0;
    for (int v : y) {
        if (v < 0) throw DataError("train_logreg: negative label");
        max_label = std::max(max_label, v);
    }
    const std::size_t k = static_cast<std::size_t>(max_label) + 1;
    if (k < 2) throw DegenerateClass("train_logreg: need at least two classes");

    LogregModel m;
    m.n_features = d;
    m.n_classes = k;
    m.w.assign(k * d, 0.0);
    m.b.assign(k, 0.0);
    m.mean.assign(d, 0.0);
    m.sd.assign(d, 0.0);

    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += x.at2(s, j);
    for (std::size_t j = 0; j < d; ++j) m.mean[j] /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.at2(s, j) - m.mean[j];
            m.sd[j] += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) {
        m.sd[j] = std::sqrt(m.sd[j] / static_cast<double>(n));
        if (m.sd[j] == 0.0) m.sd[j] = 1.0;
    }

    // standardized design matrix once
    Tensor z({n, d});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < d; ++j) z.at2(s, j) = (x.at2(s, j) - m.mean[j]) / m.sd[j];

    std::vector<double> logits(k), p(k), gw(k * d), gb(k);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                double acc = m.b[c];
                const double* wc = m.w.data() + c * d;
                for (std::size_t j = 0; j < d; ++j) acc += wc[j] * z.at2(s, j);
                logits[c] = acc;
                mx = std::max(mx, acc);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                p[c] = std::exp(logits[c] - mx);
                sum += p[c];
            }
            for (std::size_t c = 0; c < k; ++c) {
                p[c] /= sum;
                const double resid = p[c] - (y[s] == static_cast<int>(c) ? 1.0 : 0.0);
                gb[c] += resid;
                double* gwc = gw.data() + c * d;
                for (std::size_t j = 0; j < d; ++j) gwc[j] += resid * z.at2(s, j);
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < k; ++c) {
            m.b[c] -= lr * gb[c] * inv_n;
            double* wc = m.w.data() + c * d;
            const double* gwc = gw.data() + c * d;
            for (std::size_t j = 0; j < d; ++j)
                wc[j] -= lr * (gwc[j] * inv_n + 2.0 * l2 * wc[j]);
        }
    }
    return m;
}

int knn_predict(const Tensor& x_train, const std::vector<int>& y_train,
                const std::vector<double>& x, std::size_t k) {
    check_matrix(x_train, "knn");
    if (y_train.size() != x_train.shape[0])
        throw DimensionMismatch("knn: |y| != rows of training matrix");
    const auto nb = nearest(x_train, x, k);

    int max_label = 0;
    for (std::size_t i : nb) max_label = std::max(max_label, y_train[i]);
    const std::size_t nc = static_cast<std::size_t>(max_label) + 1;
    std::vector<std::size_t> votes(nc, 0);
    std::vector<double> dist_sum(nc, 0.0);
    const std::size_t d = x_train.shape[1];
    for (std::size_t i : nb) {
        const int c = y_train[i];
        ++votes[c];
        double acc = 0.0;
        const double* row = x_train.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - x[j];
            acc += diff * diff;
        }
        dist_sum[c] += std::sqrt(acc);
    }

    std::size_t top_votes = 0;
    for (std::size_t c = 0; c < nc; ++c) top_votes = std::max(top_votes, votes[c]);
    int best = -1;
    double best_mean = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
        if (votes[c] != top_votes) continue;
        const double mean_dist = dist_sum[c] / static_cast<double>(votes[c]);
        // ties on mean distance fall through to the lowest class index,
        // because strict < keeps the earlier class
        if (mean_dist < best_mean) {
            best_mean = mean_dist;
            best = static_cast<int>(c);
        }
    }
    return best;
}

Tensor knn_predict_proba(const Tensor& x_train, const std::vector<int>& y_train,
                         const Tensor& x, std::size_t k, std::size_t n_classes) {
    check_matrix(x_train, "knn");
    check_matrix(x, "knn");
    if (x.shape[1] != x_train.shape[1]) throw DimensionMismatch("knn: feature count mismatch");
    Tensor probs({x.shape[0], n_classes});
    std::vector<double> q(x.shape[1]);
    for (std::size_t s = 0; s < x.shape[0]; ++s) {
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = x.at2(s, j);
        for (std::size_t i : nearest(x_train, q, k)) {
            if (y_train[i] < 0 || static_cast<std::size_t>(y_train[i]) >= n_classes)
                throw DataError("knn: label outside [0, n_classes)");
            probs.at2(s, static_cast<std::size_t>(y_train[i])) += 1.0;
        }
        for (std::size_t c = 0; c < n_classes; ++c) probs.at2(s, c) /= static_cast<double>(k);
    }
    return probs;
}

}  // namespace nirsgaf::baselines
