#include "nirsgaf/nn_layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nirsgaf/errors.hpp"

namespace nirsgaf::nn {

namespace {

// C[M x N] += A[M x K] * B[K x N]; ikj order keeps the inner loop streaming
// over contiguous rows of B and C.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[M x N] += A[M x K] * B^T, where B is stored [N x K]: rows of A and B are
// contiguous, so each output element is a cache-friendly dot product.
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

// C[M x N] += A^T * B, where A is stored [K x M].
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

void check_sample_shape(const Tensor& x, const std::vector<std::size_t>& expect,
                        const std::string& where) {
    if (x.rank() != expect.size() + 1)
        throw ShapeMismatch(where + ": input rank " + std::to_string(x.rank()) + ", expected " +
                            std::to_string(expect.size() + 1));
    for (std::size_t i = 0; i < expect.size(); ++i)
        if (x.shape[i + 1] != expect[i])
            throw ShapeMismatch(where + ": input sample shape " + x.shape_str() +
                                " does not match configured shape");
}

}  // namespace

// --- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride, int padding,
               bool relu)
    : out_c_(out_channels), k_(kernel), stride_(stride), pad_spec_(padding), relu_(relu) {
    if (out_channels == 0 || kernel == 0 || stride == 0)
        throw ConfigError("conv2d: out_channels, kernel and stride must be positive");
    if (padding < 0 && padding != kSamePadding)
        throw ConfigError("conv2d: negative padding");
}

std::vector<std::size_t> Conv2d::configure(const std::vector<std::size_t>& in_shape) {
    if (in_shape.size() != 3)
        throw ShapeMismatch("conv2d expects [C, H, W] input, got rank " +
                            std::to_string(in_shape.size()));
    in_c_ = in_shape[0];
    in_h_ = in_shape[1];
    in_w_ = in_shape[2];
    if (pad_spec_ == kSamePadding) {
        if (k_ % 2 == 0 || stride_ != 1)
            throw ConfigError("conv2d: 'same' padding needs an odd kernel and stride 1");
        pad_ = (k_ - 1) / 2;
    } else {
        pad_ = static_cast<std::size_t>(pad_spec_);
    }
    if (in_h_ + 2 * pad_ < k_ || in_w_ + 2 * pad_ < k_)
        throw ShapeMismatch("conv2d: kernel larger than padded input");
    out_h_ = (in_h_ + 2 * pad_ - k_) / stride_ + 1;
    out_w_ = (in_w_ + 2 * pad_ - k_) / stride_ + 1;

    const std::size_t wn = out_c_ * in_c_ * k_ * k_;
    w_.assign(wn, 0.0);
    gw_.assign(wn, 0.0);
    b_.assign(out_c_, 0.0);
    gb_.assign(out_c_, 0.0);
    return {out_c_, out_h_, out_w_};
}

void Conv2d::init_params(Rng& rng) {
    const std::size_t rf = in_c_ * k_ * k_;
    const double limit = glorot_limit(rf, out_c_ * k_ * k_);
    for (double& v : w_) v = rng.uniform(-limit, limit);
    std::fill(b_.begin(), b_.end(), 0.0);
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
    check_sample_shape(x, {in_c_, in_h_, in_w_}, "conv2d");
    const std::size_t n = x.shape[0];
    last_n_ = n;
    const std::size_t ckk = in_c_ * k_ * k_;
    const std::size_t ncol = n * out_h_ * out_w_;

    cols_.assign(ckk * ncol, 0.0);
    for (std::size_t c = 0; c < in_c_; ++c)
        for (std::size_t kh = 0; kh < k_; ++kh)
            for (std::size_t kw = 0; kw < k_; ++kw) {
                double* row = cols_.data() + ((c * k_ + kh) * k_ + kw) * ncol;
                for (std::size_t s = 0; s < n; ++s) {
                    const double* img = x.data.data() + (s * in_c_ + c) * in_h_ * in_w_;
                    for (std::size_t oh = 0; oh < out_h_; ++oh) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + kh) -
                                                  static_cast<std::ptrdiff_t>(pad_);
                        double* dst = row + (s * out_h_ + oh) * out_w_;
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h_)) continue;
                        for (std::size_t ow = 0; ow < out_w_; ++ow) {
                            const std::ptrdiff_t iw =
                                static_cast<std::ptrdiff_t>(ow * stride_ + kw) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_w_)) continue;
                            dst[ow] = img[ih * static_cast<std::ptrdiff_t>(in_w_) + iw];
                        }
                    }
                }
            }

    // y_mat[f][col] = sum_r w[f][r] * cols[r][col] + b[f]
    std::vector<double> y_mat(out_c_ * ncol, 0.0);
    gemm_nn(w_.data(), cols_.data(), y_mat.data(), out_c_, ckk, ncol);

    Tensor y({n, out_c_, out_h_, out_w_});
    if (relu_) relu_mask_.assign(n * out_c_ * out_h_ * out_w_, 0);
    const std::size_t plane = out_h_ * out_w_;
    for (std::size_t f = 0; f < out_c_; ++f) {
        const double* src = y_mat.data() + f * ncol;
        for (std::size_t s = 0; s < n; ++s) {
            double* dst = y.data.data() + (s * out_c_ + f) * plane;
            const double* sp = src + s * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                double v = sp[i] + b_[f];
                if (relu_) {
                    const std::size_t mi = (s * out_c_ + f) * plane + i;
                    if (v > 0.0)
                        relu_mask_[mi] = 1;
                    else
                        v = 0.0;
                }
                dst[i] = v;
            }
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const std::size_t n = last_n_;
    check_sample_shape(dy, {out_c_, out_h_, out_w_}, "conv2d backward");
    if (dy.shape[0] != n) throw ShapeMismatch("conv2d backward: batch size changed");
    const std::size_t ckk = in_c_ * k_ * k_;
    const std::size_t ncol = n * out_h_ * out_w_;
    const std::size_t plane = out_h_ * out_w_;

    // g_mat[f][col], relu mask applied
    std::vector<double> g_mat(out_c_ * ncol);
    for (std::size_t f = 0; f < out_c_; ++f) {
        double* dst = g_mat.data() + f * ncol;
        for (std::size_t s = 0; s < n; ++s) {
            const double* src = dy.data.data() + (s * out_c_ + f) * plane;
            double* dp = dst + s * plane;
            if (relu_) {
                const char* m = relu_mask_.data() + (s * out_c_ + f) * plane;
                for (std::size_t i = 0; i < plane; ++i) dp[i] = m[i] ? src[i] : 0.0;
            } else {
                std::memcpy(dp, src, plane * sizeof(double));
            }
        }
    }

    gemm_nt(g_mat.data(), cols_.data(), gw_.data(), out_c_, ncol, ckk);
    for (std::size_t f = 0; f < out_c_; ++f) {
        const double* gp = g_mat.data() + f * ncol;
        double acc = 0.0;
        for (std::size_t i = 0; i < ncol; ++i) acc += gp[i];
        gb_[f] += acc;
    }

    // dcols[r][col] = sum_f w[f][r] * g[f][col]
    std::vector<double> dcols(ckk * ncol, 0.0);
    gemm_tn(w_.data(), g_mat.data(), dcols.data(), ckk, out_c_, ncol);

    Tensor dx({n, in_c_, in_h_, in_w_});
    for (std::size_t c = 0; c < in_c_; ++c)
        for (std::size_t kh = 0; kh < k_; ++kh)
            for (std::size_t kw = 0; kw < k_; ++kw) {
                const double* row = dcols.data() + ((c * k_ + kh) * k_ + kw) * ncol;
                for (std::size_t s = 0; s < n; ++s) {
                    double* img = dx.data.data() + (s * in_c_ + c) * in_h_ * in_w_;
                    for (std::size_t oh = 0; oh < out_h_; ++oh) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + kh) -
                                                  static_cast<std::ptrdiff_t>(pad_);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h_)) continue;
                        const double* src = row + (s * out_h_ + oh) * out_w_;
                        for (std::size_t ow = 0; ow < out_w_; ++ow) {
                            const std::ptrdiff_t iw =
                                static_cast<std::ptrdiff_t>(ow * stride_ + kw) -
                                static_cast<std::ptrdiff_t>(pad_);
                            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_w_)) continue;
                            img[ih * static_cast<std::ptrdiff_t>(in_w_) + iw] += src[ow];
                        }
                    }
                }
            }
    return dx;
}

std::vector<ParamView> Conv2d::params() {
    return {{name() + ".kernel", &w_, &gw_, true}, {name() + ".bias", &b_, &gb_, false}};
}

// --- MaxPool ---------------------------------------------------------------

MaxPool::MaxPool(std::size_t window, std::size_t stride)
    : window_(window), stride_(stride == 0 ? window : stride) {
    if (window == 0) throw ConfigError("maxpool: window must be positive");
}

std::vector<std::size_t> MaxPool::configure(const std::vector<std::size_t>& in_shape) {
    if (in_shape.size() != 3)
        throw ShapeMismatch("maxpool expects [C, H, W] input, got rank " +
                            std::to_string(in_shape.size()));
    c_ = in_shape[0];
    in_h_ = in_shape[1];
    in_w_ = in_shape[2];
    if (in_h_ < window_ || in_w_ < window_)
        throw ShapeMismatch("maxpool: window larger than input");
    out_h_ = (in_h_ - window_) / stride_ + 1;
    out_w_ = (in_w_ - window_) / stride_ + 1;
    return {c_, out_h_, out_w_};
}

Tensor MaxPool::forward(const Tensor& x, Mode) {
    check_sample_shape(x, {c_, in_h_, in_w_}, "maxpool");
    const std::size_t n = x.shape[0];
    last_n_ = n;
    Tensor y({n, c_, out_h_, out_w_});
    argmax_.assign(y.size(), 0);
    std::size_t o = 0;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t c = 0; c < c_; ++c) {
            const std::size_t base = (s * c_ + c) * in_h_ * in_w_;
            for (std::size_t oh = 0; oh < out_h_; ++oh)
                for (std::size_t ow = 0; ow < out_w_; ++ow, ++o) {
                    const std::size_t h0 = oh * stride_, w0 = ow * stride_;
                    // ties resolve to the first element in row-major scan
                    std::size_t best = base + h0 * in_w_ + w0;
                    double bv = x.data[best];
                    for (std::size_t dh = 0; dh < window_; ++dh)
                        for (std::size_t dw = 0; dw < window_; ++dw) {
                            const std::size_t idx = base + (h0 + dh) * in_w_ + (w0 + dw);
                            if (x.data[idx] > bv) {
                                bv = x.data[idx];
                                best = idx;
                            }
                        }
                    y.data[o] = bv;
                    argmax_[o] = best;
                }
        }
    return y;
}

Tensor MaxPool::backward(const Tensor& dy) {
    check_sample_shape(dy, {c_, out_h_, out_w_}, "maxpool backward");
    if (dy.shape[0] != last_n_) throw ShapeMismatch("maxpool backward: batch size changed");
    Tensor dx({last_n_, c_, in_h_, in_w_});
    for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
    return dx;
}

// --- BatchNorm -------------------------------------------------------------

std::vector<std::size_t> BatchNorm::configure(const std::vector<std::size_t>& in_shape) {
    sample_shape_ = in_shape;
    if (in_shape.size() == 3) {
        four_d_ = true;
        channels_ = in_shape[0];
        spatial_ = in_shape[1] * in_shape[2];
    } else if (in_shape.size() == 1) {
        four_d_ = false;
        channels_ = in_shape[0];
        spatial_ = 1;
    } else {
        throw ShapeMismatch("batchnorm expects [C, H, W] or [D] input");
    }
    gamma_.assign(channels_, 1.0);
    beta_.assign(channels_, 0.0);
    ggamma_.assign(channels_, 0.0);
    gbeta_.assign(channels_, 0.0);
    running_mean_.assign(channels_, 0.0);
    running_var_.assign(channels_, 1.0);
    return in_shape;
}

void BatchNorm::init_params(Rng&) {
    std::fill(gamma_.begin(), gamma_.end(), 1.0);
    std::fill(beta_.begin(), beta_.end(), 0.0);
    std::fill(running_mean_.begin(), running_mean_.end(), 0.0);
    std::fill(running_var_.begin(), running_var_.end(), 1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    check_sample_shape(x, sample_shape_, "batchnorm");
    const std::size_t n = x.shape[0];
    last_n_ = n;
    const std::size_t m = n * spatial_;  // reduction size per channel
    Tensor y(x.shape);
    xhat_.assign(x.size(), 0.0);
    inv_std_.assign(channels_, 0.0);

    auto element = [&](std::size_t s, std::size_t c, std::size_t p) {
        return (s * channels_ + c) * spatial_ + p;
    };

    for (std::size_t c = 0; c < channels_; ++c) {
        double mean, var;
        if (mode == Mode::kTrain) {
            double sum = 0.0;
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t p = 0; p < spatial_; ++p) sum += x.data[element(s, c, p)];
            mean = sum / static_cast<double>(m);
            double acc = 0.0;
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t p = 0; p < spatial_; ++p) {
                    const double d = x.data[element(s, c, p)] - mean;
                    acc += d * d;
                }
            var = acc / static_cast<double>(m);  // biased, as used for normalization
            running_mean_[c] = kMomentum * running_mean_[c] + (1.0 - kMomentum) * mean;
            running_var_[c] = kMomentum * running_var_[c] + (1.0 - kMomentum) * var;
        } else {
            mean = running_mean_[c];
            var = running_var_[c];
        }
        const double inv = 1.0 / std::sqrt(var + kEpsilon);
        inv_std_[c] = inv;
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t p = 0; p < spatial_; ++p) {
                const std::size_t i = element(s, c, p);
                const double xh = (x.data[i] - mean) * inv;
                xhat_[i] = xh;
                y.data[i] = gamma_[c] * xh + beta_[c];
            }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    check_sample_shape(dy, sample_shape_, "batchnorm backward");
    const std::size_t n = last_n_;
    if (dy.shape[0] != n) throw ShapeMismatch("batchnorm backward: batch size changed");
    const double m = static_cast<double>(n * spatial_);
    Tensor dx(dy.shape);

    auto element = [&](std::size_t s, std::size_t c, std::size_t p) {
        return (s * channels_ + c) * spatial_ + p;
    };

    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t p = 0; p < spatial_; ++p) {
                const std::size_t i = element(s, c, p);
                sum_dy += dy.data[i];
                sum_dy_xhat += dy.data[i] * xhat_[i];
            }
        ggamma_[c] += sum_dy_xhat;
        gbeta_[c] += sum_dy;
        const double scale = gamma_[c] * inv_std_[c] / m;
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t p = 0; p < spatial_; ++p) {
                const std::size_t i = element(s, c, p);
                dx.data[i] = scale * (m * dy.data[i] - sum_dy - xhat_[i] * sum_dy_xhat);
            }
    }
    return dx;
}

std::vector<ParamView> BatchNorm::params() {
    return {{name() + ".gamma", &gamma_, &ggamma_, false},
            {name() + ".beta", &beta_, &gbeta_, false}};
}

std::vector<StateView> BatchNorm::state() {
    return {{name() + ".running_mean", &running_mean_},
            {name() + ".running_var", &running_var_}};
}

// --- Flatten ---------------------------------------------------------------

std::vector<std::size_t> Flatten::configure(const std::vector<std::size_t>& in_shape) {
    if (in_shape.empty()) throw ShapeMismatch("flatten: scalar input");
    in_shape_ = in_shape;
    return {shape_product(in_shape)};
}

Tensor Flatten::forward(const Tensor& x, Mode) {
    check_sample_shape(x, in_shape_, "flatten");
    Tensor y = x;
    y.shape = {x.shape[0], shape_product(in_shape_)};
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    Tensor dx = dy;
    std::vector<std::size_t> s{dy.shape[0]};
    s.insert(s.end(), in_shape_.begin(), in_shape_.end());
    dx.shape = std::move(s);
    return dx;
}

// --- Dense -----------------------------------------------------------------

Dense::Dense(std::size_t units, bool relu) : units_(units), relu_(relu) {
    if (units == 0) throw ConfigError("dense: units must be positive");
}

std::vector<std::size_t> Dense::configure(const std::vector<std::size_t>& in_shape) {
    if (in_shape.size() != 1)
        throw ShapeMismatch("dense expects flat [D] input, got rank " +
                            std::to_string(in_shape.size()) + " (insert a flatten layer)");
    in_ = in_shape[0];
    w_.assign(units_ * in_, 0.0);
    gw_.assign(units_ * in_, 0.0);
    b_.assign(units_, 0.0);
    gb_.assign(units_, 0.0);
    return {units_};
}

void Dense::init_params(Rng& rng) {
    const double limit = glorot_limit(in_, units_);
    for (double& v : w_) v = rng.uniform(-limit, limit);
    std::fill(b_.begin(), b_.end(), 0.0);
}

Tensor Dense::forward(const Tensor& x, Mode) {
    check_sample_shape(x, {in_}, "dense");
    const std::size_t n = x.shape[0];
    input_ = x;
    Tensor y({n, units_});
    gemm_nt(x.data.data(), w_.data(), y.data.data(), n, in_, units_);
    if (relu_) relu_mask_.assign(n * units_, 0);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t u = 0; u < units_; ++u) {
            double v = y.at2(s, u) + b_[u];
            if (relu_) {
                if (v > 0.0)
                    relu_mask_[s * units_ + u] = 1;
                else
                    v = 0.0;
            }
            y.at2(s, u) = v;
        }
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    check_sample_shape(dy, {units_}, "dense backward");
    const std::size_t n = input_.shape[0];
    if (dy.shape[0] != n) throw ShapeMismatch("dense backward: batch size changed");

    Tensor dz = dy;
    if (relu_)
        for (std::size_t i = 0; i < dz.size(); ++i)
            if (!relu_mask_[i]) dz.data[i] = 0.0;

    // gw[u][i] += sum_s dz[s][u] * x[s][i]
    gemm_tn(dz.data.data(), input_.data.data(), gw_.data(), units_, n, in_);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t u = 0; u < units_; ++u) gb_[u] += dz.at2(s, u);

    Tensor dx({n, in_});
    gemm_nn(dz.data.data(), w_.data(), dx.data.data(), n, units_, in_);
    return dx;
}

std::vector<ParamView> Dense::params() {
    return {{name() + ".kernel", &w_, &gw_, true}, {name() + ".bias", &b_, &gb_, false}};
}

// --- Dropout ---------------------------------------------------------------

Dropout::Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
}

std::vector<std::size_t> Dropout::configure(const std::vector<std::size_t>& in_shape) {
    return in_shape;
}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
    if (mode == Mode::kEval || rate_ == 0.0) {
        mask_active_ = false;
        return x;
    }
    mask_active_ = true;
    const double keep = 1.0 - rate_;
    const double scale = 1.0 / keep;
    mask_.resize(x.size());
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = (rng_.uniform01() >= rate_) ? scale : 0.0;
        y.data[i] = x.data[i] * mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (!mask_active_) return dy;
    if (dy.size() != mask_.size()) throw ShapeMismatch("dropout backward: size changed");
    Tensor dx(dy.shape);
    for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = dy.data[i] * mask_[i];
    return dx;
}

// --- Softmax ---------------------------------------------------------------

std::vector<std::size_t> Softmax::configure(const std::vector<std::size_t>& in_shape) {
    if (in_shape.size() != 1)
        throw ShapeMismatch("softmax expects flat [K] input, got rank " +
                            std::to_string(in_shape.size()));
    return in_shape;
}

Tensor Softmax::forward(const Tensor& x, Mode) {
    if (x.rank() != 2) throw ShapeMismatch("softmax: expected [N, K] input");
    const std::size_t n = x.shape[0], k = x.shape[1];
    Tensor y(x.shape);
    for (std::size_t s = 0; s < n; ++s) {
        double mx = x.at2(s, 0);
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, x.at2(s, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double e = std::exp(x.at2(s, j) - mx);
            y.at2(s, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < k; ++j) y.at2(s, j) /= sum;
    }
    probs_ = y;
    return y;
}

Tensor Softmax::backward(const Tensor& dy) {
    if (dy.shape != probs_.shape) throw ShapeMismatch("softmax backward: shape changed");
    const std::size_t n = dy.shape[0], k = dy.shape[1];
    Tensor dx(dy.shape);
    for (std::size_t s = 0; s < n; ++s) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += probs_.at2(s, j) * dy.at2(s, j);
        for (std::size_t j = 0; j < k; ++j)
            dx.at2(s, j) = probs_.at2(s, j) * (dy.at2(s, j) - dot);
    }
    return dx;
}

}  // namespace nirsgaf::nn
