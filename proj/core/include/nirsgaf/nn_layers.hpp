// Layer zoo for the CNN engine: conv2d (+fused relu), maxpool, batchnorm,
// flatten, dense, dropout, softmax. Everything is double precision and
// single-threaded so analytic gradients can be checked against central
// finite differences to tight tolerances.
//
// Shape convention: tensors carry the batch as axis 0. Convolutional stages
// run on [N, C, H, W]; dense stages on [N, D]. configure() receives the
// per-sample shape (without N) and returns the per-sample output shape.
//
// forward(x, kTrain) caches whatever backward needs; backward(dy) consumes
// those caches, accumulates parameter gradients and returns d(loss)/d(input).
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nirsgaf/rng.hpp"
#include "nirsgaf/tensor.hpp"

namespace nirsgaf::nn {

enum class Mode { kTrain, kEval };

// Trainable parameter exposed by a layer. Kernels (and only kernels)
// participate in L2 regularization.
struct ParamView {
    std::string name;
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;
    bool is_kernel = false;
};

// Non-trainable buffer that must survive serialization (batchnorm running
// statistics).
struct StateView {
    std::string name;
    std::vector<double>* value = nullptr;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;

    // Validates the incoming per-sample shape, sizes parameters, returns the
    // outgoing per-sample shape.
    virtual std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) = 0;

    // Fills trainable parameters; layers without parameters do nothing.
    virtual void init_params(Rng&) {}

    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;

    virtual std::vector<ParamView> params() { return {}; }
    virtual std::vector<StateView> state() { return {}; }

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

private:
    std::string name_;
};

// 2-D convolution via im2col + matrix multiply, optional fused ReLU.
// Weights are uniform on ±sqrt(6 / (fan_in + fan_out)), biases zero.
class Conv2d final : public Layer {
public:
    // padding in pixels on every side; kSamePadding = (kernel-1)/2, which
    // preserves H and W at stride 1 (kernel must be odd).
    static constexpr int kSamePadding = -1;

    Conv2d(std::size_t out_channels, std::size_t kernel, std::size_t stride, int padding,
           bool relu);

    std::string kind() const override { return "conv2d"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    void init_params(Rng& rng) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamView> params() override;

private:
    std::size_t out_c_, k_, stride_;
    int pad_spec_;
    bool relu_;
    std::size_t pad_ = 0;
    std::size_t in_c_ = 0, in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
    std::vector<double> w_, b_, gw_, gb_;  // w: [out_c][in_c][k][k] flat
    // caches from the last forward
    std::vector<double> cols_;    // [in_c*k*k][N*out_h*out_w]
    std::vector<char> relu_mask_; // per output element, if relu
    std::size_t last_n_ = 0;
};

// Max pooling, window w stride s (s = w by default); no padding.
class MaxPool final : public Layer {
public:
    MaxPool(std::size_t window, std::size_t stride);

    std::string kind() const override { return "maxpool"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::size_t window_, stride_;
    std::size_t c_ = 0, in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
    std::vector<std::size_t> argmax_;  // flat input index per output element
    std::size_t last_n_ = 0;
};

// Batch normalization over the batch (and spatial dims for 4-D input),
// per channel / per feature. Train mode uses batch statistics and updates
// running averages (momentum 0.9); eval mode uses the running averages.
class BatchNorm final : public Layer {
public:
    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.9;

    std::string kind() const override { return "batchnorm"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    void init_params(Rng&) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamView> params() override;
    std::vector<StateView> state() override;

private:
    std::size_t channels_ = 0, spatial_ = 1;  // elements per channel per sample
    bool four_d_ = false;
    std::vector<std::size_t> sample_shape_;
    std::vector<double> gamma_, beta_, ggamma_, gbeta_;
    std::vector<double> running_mean_, running_var_;
    // caches
    std::vector<double> xhat_, inv_std_;
    std::size_t last_n_ = 0;
};

// [N, C, H, W] -> [N, C*H*W].
class Flatten final : public Layer {
public:
    std::string kind() const override { return "flatten"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<std::size_t> in_shape_;
};

// Fully connected layer, optional fused ReLU. Same init rule as Conv2d.
class Dense final : public Layer {
public:
    Dense(std::size_t units, bool relu);

    std::string kind() const override { return "dense"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    void init_params(Rng& rng) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;
    std::vector<ParamView> params() override;

    std::size_t units() const { return units_; }

private:
    std::size_t units_, in_ = 0;
    bool relu_;
    std::vector<double> w_, b_, gw_, gb_;  // w: [units][in]
    Tensor input_;
    std::vector<char> relu_mask_;
};

// Inverted dropout: train mode zeroes each element with probability `rate`
// and scales survivors by 1/(1-rate); eval mode is the identity. The mask
// stream is owned by the layer and reseedable for reproducible training.
class Dropout final : public Layer {
public:
    explicit Dropout(double rate);

    std::string kind() const override { return "dropout"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;

    void reseed(uint64_t seed) { rng_ = Rng(seed); }
    double rate() const { return rate_; }

private:
    double rate_;
    Rng rng_{0};
    std::vector<double> mask_;  // 0 or 1/(1-rate), per element
    bool mask_active_ = false;
};

// Row-wise softmax over the last (feature) axis of [N, K].
class Softmax final : public Layer {
public:
    std::string kind() const override { return "softmax"; }
    std::vector<std::size_t> configure(const std::vector<std::size_t>& in_shape) override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& dy) override;

private:
    Tensor probs_;
};

}  // namespace nirsgaf::nn
