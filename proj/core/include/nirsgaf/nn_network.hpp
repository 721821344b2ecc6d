// NetworkSpec (declarative architecture + L2 strength, JSON round-trippable)
// and Network (instantiated layers with forward / loss / backward).
//
// Loss is categorical cross-entropy, mean over the batch, plus
// l2_strength * sum of squared kernel weights (kernels only, never biases):
//     L = (1/N) sum_n -sum_k y_nk log(p_nk + 1e-12)  +  l2 * sum w^2
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nirsgaf/nn_layers.hpp"
#include "nirsgaf/tensor.hpp"

namespace nirsgaf::nn {

struct LayerSpec {
    std::string kind;  // conv2d | maxpool | batchnorm | flatten | dense | dropout | softmax

    // conv2d
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    int padding = Conv2d::kSamePadding;  // pixels, or kSamePadding for "same"
    bool relu = false;

    // maxpool
    std::size_t window = 2;
    std::size_t pool_stride = 0;  // 0 = window

    // dense
    std::size_t units = 0;
    std::string activation = "linear";  // "relu" | "linear"

    // dropout
    double rate = 0.5;
};

struct NetworkSpec {
    static constexpr std::size_t kOutputClasses = 3;  // MI, MA, IS

    std::vector<std::size_t> input_shape{1, 64, 64};  // [C, H, W]
    std::vector<LayerSpec> layers;
    double l2_strength = 0.3;

    // conv(8,3x3,same)+relu -> pool2 -> conv(16)+relu -> pool2 -> conv(32)+relu
    // -> pool2 -> conv(64)+relu -> pool2 -> batchnorm -> flatten ->
    // dense(64,relu) -> dropout(0.5) -> dense(3) -> softmax
    static NetworkSpec default_spec(std::size_t image_size = 64);

    // Parses, then validates: terminal softmax, 3 output units, consecutive
    // shapes compatible. Throws ConfigError on schema violations.
    static NetworkSpec from_json_text(const std::string& text);
    std::string to_json_text(int indent = 2) const;
    static NetworkSpec load(const std::string& path);
    void save(const std::string& path) const;

    // Shape-checks the whole stack and enforces the terminal-softmax /
    // 3-class-output invariants. Throws ConfigError / ShapeMismatch.
    void validate() const;
};

class Network {
public:
    Network() = default;
    // Builds the layer stack and initializes parameters from `seed`.
    Network(const NetworkSpec& spec, uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<std::size_t>& output_shape() const { return output_shape_; }
    std::size_t n_classes() const { return output_shape_.back(); }

    Tensor forward(const Tensor& x, Mode mode);
    // Eval-mode probabilities, internally batched.
    Tensor predict_proba(const Tensor& x);
    std::vector<int> predict(const Tensor& x);

    double loss(const Tensor& probs, const Tensor& one_hot);
    // Zeroes gradients, then backpropagates d(loss)/d(probs) through all
    // layers and adds the L2 term's 2*l2*w to kernel gradients.
    void backward(const Tensor& probs, const Tensor& one_hot);

    std::vector<ParamView> params();
    std::vector<StateView> state();
    void zero_grads();
    void reseed_dropout(uint64_t seed);

    static Tensor one_hot(const std::vector<int>& y, std::size_t k);

    static constexpr double kLogEpsilon = 1e-12;

private:
    NetworkSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::size_t> output_shape_;
};

}  // namespace nirsgaf::nn
