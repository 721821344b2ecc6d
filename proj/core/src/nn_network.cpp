#include "nirsgaf/nn_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nirsgaf/errors.hpp"

namespace nirsgaf::nn {

using nlohmann::json;

namespace {

constexpr std::size_t kPredictBatch = 128;

std::unique_ptr<Layer> build_layer(const LayerSpec& ls) {
    if (ls.kind == "conv2d")
        return std::make_unique<Conv2d>(ls.out_channels, ls.kernel, ls.stride, ls.padding,
                                        ls.relu);
    if (ls.kind == "maxpool") return std::make_unique<MaxPool>(ls.window, ls.pool_stride);
    if (ls.kind == "batchnorm") return std::make_unique<BatchNorm>();
    if (ls.kind == "flatten") return std::make_unique<Flatten>();
    if (ls.kind == "dense") {
        if (ls.activation != "relu" && ls.activation != "linear")
            throw ConfigError("dense: unknown activation '" + ls.activation + "'");
        return std::make_unique<Dense>(ls.units, ls.activation == "relu");
    }
    if (ls.kind == "dropout") return std::make_unique<Dropout>(ls.rate);
    if (ls.kind == "softmax") return std::make_unique<Softmax>();
    throw ConfigError("unknown layer kind '" + ls.kind + "'");
}

void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

LayerSpec layer_from_json(const json& j, std::size_t index) {
    const std::string where = "layers[" + std::to_string(index) + "]";
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError(where + ": expected an object with a 'kind' key");
    LayerSpec ls;
    ls.kind = j.at("kind").get<std::string>();
    if (ls.kind == "conv2d") {
        require_keys(j, {"kind", "out_channels", "kernel", "stride", "padding", "relu"}, where);
        if (!j.contains("out_channels")) throw ConfigError(where + ": conv2d needs out_channels");
        ls.out_channels = j.at("out_channels").get<std::size_t>();
        ls.kernel = j.value("kernel", std::size_t{3});
        ls.stride = j.value("stride", std::size_t{1});
        if (j.contains("padding")) {
            if (j.at("padding").is_string()) {
                if (j.at("padding").get<std::string>() != "same")
                    throw ConfigError(where + ": padding must be an integer or \"same\"");
                ls.padding = Conv2d::kSamePadding;
            } else {
                ls.padding = j.at("padding").get<int>();
                if (ls.padding < 0) throw ConfigError(where + ": negative padding");
            }
        }
        ls.relu = j.value("relu", false);
    } else if (ls.kind == "maxpool") {
        require_keys(j, {"kind", "window", "stride"}, where);
        ls.window = j.value("window", std::size_t{2});
        ls.pool_stride = j.value("stride", std::size_t{0});
    } else if (ls.kind == "dense") {
        require_keys(j, {"kind", "units", "activation"}, where);
        if (!j.contains("units")) throw ConfigError(where + ": dense needs units");
        ls.units = j.at("units").get<std::size_t>();
        ls.activation = j.value("activation", std::string("linear"));
    } else if (ls.kind == "dropout") {
        require_keys(j, {"kind", "rate"}, where);
        ls.rate = j.value("rate", 0.5);
    } else if (ls.kind == "batchnorm" || ls.kind == "flatten" || ls.kind == "softmax") {
        require_keys(j, {"kind"}, where);
    } else {
        throw ConfigError(where + ": unknown layer kind '" + ls.kind + "'");
    }
    return ls;
}

json layer_to_json(const LayerSpec& ls) {
    json j;
    j["kind"] = ls.kind;
    if (ls.kind == "conv2d") {
        j["out_channels"] = ls.out_channels;
        j["kernel"] = ls.kernel;
        j["stride"] = ls.stride;
        if (ls.padding == Conv2d::kSamePadding)
            j["padding"] = "same";
        else
            j["padding"] = ls.padding;
        j["relu"] = ls.relu;
    } else if (ls.kind == "maxpool") {
        j["window"] = ls.window;
        if (ls.pool_stride != 0) j["stride"] = ls.pool_stride;
    } else if (ls.kind == "dense") {
        j["units"] = ls.units;
        j["activation"] = ls.activation;
    } else if (ls.kind == "dropout") {
        j["rate"] = ls.rate;
    }
    return j;
}

}  // namespace

NetworkSpec NetworkSpec::default_spec(std::size_t image_size) {
    NetworkSpec spec;
    spec.input_shape = {1, image_size, image_size};
    spec.l2_strength = 0.3;
    auto conv = [](std::size_t ch) {
        LayerSpec ls;
        ls.kind = "conv2d";
        ls.out_channels = ch;
        ls.kernel = 3;
        ls.stride = 1;
        ls.padding = Conv2d::kSamePadding;
        ls.relu = true;
        return ls;
    };
    auto pool = [] {
        LayerSpec ls;
        ls.kind = "maxpool";
        ls.window = 2;
        return ls;
    };
    for (std::size_t ch : {8u, 16u, 32u, 64u}) {
        spec.layers.push_back(conv(ch));
        spec.layers.push_back(pool());
    }
    spec.layers.push_back({.kind = "batchnorm"});
    spec.layers.push_back({.kind = "flatten"});
    LayerSpec d1;
    d1.kind = "dense";
    d1.units = 64;
    d1.activation = "relu";
    spec.layers.push_back(d1);
    LayerSpec dr;
    dr.kind = "dropout";
    dr.rate = 0.5;
    spec.layers.push_back(dr);
    LayerSpec d2;
    d2.kind = "dense";
    d2.units = 3;
    d2.activation = "linear";
    spec.layers.push_back(d2);
    spec.layers.push_back({.kind = "softmax"});
    return spec;
}

NetworkSpec NetworkSpec::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("network config: expected a JSON object");
    require_keys(j, {"input_shape", "l2_strength", "layers"}, "network config");
    NetworkSpec spec;
    try {
        if (j.contains("input_shape")) {
            spec.input_shape = j.at("input_shape").get<std::vector<std::size_t>>();
        }
        spec.l2_strength = j.value("l2_strength", 0.3);
        if (!j.contains("layers") || !j.at("layers").is_array())
            throw ConfigError("network config: 'layers' array is required");
        std::size_t i = 0;
        for (const auto& lj : j.at("layers")) spec.layers.push_back(layer_from_json(lj, i++));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("network config: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string NetworkSpec::to_json_text(int indent) const {
    json j;
    j["input_shape"] = input_shape;
    j["l2_strength"] = l2_strength;
    j["layers"] = json::array();
    for (const auto& ls : layers) j["layers"].push_back(layer_to_json(ls));
    return j.dump(indent) + "\n";
}

NetworkSpec NetworkSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void NetworkSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json_text();
    if (!out) throw IoError("write failed: " + path);
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw ConfigError("network config: no layers");
    if (layers.back().kind != "softmax")
        throw ConfigError("network config: last layer must be softmax");
    if (l2_strength < 0.0) throw ConfigError("network config: l2_strength must be >= 0");
    std::vector<std::size_t> shape = input_shape;
    for (const auto& ls : layers) {
        auto layer = build_layer(ls);
        shape = layer->configure(shape);
    }
    if (shape.size() != 1 || shape[0] != kOutputClasses)
        throw ConfigError("network config: output must be 3 classes, got shape with " +
                          std::to_string(shape_product(shape)) + " units");
}

Network::Network(const NetworkSpec& spec, uint64_t seed) : spec_(spec) {
    if (spec.layers.empty()) throw ConfigError("network: no layers");
    if (spec.layers.back().kind != "softmax")
        throw ConfigError("network: last layer must be softmax");
    std::vector<std::size_t> shape = spec.input_shape;
    // One init stream shared across layers, consumed in layer order.
    Rng rng(seed);
    std::size_t index = 0;
    for (const auto& ls : spec.layers) {
        auto layer = build_layer(ls);
        layer->set_name(ls.kind + "_" + std::to_string(index++));
        shape = layer->configure(shape);
        layer->init_params(rng);
        layers_.push_back(std::move(layer));
    }
    output_shape_ = shape;
    reseed_dropout(splitmix64(seed));
}

Tensor Network::forward(const Tensor& x, Mode mode) {
    Tensor t = x;
    for (auto& layer : layers_) t = layer->forward(t, mode);
    return t;
}

Tensor Network::predict_proba(const Tensor& x) {
    const std::size_t n = x.shape[0];
    if (n <= kPredictBatch) return forward(x, Mode::kEval);
    std::vector<std::size_t> out_shape{n};
    out_shape.insert(out_shape.end(), output_shape_.begin(), output_shape_.end());
    Tensor out(out_shape);
    const std::size_t block = shape_product(output_shape_);
    for (std::size_t start = 0; start < n; start += kPredictBatch) {
        const std::size_t stop = std::min(n, start + kPredictBatch);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        Tensor part = forward(x.gather(idx), Mode::kEval);
        std::copy(part.data.begin(), part.data.end(), out.data.begin() + start * block);
    }
    return out;
}

std::vector<int> Network::predict(const Tensor& x) {
    Tensor probs = predict_proba(x);
    const std::size_t n = probs.shape[0], k = probs.shape[1];
    std::vector<int> labels(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (probs.at2(s, j) > probs.at2(s, best)) best = j;
        labels[s] = static_cast<int>(best);
    }
    return labels;
}

double Network::loss(const Tensor& probs, const Tensor& one_hot) {
    if (probs.shape != one_hot.shape)
        throw ShapeMismatch("loss: probs " + probs.shape_str() + " vs labels " +
                            one_hot.shape_str());
    const std::size_t n = probs.shape[0];
    if (n == 0) throw EmptyDataset("loss: empty batch");
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (one_hot.data[i] != 0.0)
            ce -= one_hot.data[i] * std::log(probs.data[i] + kLogEpsilon);
    ce /= static_cast<double>(n);

    double reg = 0.0;
    for (const auto& pv : params())
        if (pv.is_kernel)
            for (double w : *pv.value) reg += w * w;
    return ce + spec_.l2_strength * reg;
}

void Network::backward(const Tensor& probs, const Tensor& one_hot) {
    if (probs.shape != one_hot.shape)
        throw ShapeMismatch("backward: probs " + probs.shape_str() + " vs labels " +
                            one_hot.shape_str());
    if (!probs.all_finite()) throw NumericalInstability("backward: non-finite probabilities");
    zero_grads();
    const std::size_t n = probs.shape[0];
    Tensor d(probs.shape);
    for (std::size_t i = 0; i < probs.size(); ++i)
        d.data[i] = -one_hot.data[i] / (probs.data[i] + kLogEpsilon) / static_cast<double>(n);
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
    if (spec_.l2_strength != 0.0)
        for (const auto& pv : params())
            if (pv.is_kernel)
                for (std::size_t i = 0; i < pv.value->size(); ++i)
                    (*pv.grad)[i] += 2.0 * spec_.l2_strength * (*pv.value)[i];
}

std::vector<ParamView> Network::params() {
    std::vector<ParamView> out;
    for (auto& layer : layers_)
        for (auto& pv : layer->params()) out.push_back(pv);
    return out;
}

std::vector<StateView> Network::state() {
    std::vector<StateView> out;
    for (auto& layer : layers_)
        for (auto& sv : layer->state()) out.push_back(sv);
    return out;
}

void Network::zero_grads() {
    for (auto& pv : params()) std::fill(pv.grad->begin(), pv.grad->end(), 0.0);
}

void Network::reseed_dropout(uint64_t seed) {
    std::size_t index = 0;
    for (auto& layer : layers_)
        if (auto* d = dynamic_cast<Dropout*>(layer.get()))
            d->reseed(splitmix64(seed ^ splitmix64(0xd0u + index++)));
}

Tensor Network::one_hot(const std::vector<int>& y, std::size_t k) {
    Tensor t({y.size(), k});
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= k)
            throw DataError("label " + std::to_string(y[i]) + " outside [0, " +
                            std::to_string(k) + ")");
        t.at2(i, static_cast<std::size_t>(y[i])) = 1.0;
    }
    return t;
}

}  // namespace nirsgaf::nn
