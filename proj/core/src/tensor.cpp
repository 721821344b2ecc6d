#include "nirsgaf/tensor.hpp"

#include <cmath>

#include "nirsgaf/errors.hpp"

namespace nirsgaf {

std::size_t shape_product(const std::vector<std::size_t>& s) {
    std::size_t p = 1;
    for (auto d : s) p *= d;
    return p;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size())
        throw ShapeMismatch("tensor data length " + std::to_string(data.size()) +
                            " does not match shape " + shape_str());
}

std::size_t Tensor::slice_size() const {
    if (shape.empty()) return 0;
    std::size_t p = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) p *= shape[i];
    return p;
}

Tensor Tensor::gather(const std::vector<std::size_t>& indices) const {
    std::vector<std::size_t> s = shape;
    s[0] = indices.size();
    Tensor out(std::move(s));
    const std::size_t stride = slice_size();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const double* src = data.data() + indices[i] * stride;
        double* dst = out.data.data() + i * stride;
        for (std::size_t j = 0; j < stride; ++j) dst[j] = src[j];
    }
    return out;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace nirsgaf
