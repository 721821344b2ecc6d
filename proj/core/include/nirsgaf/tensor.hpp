// Dense row-major n-d array of doubles. The carrier for all network
// computation; images are [N, C, H, W], feature matrices [N, D].
#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace nirsgaf {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // [N, D]
    double& at2(std::size_t n, std::size_t d) { return data[n * shape[1] + d]; }
    double at2(std::size_t n, std::size_t d) const { return data[n * shape[1] + d]; }

    // [N, C, H, W]
    double& at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double at4(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    // Number of elements per leading-axis slice (shape[1] * shape[2] * ...).
    std::size_t slice_size() const;

    // Copy of rows `indices` along axis 0.
    Tensor gather(const std::vector<std::size_t>& indices) const;

    bool all_finite() const;
    std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& s);

}  // namespace nirsgaf
