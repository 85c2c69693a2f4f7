#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vcnac/error.hpp"

namespace vcnac::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major float tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
    Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_)) {
            throw InputError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    std::vector<float>& storage() noexcept { return data_; }
    const std::vector<float>& storage() const noexcept { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // Row r of a rank-2 tensor.
    std::span<float> row(std::size_t r) { return std::span(data_).subspan(r * shape_.at(1), shape_.at(1)); }
    std::span<const float> row(std::size_t r) const {
        return std::span(data_).subspan(r * shape_.at(1), shape_.at(1));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

}  // namespace vcnac::nn
