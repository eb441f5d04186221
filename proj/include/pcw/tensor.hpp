#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "pcw/error.hpp"

namespace pcw {

// Dense row-major tensor of doubles. All network math runs in 64-bit,
// which keeps the finite-difference gradient checks tight.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_contract(data_.size() == checked_numel(shape_),
                       "Tensor: data length does not match shape product");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // Same data, new shape; element count must not change.
    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        Tensor t(std::move(new_shape), data_);
        return t;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const;

    static std::size_t shape_numel(const std::vector<std::size_t>& shape);

private:
    std::size_t checked_numel(const std::vector<std::size_t>& shape) const {
        return shape_numel(shape);
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// A learnable tensor paired with its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

}  // namespace pcw
