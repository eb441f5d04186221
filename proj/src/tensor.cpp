#include "pcw/tensor.hpp"

#include <cmath>

namespace pcw {

std::size_t Tensor::shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        check_contract(d > 0, "Tensor: zero-sized dimension");
        n *= d;
    }
    return shape.empty() ? 0 : n;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace pcw
