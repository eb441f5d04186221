#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pcw/rng.hpp"
#include "pcw/tensor.hpp"

namespace pcw::nn {

// Layer math for the warning network. Every forward has a matching backward
// returning exact partial derivatives of the forward map; the test suite
// verifies them against central finite differences.
//
// Spatial tensors are [C,H,W] or batched [B,C,H,W]; fully connected ones are
// [D] or [B,D]. Batched and single-sample calls share one implementation.

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

// Cross-correlation with zero padding. Output H' = floor((H + 2*pad - k)/stride) + 1.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      std::size_t stride, std::size_t pad);

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          std::size_t stride, std::size_t pad);

struct PoolResult {
    Tensor output;
    // Flat index into the input tensor of each window's winner; ties go to
    // the lowest flat index so backward routing is deterministic.
    std::vector<std::size_t> argmax;
};

PoolResult maxpool_forward(const Tensor& input, std::size_t k, std::size_t stride);
// Rectangular window, for feature maps that are narrower than the nominal
// square window in one dimension.
PoolResult maxpool_forward(const Tensor& input, std::size_t kh_n, std::size_t kw_n,
                           std::size_t stride);
Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                        const std::vector<std::size_t>& input_shape);

Tensor relu_forward(const Tensor& input);
// grad passes where the saved forward input was > 0 (subgradient 0 at 0).
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

struct FcGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_bias;
};

// out = W x + b with W of shape [D_out, D_in].
Tensor fc_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
FcGrads fc_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights);

// Row-wise softmax, stabilized by max subtraction. Input [C] or [B,C], C >= 2.
Tensor softmax(const Tensor& logits);

// Mean negative log likelihood over the batch; targets are one-hot rows.
// log is clamped at 1e-12 so saturated outputs stay finite.
double cross_entropy_loss(const Tensor& probs, const Tensor& targets);

// d(cross_entropy)/d(logits) for softmax outputs: (probs - targets) / B.
Tensor softmax_cross_entropy_grad(const Tensor& probs, const Tensor& targets);

// (1/(2B)) * sum_i ||o_i - s_i||^2 over rows of [B,D].
double euclidean_loss(const Tensor& outputs, const Tensor& targets);

// d(euclidean_loss)/d(outputs) = (outputs - targets) / B.
Tensor euclidean_loss_grad(const Tensor& outputs, const Tensor& targets);

// Combined objective; the classification term plus lambda times the
// segmentation term.
double total_loss(double loss_ce, double loss_euclid, double lambda);

// Gaussian init with stddev sqrt(2 / fan_in).
Tensor he_init(const std::vector<std::size_t>& shape, std::size_t fan_in, Rng& rng);

struct OptimizerConfig {
    double learning_rate = 0.001;
    double weight_decay = 0.0001;
    std::size_t batch_size = 128;
    std::size_t iterations = 2000;

    void validate() const;
};

// w <- w - lr * (grad + weight_decay * w), applied to every parameter.
void sgd_step(std::vector<Parameter>& params, const OptimizerConfig& config);
void zero_grads(std::vector<Parameter>& params);

}  // namespace pcw::nn
