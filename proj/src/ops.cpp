#include "pcw/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcw/parallel.hpp"

namespace pcw::nn {

namespace {

struct SpatialDims {
    std::size_t batch, channels, height, width;
    bool batched;
};

SpatialDims spatial_dims(const Tensor& t, const char* op) {
    const auto& s = t.shape();
    if (s.size() == 3) return {1, s[0], s[1], s[2], false};
    if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
    throw ContractError(std::string(op) + ": expected rank 3 or 4 input, got rank " +
                        std::to_string(s.size()));
    }

struct RowDims {
    std::size_t batch, dim;
    bool batched;
};

RowDims row_dims(const Tensor& t, const char* op) {
    const auto& s = t.shape();
    if (s.size() == 1) return {1, s[0], false};
    if (s.size() == 2) return {s[0], s[1], true};
    throw ContractError(std::string(op) + ": expected rank 1 or 2 input, got rank " +
                        std::to_string(s.size()));
}

std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                            const char* op) {
    check_contract(in + 2 * pad >= k, std::string(op) + ": kernel exceeds padded input extent");
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      std::size_t stride, std::size_t pad) {
    const SpatialDims in = spatial_dims(input, "conv2d_forward");
    check_contract(weights.rank() == 4, "conv2d_forward: weights must be [C_out,C_in,k,k]");
    const std::size_t c_out = weights.dim(0);
    const std::size_t c_in = weights.dim(1);
    const std::size_t k = weights.dim(2);
    check_contract(weights.dim(3) == k, "conv2d_forward: kernel must be square");
    check_contract(stride >= 1, "conv2d_forward: stride must be positive");
    check_contract(in.channels == c_in,
                   "conv2d_forward: input channels " + std::to_string(in.channels) +
                       " do not match weight C_in " + std::to_string(c_in));
    check_contract(bias.rank() == 1 && bias.dim(0) == c_out,
                   "conv2d_forward: bias must be [C_out]");

    const std::size_t oh_n = conv_out_extent(in.height, k, stride, pad, "conv2d_forward");
    const std::size_t ow_n = conv_out_extent(in.width, k, stride, pad, "conv2d_forward");

    Tensor out(in.batched ? std::vector<std::size_t>{in.batch, c_out, oh_n, ow_n}
                          : std::vector<std::size_t>{c_out, oh_n, ow_n});

    const double* x = input.data();
    const double* w = weights.data();
    const double* bs = bias.data();
    double* y = out.data();
    const std::size_t in_plane = in.height * in.width;
    const std::size_t in_sample = in.channels * in_plane;
    const std::size_t out_plane = oh_n * ow_n;
    const std::size_t w_per_oc = c_in * k * k;
    const long pad_l = static_cast<long>(pad);

    parallel_for(in.batch * c_out, [&](std::size_t job) {
        const std::size_t b = job / c_out;
        const std::size_t oc = job % c_out;
        const double* xb = x + b * in_sample;
        const double* woc = w + oc * w_per_oc;
        double* yp = y + (b * c_out + oc) * out_plane;
        for (std::size_t oh = 0; oh < oh_n; ++oh) {
            const long ih_base = static_cast<long>(oh * stride) - pad_l;
            const long kh_lo = std::max<long>(0, -ih_base);
            const long kh_hi = std::min<long>(static_cast<long>(k),
                                              static_cast<long>(in.height) - ih_base);
            for (std::size_t ow = 0; ow < ow_n; ++ow) {
                const long iw_base = static_cast<long>(ow * stride) - pad_l;
                const long kw_lo = std::max<long>(0, -iw_base);
                const long kw_hi = std::min<long>(static_cast<long>(k),
                                                  static_cast<long>(in.width) - iw_base);
                const long kw_len = kw_hi - kw_lo;
                double acc = bs[oc];
                for (std::size_t ic = 0; ic < c_in; ++ic) {
                    const double* xc = xb + ic * in_plane;
                    const double* wc = woc + ic * k * k;
                    for (long kh = kh_lo; kh < kh_hi; ++kh) {
                        const double* xrow = xc + static_cast<std::size_t>(ih_base + kh) * in.width +
                                             static_cast<std::size_t>(iw_base + kw_lo);
                        const double* wrow = wc + static_cast<std::size_t>(kh) * k +
                                             static_cast<std::size_t>(kw_lo);
                        double row_acc = 0.0;
                        for (long kw = 0; kw < kw_len; ++kw) row_acc += xrow[kw] * wrow[kw];
                        acc += row_acc;
                    }
                }
                yp[oh * ow_n + ow] = acc;
            }
        }
    });
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          std::size_t stride, std::size_t pad) {
    const SpatialDims in = spatial_dims(input, "conv2d_backward");
    check_contract(weights.rank() == 4, "conv2d_backward: weights must be [C_out,C_in,k,k]");
    const std::size_t c_out = weights.dim(0);
    const std::size_t c_in = weights.dim(1);
    const std::size_t k = weights.dim(2);
    check_contract(in.channels == c_in, "conv2d_backward: channel mismatch");

    const std::size_t oh_n = conv_out_extent(in.height, k, stride, pad, "conv2d_backward");
    const std::size_t ow_n = conv_out_extent(in.width, k, stride, pad, "conv2d_backward");
    const SpatialDims go = spatial_dims(grad_out, "conv2d_backward");
    check_contract(go.batch == in.batch && go.channels == c_out && go.height == oh_n &&
                       go.width == ow_n,
                   "conv2d_backward: grad_out shape does not match forward output");

    ConvGrads grads;
    grads.grad_input = Tensor(input.shape());
    grads.grad_weights = Tensor(weights.shape());
    grads.grad_bias = Tensor({c_out});

    const double* g = grad_out.data();
    const double* x = input.data();
    const double* w = weights.data();
    const std::size_t in_plane = in.height * in.width;
    const std::size_t in_sample = c_in * in_plane;
    const std::size_t out_plane = oh_n * ow_n;
    const std::size_t out_sample = c_out * out_plane;
    const std::size_t w_per_oc = c_in * k * k;
    const long pad_l = static_cast<long>(pad);
    const long stride_l = static_cast<long>(stride);

    // Every gradient is computed gather-style: each output element owns its
    // full reduction, so parallel execution stays bitwise deterministic.
    double* gi = grads.grad_input.data();
    parallel_for(in.batch * c_in, [&](std::size_t job) {
        const std::size_t b = job / c_in;
        const std::size_t ic = job % c_in;
        double* gip = gi + b * in_sample + ic * in_plane;
        for (std::size_t ih = 0; ih < in.height; ++ih) {
            const long num_h = static_cast<long>(ih) + pad_l;
            for (std::size_t iw = 0; iw < in.width; ++iw) {
                const long num_w = static_cast<long>(iw) + pad_l;
                double acc = 0.0;
                for (std::size_t oc = 0; oc < c_out; ++oc) {
                    const double* gop = g + b * out_sample + oc * out_plane;
                    const double* wp = w + oc * w_per_oc + ic * k * k;
                    long kh = num_h % stride_l;
                    for (; kh < static_cast<long>(k); kh += stride_l) {
                        const long oh = (num_h - kh) / stride_l;
                        if (oh < 0) break;  // kh grows, oh only shrinks further
                        if (oh >= static_cast<long>(oh_n)) continue;
                        long kw = num_w % stride_l;
                        for (; kw < static_cast<long>(k); kw += stride_l) {
                            const long ow = (num_w - kw) / stride_l;
                            if (ow < 0) break;
                            if (ow >= static_cast<long>(ow_n)) continue;
                            acc += gop[oh * static_cast<long>(ow_n) + ow] * wp[kh * static_cast<long>(k) + kw];
                        }
                    }
                }
                gip[ih * in.width + iw] = acc;
            }
        }
    });

    double* gw = grads.grad_weights.data();
    parallel_for(c_out, [&](std::size_t oc) {
        for (std::size_t ic = 0; ic < c_in; ++ic) {
            for (std::size_t kh = 0; kh < k; ++kh) {
                for (std::size_t kw = 0; kw < k; ++kw) {
                    double acc = 0.0;
                    for (std::size_t b = 0; b < in.batch; ++b) {
                        const double* gop = g + b * out_sample + oc * out_plane;
                        const double* xp = x + b * in_sample + ic * in_plane;
                        for (std::size_t oh = 0; oh < oh_n; ++oh) {
                            const long ih = static_cast<long>(oh * stride) - pad_l + static_cast<long>(kh);
                            if (ih < 0 || ih >= static_cast<long>(in.height)) continue;
                            const double* xrow = xp + static_cast<std::size_t>(ih) * in.width;
                            const double* grow = gop + oh * ow_n;
                            for (std::size_t ow = 0; ow < ow_n; ++ow) {
                                const long iw = static_cast<long>(ow * stride) - pad_l + static_cast<long>(kw);
                                if (iw < 0 || iw >= static_cast<long>(in.width)) continue;
                                acc += grow[ow] * xrow[static_cast<std::size_t>(iw)];
                            }
                        }
                    }
                    gw[((oc * c_in + ic) * k + kh) * k + kw] = acc;
                }
            }
        }
    });

    double* gb = grads.grad_bias.data();
    for (std::size_t oc = 0; oc < c_out; ++oc) {
        double acc = 0.0;
        for (std::size_t b = 0; b < in.batch; ++b) {
            const double* gop = g + b * out_sample + oc * out_plane;
            for (std::size_t i = 0; i < out_plane; ++i) acc += gop[i];
        }
        gb[oc] = acc;
    }
    return grads;
}

PoolResult maxpool_forward(const Tensor& input, std::size_t k, std::size_t stride) {
    return maxpool_forward(input, k, k, stride);
}

PoolResult maxpool_forward(const Tensor& input, std::size_t kh_n, std::size_t kw_n,
                           std::size_t stride) {
    const SpatialDims in = spatial_dims(input, "maxpool_forward");
    check_contract(kh_n >= 1 && kw_n >= 1 && stride >= 1,
                   "maxpool_forward: window and stride must be positive");
    check_contract(in.height >= kh_n && in.width >= kw_n,
                   "maxpool_forward: window larger than input");
    const std::size_t oh_n = (in.height - kh_n) / stride + 1;
    const std::size_t ow_n = (in.width - kw_n) / stride + 1;

    PoolResult res;
    res.output = Tensor(in.batched ? std::vector<std::size_t>{in.batch, in.channels, oh_n, ow_n}
                                   : std::vector<std::size_t>{in.channels, oh_n, ow_n});
    res.argmax.assign(res.output.numel(), 0);

    const double* x = input.data();
    double* y = res.output.data();
    std::size_t* am = res.argmax.data();
    const std::size_t in_plane = in.height * in.width;
    const std::size_t out_plane = oh_n * ow_n;

    parallel_for(in.batch * in.channels, [&](std::size_t plane) {
        const double* xp = x + plane * in_plane;
        double* yp = y + plane * out_plane;
        std::size_t* ap = am + plane * out_plane;
        for (std::size_t oh = 0; oh < oh_n; ++oh) {
            for (std::size_t ow = 0; ow < ow_n; ++ow) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_idx = 0;
                for (std::size_t kh = 0; kh < kh_n; ++kh) {
                    const std::size_t ih = oh * stride + kh;
                    for (std::size_t kw = 0; kw < kw_n; ++kw) {
                        const std::size_t idx = ih * in.width + ow * stride + kw;
                        if (xp[idx] > best) {
                            best = xp[idx];
                            best_idx = idx;
                        }
                    }
                }
                yp[oh * ow_n + ow] = best;
                ap[oh * ow_n + ow] = plane * in_plane + best_idx;
            }
        }
    });
    return res;
}

Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                        const std::vector<std::size_t>& input_shape) {
    check_contract(grad_out.numel() == argmax.size(),
                   "maxpool_backward: grad_out does not match saved argmax");
    Tensor grad_input(input_shape);
    double* gi = grad_input.data();
    const double* g = grad_out.data();
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        check_contract(argmax[i] < grad_input.numel(), "maxpool_backward: argmax out of range");
        gi[argmax[i]] += g[i];
    }
    return grad_input;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    const double* x = input.data();
    double* y = out.data();
    for (std::size_t i = 0; i < input.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
    check_contract(grad_out.same_shape(input), "relu_backward: shape mismatch");
    Tensor grad_input(input.shape());
    const double* g = grad_out.data();
    const double* x = input.data();
    double* gi = grad_input.data();
    for (std::size_t i = 0; i < input.numel(); ++i) gi[i] = x[i] > 0.0 ? g[i] : 0.0;
    return grad_input;
}

Tensor fc_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const RowDims in = row_dims(input, "fc_forward");
    check_contract(weights.rank() == 2, "fc_forward: weights must be [D_out,D_in]");
    const std::size_t d_out = weights.dim(0);
    const std::size_t d_in = weights.dim(1);
    check_contract(in.dim == d_in, "fc_forward: input length " + std::to_string(in.dim) +
                                       " does not match weight D_in " + std::to_string(d_in));
    check_contract(bias.rank() == 1 && bias.dim(0) == d_out, "fc_forward: bias must be [D_out]");

    Tensor out(in.batched ? std::vector<std::size_t>{in.batch, d_out}
                          : std::vector<std::size_t>{d_out});
    const double* x = input.data();
    const double* w = weights.data();
    const double* bs = bias.data();
    double* y = out.data();

    parallel_for(in.batch, [&](std::size_t b) {
        const double* xb = x + b * d_in;
        double* yb = y + b * d_out;
        for (std::size_t o = 0; o < d_out; ++o) {
            const double* wrow = w + o * d_in;
            double acc = bs[o];
            for (std::size_t i = 0; i < d_in; ++i) acc += wrow[i] * xb[i];
            yb[o] = acc;
        }
    });
    return out;
}

FcGrads fc_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights) {
    const RowDims in = row_dims(input, "fc_backward");
    const RowDims go = row_dims(grad_out, "fc_backward");
    const std::size_t d_out = weights.dim(0);
    const std::size_t d_in = weights.dim(1);
    check_contract(go.batch == in.batch && go.dim == d_out && in.dim == d_in,
                   "fc_backward: grad_out shape does not match forward output");

    FcGrads grads;
    grads.grad_input = Tensor(input.shape());
    grads.grad_weights = Tensor(weights.shape());
    grads.grad_bias = Tensor({d_out});

    const double* g = grad_out.data();
    const double* x = input.data();
    const double* w = weights.data();

    double* gi = grads.grad_input.data();
    parallel_for(in.batch, [&](std::size_t b) {
        const double* gb = g + b * d_out;
        double* gib = gi + b * d_in;
        for (std::size_t o = 0; o < d_out; ++o) {
            const double go_bo = gb[o];
            if (go_bo == 0.0) continue;
            const double* wrow = w + o * d_in;
            for (std::size_t i = 0; i < d_in; ++i) gib[i] += go_bo * wrow[i];
        }
    });

    double* gw = grads.grad_weights.data();
    parallel_for(d_out, [&](std::size_t o) {
        double* gwrow = gw + o * d_in;
        for (std::size_t b = 0; b < in.batch; ++b) {
            const double go_bo = g[b * d_out + o];
            if (go_bo == 0.0) continue;
            const double* xb = x + b * d_in;
            for (std::size_t i = 0; i < d_in; ++i) gwrow[i] += go_bo * xb[i];
        }
    });

    double* gb = grads.grad_bias.data();
    for (std::size_t o = 0; o < d_out; ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < in.batch; ++b) acc += g[b * d_out + o];
        gb[o] = acc;
    }
    return grads;
}

Tensor softmax(const Tensor& logits) {
    const RowDims in = row_dims(logits, "softmax");
    check_contract(in.dim >= 2, "softmax: needs at least two classes");
    Tensor out(logits.shape());
    const double* x = logits.data();
    double* y = out.data();
    for (std::size_t b = 0; b < in.batch; ++b) {
        const double* xb = x + b * in.dim;
        double* yb = y + b * in.dim;
        double m = xb[0];
        for (std::size_t j = 1; j < in.dim; ++j) m = std::max(m, xb[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < in.dim; ++j) {
            yb[j] = std::exp(xb[j] - m);
            sum += yb[j];
        }
        for (std::size_t j = 0; j < in.dim; ++j) yb[j] /= sum;
    }
    return out;
}

namespace {

void check_one_hot(const Tensor& targets, const RowDims& dims, const char* op) {
    const double* t = targets.data();
    for (std::size_t b = 0; b < dims.batch; ++b) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < dims.dim; ++j) {
            const double v = t[b * dims.dim + j];
            check_contract(v == 0.0 || v == 1.0,
                           std::string(op) + ": target row " + std::to_string(b) +
                               " is not one-hot");
            if (v == 1.0) ++ones;
        }
        check_contract(ones == 1, std::string(op) + ": target row " + std::to_string(b) +
                                      " is not one-hot");
    }
}

constexpr double kLogClamp = 1e-12;

}  // namespace

double cross_entropy_loss(const Tensor& probs, const Tensor& targets) {
    const RowDims in = row_dims(probs, "cross_entropy_loss");
    check_contract(probs.same_shape(targets), "cross_entropy_loss: shape mismatch");
    check_one_hot(targets, in, "cross_entropy_loss");
    const double* p = probs.data();
    const double* t = targets.data();
    for (std::size_t b = 0; b < in.batch; ++b) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < in.dim; ++j) row_sum += p[b * in.dim + j];
        check_contract(std::abs(row_sum - 1.0) < 1e-6,
                       "cross_entropy_loss: probs row " + std::to_string(b) +
                           " does not sum to 1");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.numel(); ++i) {
        if (t[i] == 1.0) loss -= std::log(std::max(p[i], kLogClamp));
    }
    return loss / static_cast<double>(in.batch);
}

Tensor softmax_cross_entropy_grad(const Tensor& probs, const Tensor& targets) {
    const RowDims in = row_dims(probs, "softmax_cross_entropy_grad");
    check_contract(probs.same_shape(targets), "softmax_cross_entropy_grad: shape mismatch");
    Tensor grad(probs.shape());
    const double inv_b = 1.0 / static_cast<double>(in.batch);
    const double* p = probs.data();
    const double* t = targets.data();
    double* g = grad.data();
    for (std::size_t i = 0; i < probs.numel(); ++i) g[i] = (p[i] - t[i]) * inv_b;
    return grad;
}

double euclidean_loss(const Tensor& outputs, const Tensor& targets) {
    const RowDims in = row_dims(outputs, "euclidean_loss");
    check_contract(outputs.same_shape(targets), "euclidean_loss: shape mismatch");
    const double* o = outputs.data();
    const double* s = targets.data();
    double loss = 0.0;
    for (std::size_t b = 0; b < in.batch; ++b) {
        double row = 0.0;
        for (std::size_t j = 0; j < in.dim; ++j) {
            const double d = o[b * in.dim + j] - s[b * in.dim + j];
            row += d * d;
        }
        loss += row;
    }
    return loss / (2.0 * static_cast<double>(in.batch));
}

Tensor euclidean_loss_grad(const Tensor& outputs, const Tensor& targets) {
    const RowDims in = row_dims(outputs, "euclidean_loss_grad");
    check_contract(outputs.same_shape(targets), "euclidean_loss_grad: shape mismatch");
    Tensor grad(outputs.shape());
    const double inv_b = 1.0 / static_cast<double>(in.batch);
    const double* o = outputs.data();
    const double* s = targets.data();
    double* g = grad.data();
    for (std::size_t i = 0; i < outputs.numel(); ++i) g[i] = (o[i] - s[i]) * inv_b;
    return grad;
}

double total_loss(double loss_ce, double loss_euclid, double lambda) {
    return loss_ce + lambda * loss_euclid;
}

Tensor he_init(const std::vector<std::size_t>& shape, std::size_t fan_in, Rng& rng) {
    check_contract(fan_in > 0, "he_init: fan_in must be positive");
    Tensor t(shape);
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    double* v = t.data();
    for (std::size_t i = 0; i < t.numel(); ++i) v[i] = rng.normal(0.0, stddev);
    return t;
}

void OptimizerConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("optimizer: learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
    if (batch_size == 0) throw ConfigError("optimizer: batch_size must be >= 1");
    if (iterations == 0) throw ConfigError("optimizer: iterations must be >= 1");
}

void sgd_step(std::vector<Parameter>& params, const OptimizerConfig& config) {
    for (Parameter& p : params) {
        check_contract(p.grad.same_shape(p.value), "sgd_step: grad/value shape mismatch");
        double* w = p.value.data();
        const double* g = p.grad.data();
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            w[i] -= config.learning_rate * (g[i] + config.weight_decay * w[i]);
        }
    }
}

void zero_grads(std::vector<Parameter>& params) {
    for (Parameter& p : params) p.zero_grad();
}

}  // namespace pcw::nn
