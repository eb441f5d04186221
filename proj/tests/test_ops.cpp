#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "pcw/error.hpp"
#include "pcw/ops.hpp"
#include "pcw/rng.hpp"
#include "pcw/tensor.hpp"

using namespace pcw;
using namespace pcw::nn;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(shape);
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Independent convolution written the dumb way: walk every output element,
// walk the full kernel, bounds-check each tap. Summation order (kh, kw, ic)
// deliberately differs from the library kernel.
Tensor oracle_conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     std::size_t stride, std::size_t pad) {
    const bool batched = input.rank() == 4;
    const std::size_t b_n = batched ? input.dim(0) : 1;
    const std::size_t c_in = input.dim(batched ? 1 : 0);
    const std::size_t h = input.dim(batched ? 2 : 1);
    const std::size_t w = input.dim(batched ? 3 : 2);
    const std::size_t c_out = weights.dim(0);
    const std::size_t k = weights.dim(2);
    const std::size_t oh_n = (h + 2 * pad - k) / stride + 1;
    const std::size_t ow_n = (w + 2 * pad - k) / stride + 1;

    std::vector<std::size_t> out_shape =
        batched ? std::vector<std::size_t>{b_n, c_out, oh_n, ow_n}
                : std::vector<std::size_t>{c_out, oh_n, ow_n};
    Tensor out(out_shape);
    for (std::size_t b = 0; b < b_n; ++b) {
        for (std::size_t oc = 0; oc < c_out; ++oc) {
            for (std::size_t oh = 0; oh < oh_n; ++oh) {
                for (std::size_t ow = 0; ow < ow_n; ++ow) {
                    double acc = 0.0;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        for (std::size_t kw = 0; kw < k; ++kw) {
                            const long ih = static_cast<long>(oh * stride + kh) - static_cast<long>(pad);
                            const long iw = static_cast<long>(ow * stride + kw) - static_cast<long>(pad);
                            if (ih < 0 || iw < 0 || ih >= static_cast<long>(h) ||
                                iw >= static_cast<long>(w)) {
                                continue;
                            }
                            for (std::size_t ic = 0; ic < c_in; ++ic) {
                                const double x =
                                    input[((b * c_in + ic) * h + static_cast<std::size_t>(ih)) * w +
                                          static_cast<std::size_t>(iw)];
                                const double wv = weights[((oc * c_in + ic) * k + kh) * k + kw];
                                acc += x * wv;
                            }
                        }
                    }
                    out[((b * c_out + oc) * oh_n + oh) * ow_n + ow] = acc + bias[oc];
                }
            }
        }
    }
    return out;
}

// Window-scan max pool oracle; ties resolved to the first element in
// row-major window order, which is the lowest flat index.
Tensor oracle_maxpool(const Tensor& input, std::size_t k, std::size_t stride) {
    const bool batched = input.rank() == 4;
    const std::size_t b_n = batched ? input.dim(0) : 1;
    const std::size_t c_n = input.dim(batched ? 1 : 0);
    const std::size_t h = input.dim(batched ? 2 : 1);
    const std::size_t w = input.dim(batched ? 3 : 2);
    const std::size_t oh_n = (h - k) / stride + 1;
    const std::size_t ow_n = (w - k) / stride + 1;
    std::vector<std::size_t> out_shape =
        batched ? std::vector<std::size_t>{b_n, c_n, oh_n, ow_n}
                : std::vector<std::size_t>{c_n, oh_n, ow_n};
    Tensor out(out_shape);
    for (std::size_t p = 0; p < b_n * c_n; ++p) {
        for (std::size_t oh = 0; oh < oh_n; ++oh) {
            for (std::size_t ow = 0; ow < ow_n; ++ow) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t kh = 0; kh < k; ++kh) {
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const double v =
                            input[(p * h + oh * stride + kh) * w + ow * stride + kw];
                        if (v > best) best = v;
                    }
                }
                out[(p * oh_n + oh) * ow_n + ow] = best;
            }
        }
    }
    return out;
}

void check_close(const Tensor& got, const Tensor& want, double rtol, const char* what) {
    REQUIRE(got.same_shape(want));
    double worst = 0.0;
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < got.numel(); ++i) {
        const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1.0});
        const double rel = std::abs(got[i] - want[i]) / denom;
        if (rel > worst) {
            worst = rel;
            worst_i = i;
        }
    }
    INFO(what << ": worst rel err " << worst << " at flat index " << worst_i);
    CHECK(worst <= rtol);
}

// Central finite differences of a scalar functional against an analytic
// gradient, entry by entry. Pass criterion mirrors the acceptance gate:
// |a - f| <= atol + rtol * max(|a|, |f|).
void check_grad_fd(Tensor& x, const std::function<double()>& f, const Tensor& analytic,
                   double rtol = 1e-4, double eps = 1e-4, double atol = 1e-8) {
    REQUIRE(analytic.numel() == x.numel());
    double worst_gap = 0.0;
    double worst_a = 0.0, worst_fd = 0.0;
    std::size_t worst_i = 0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double hi = f();
        x[i] = orig - eps;
        const double lo = f();
        x[i] = orig;
        const double fd = (hi - lo) / (2.0 * eps);
        const double a = analytic[i];
        const double gap = std::abs(a - fd);
        const double allow = atol + rtol * std::max(std::abs(a), std::abs(fd));
        if (gap > allow) ++failures;
        if (gap > worst_gap) {
            worst_gap = gap;
            worst_a = a;
            worst_fd = fd;
            worst_i = i;
        }
    }
    INFO("worst |analytic-fd| " << worst_gap << " at index " << worst_i << " (analytic "
                                << worst_a << ", fd " << worst_fd << ")");
    CHECK(failures == 0);
}

double weighted_sum(const Tensor& y, const Tensor& coeff) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += y[i] * coeff[i];
    return s;
}

Tensor one_hot_rows(const std::vector<std::size_t>& hot, std::size_t classes) {
    Tensor t({hot.size(), classes});
    for (std::size_t b = 0; b < hot.size(); ++b) t[b * classes + hot[b]] = 1.0;
    return t;
}

}  // namespace

TEST_CASE("conv2d matches brute-force oracle across strides and padding") {
    Rng rng(2024);
    struct Case {
        std::size_t b, c_in, h, w, c_out, k, stride, pad;
    };
    // Mirrors the real layer geometries (11/4, 5/1, 3/1) at small sizes.
    const Case cases[] = {
        {1, 1, 5, 5, 1, 3, 1, 1},  {2, 3, 9, 11, 4, 3, 1, 1}, {1, 2, 13, 13, 3, 5, 1, 2},
        {2, 2, 15, 17, 3, 5, 4, 2} /* big stride */,          {1, 3, 23, 19, 2, 11, 4, 5},
        {2, 4, 6, 6, 5, 1, 1, 0} /* pointwise */,             {1, 1, 7, 7, 1, 3, 2, 1},
    };
    for (const Case& c : cases) {
        CAPTURE(c.h);
        CAPTURE(c.k);
        CAPTURE(c.stride);
        Tensor x = random_tensor({c.b, c.c_in, c.h, c.w}, rng);
        Tensor w = random_tensor({c.c_out, c.c_in, c.k, c.k}, rng);
        Tensor bias = random_tensor({c.c_out}, rng);
        Tensor got = conv2d_forward(x, w, bias, c.stride, c.pad);
        Tensor want = oracle_conv2d(x, w, bias, c.stride, c.pad);
        check_close(got, want, 1e-12, "conv2d");
    }
}

TEST_CASE("conv2d single-sample rank-3 input works and matches the oracle") {
    Rng rng(7);
    Tensor x = random_tensor({2, 9, 9}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng);
    Tensor bias = random_tensor({3}, rng);
    Tensor got = conv2d_forward(x, w, bias, 2, 1);
    Tensor want = oracle_conv2d(x, w, bias, 2, 1);
    CHECK(got.rank() == 3);
    check_close(got, want, 1e-12, "conv2d rank-3");
}

TEST_CASE("conv2d hand case: all-ones 3x3, pad 1 counts overlap") {
    Tensor x({1, 1, 3, 3});
    x.fill(1.0);
    Tensor w({1, 1, 3, 3});
    w.fill(1.0);
    Tensor bias({1});
    Tensor y = conv2d_forward(x, w, bias, 1, 1);
    REQUIRE(y.shape() == std::vector<std::size_t>({1, 1, 3, 3}));
    // Corners see a 2x2 patch, edges 2x3, the center the full 3x3.
    CHECK(y[0] == doctest::Approx(4.0));
    CHECK(y[1] == doctest::Approx(6.0));
    CHECK(y[4] == doctest::Approx(9.0));
    CHECK(y[8] == doctest::Approx(4.0));
}

TEST_CASE("conv2d output extent follows floor((H + 2p - k)/s) + 1") {
    Rng rng(5);
    Tensor x = random_tensor({1, 64, 128}, rng);
    Tensor w = random_tensor({2, 1, 11, 11}, rng);
    Tensor bias({2});
    Tensor y = conv2d_forward(x, w, bias, 4, 5);
    CHECK(y.dim(1) == (64 + 10 - 11) / 4 + 1);  // 16
    CHECK(y.dim(2) == (128 + 10 - 11) / 4 + 1); // 32
    CHECK(y.all_finite());
}

TEST_CASE("conv2d rejects malformed inputs") {
    Tensor x({1, 2, 5, 5});
    Tensor w({3, 2, 3, 3});
    Tensor bias({3});
    CHECK_THROWS_AS(conv2d_forward(x, w, bias, 0, 1), ContractError);
    Tensor bad_bias({2});
    CHECK_THROWS_AS(conv2d_forward(x, w, bad_bias, 1, 1), ContractError);
    Tensor bad_w({3, 1, 3, 3});
    CHECK_THROWS_AS(conv2d_forward(x, bad_w, bias, 1, 1), ContractError);
    Tensor tiny({1, 2, 2, 2});  // 3x3 kernel cannot cover a 2x2 input unpadded
    CHECK_THROWS_AS(conv2d_forward(tiny, w, bias, 1, 0), ContractError);
}

TEST_CASE("conv2d backward agrees with finite differences") {
    Rng rng(99);
    struct Case {
        std::size_t b, c_in, h, w, c_out, k, stride, pad;
    };
    const Case cases[] = {
        {2, 2, 7, 8, 3, 3, 1, 1},
        {1, 2, 11, 9, 2, 5, 4, 2},
        {2, 1, 9, 9, 2, 3, 2, 1},
    };
    for (const Case& c : cases) {
        CAPTURE(c.k);
        CAPTURE(c.stride);
        Tensor x = random_tensor({c.b, c.c_in, c.h, c.w}, rng);
        Tensor w = random_tensor({c.c_out, c.c_in, c.k, c.k}, rng);
        Tensor bias = random_tensor({c.c_out}, rng);
        Tensor y = conv2d_forward(x, w, bias, c.stride, c.pad);
        Tensor coeff = random_tensor(y.shape(), rng);

        ConvGrads g = conv2d_backward(coeff, x, w, c.stride, c.pad);
        auto loss = [&] { return weighted_sum(conv2d_forward(x, w, bias, c.stride, c.pad), coeff); };
        check_grad_fd(x, loss, g.grad_input);
        check_grad_fd(w, loss, g.grad_weights);
        check_grad_fd(bias, loss, g.grad_bias);
    }
}

TEST_CASE("maxpool matches window-scan oracle") {
    Rng rng(31);
    Tensor x = random_tensor({2, 3, 9, 11}, rng);
    PoolResult r = maxpool_forward(x, 3, 2);
    Tensor want = oracle_maxpool(x, 3, 2);
    check_close(r.output, want, 0.0, "maxpool");
    CHECK(r.argmax.size() == r.output.numel());
    // Every argmax entry must actually hold the reported maximum.
    for (std::size_t i = 0; i < r.output.numel(); ++i) CHECK(x[r.argmax[i]] == r.output[i]);
}

TEST_CASE("maxpool 4x4 ramp with k=3 s=2 keeps exactly one window") {
    Tensor x({1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i + 1);
    PoolResult r = maxpool_forward(x, 3, 2);
    REQUIRE(r.output.shape() == std::vector<std::size_t>({1, 1, 1}));
    // floor((4-3)/2)+1 = 1 output per axis; its window is rows 0..2 x cols
    // 0..2, whose largest entry is 11. The trailing row and column are dropped.
    CHECK(r.output[0] == 11.0);
    CHECK(r.argmax[0] == 10);
}

TEST_CASE("maxpool tie goes to the lowest flat index") {
    Tensor x({1, 2, 2});
    x.fill(5.0);
    PoolResult r = maxpool_forward(x, 2, 2);
    CHECK(r.argmax[0] == 0);
}

TEST_CASE("maxpool rejects windows larger than the input") {
    Tensor x({1, 2, 5});
    CHECK_THROWS_AS(maxpool_forward(x, 3, 2), ContractError);
}

TEST_CASE("maxpool backward routes gradient to winners only") {
    Rng rng(17);
    // Values drawn from a shuffled grid with spacing 0.5, so every window has
    // a clear winner and finite differences cannot flip it.
    Tensor x({1, 2, 6, 6});
    std::vector<double> grid(x.numel());
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = 0.5 * static_cast<double>(i);
    for (std::size_t i = grid.size(); i > 1; --i) {
        std::size_t j = rng.uniform_below(i);
        std::swap(grid[i - 1], grid[j]);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) x[i] = grid[i];

    PoolResult r = maxpool_forward(x, 3, 2);
    Tensor coeff = random_tensor(r.output.shape(), rng);
    Tensor g = maxpool_backward(coeff, r.argmax, x.shape());
    auto loss = [&] { return weighted_sum(maxpool_forward(x, 3, 2).output, coeff); };
    check_grad_fd(x, loss, g);

    double routed = 0.0, emitted = 0.0;
    for (double v : g.values()) routed += v;
    for (double v : coeff.values()) emitted += v;
    CHECK(routed == doctest::Approx(emitted).epsilon(1e-12));
}

TEST_CASE("relu forward and backward") {
    Tensor x({5}, {-2.0, -0.0, 0.0, 0.5, 3.0});
    Tensor y = relu_forward(x);
    CHECK(y[0] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.5);
    CHECK(y[4] == 3.0);

    Tensor go({5}, {1.0, 1.0, 1.0, 1.0, 1.0});
    Tensor gx = relu_backward(go, x);
    CHECK(gx[0] == 0.0);
    CHECK(gx[2] == 0.0);  // subgradient at exactly zero is zero
    CHECK(gx[3] == 1.0);
    CHECK(gx[4] == 1.0);

    // Finite differences away from the kink.
    Rng rng(3);
    Tensor xr({2, 8});
    for (double& v : xr.values()) {
        double u = rng.uniform(0.2, 1.0);
        v = rng.uniform() < 0.5 ? -u : u;
    }
    Tensor coeff = random_tensor(xr.shape(), rng);
    Tensor analytic = relu_backward(coeff, xr);
    auto loss = [&] { return weighted_sum(relu_forward(xr), coeff); };
    check_grad_fd(xr, loss, analytic);
}

TEST_CASE("fully connected layer matches a plain matrix product and finite differences") {
    Rng rng(11);
    const std::size_t b_n = 3, d_in = 7, d_out = 4;
    Tensor x = random_tensor({b_n, d_in}, rng);
    Tensor w = random_tensor({d_out, d_in}, rng);
    Tensor bias = random_tensor({d_out}, rng);
    Tensor y = fc_forward(x, w, bias);
    REQUIRE(y.shape() == std::vector<std::size_t>({b_n, d_out}));
    for (std::size_t b = 0; b < b_n; ++b) {
        for (std::size_t o = 0; o < d_out; ++o) {
            double acc = bias[o];
            for (std::size_t j = 0; j < d_in; ++j) acc += w[o * d_in + j] * x[b * d_in + j];
            CHECK(y[b * d_out + o] == doctest::Approx(acc).epsilon(1e-12));
        }
    }

    Tensor coeff = random_tensor(y.shape(), rng);
    FcGrads g = fc_backward(coeff, x, w);
    auto loss = [&] { return weighted_sum(fc_forward(x, w, bias), coeff); };
    check_grad_fd(x, loss, g.grad_input);
    check_grad_fd(w, loss, g.grad_weights);
    check_grad_fd(bias, loss, g.grad_bias);

    // Rank-1 input is treated as a batch of one.
    Tensor x1 = random_tensor({d_in}, rng);
    Tensor y1 = fc_forward(x1, w, bias);
    CHECK(y1.rank() == 1);
    CHECK(y1.dim(0) == d_out);
}

TEST_CASE("softmax rows are stable distributions") {
    Tensor logits({2, 3}, {1.0, 2.0, 3.0, 1000.0, 999.0, -1000.0});
    Tensor p = softmax(logits);
    for (std::size_t b = 0; b < 2; ++b) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(p[b * 3 + c] >= 0.0);
            s += p[b * 3 + c];
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(p.all_finite());
    CHECK(p[3] > p[4]);          // 1000 beats 999
    CHECK(p[5] < 1e-300);        // -1000 underflows cleanly

    Tensor one_class({2, 1});
    CHECK_THROWS_AS(softmax(one_class), ContractError);
}

TEST_CASE("cross entropy of a uniform two-class prediction is ln 2") {
    Tensor p({4, 2});
    p.fill(0.5);
    Tensor t = one_hot_rows({0, 1, 0, 1}, 2);
    CHECK(cross_entropy_loss(p, t) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy validates its inputs") {
    Tensor p({1, 2}, {0.5, 0.5});
    Tensor two_hot({1, 2}, {1.0, 1.0});
    CHECK_THROWS_AS(cross_entropy_loss(p, two_hot), ContractError);
    Tensor fractional({1, 2}, {0.3, 0.7});
    CHECK_THROWS_AS(cross_entropy_loss(p, fractional), ContractError);
    Tensor not_dist({1, 2}, {0.9, 0.9});
    Tensor t = one_hot_rows({0}, 2);
    CHECK_THROWS_AS(cross_entropy_loss(not_dist, t), ContractError);
}

TEST_CASE("cross entropy clamps vanishing probabilities") {
    Tensor p({1, 2}, {1e-300, 1.0 - 1e-300});
    Tensor t = one_hot_rows({0}, 2);
    const double loss = cross_entropy_loss(p, t);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("softmax cross entropy gradient equals (p - t)/B and finite differences") {
    Rng rng(23);
    Tensor logits = random_tensor({3, 4}, rng, -2.0, 2.0);
    Tensor t = one_hot_rows({1, 3, 0}, 4);
    Tensor analytic = softmax_cross_entropy_grad(softmax(logits), t);
    for (std::size_t i = 0; i < analytic.numel(); ++i) {
        const double expect = (softmax(logits)[i] - t[i]) / 3.0;
        CHECK(analytic[i] == doctest::Approx(expect).epsilon(1e-12));
    }
    auto loss = [&] { return cross_entropy_loss(softmax(logits), t); };
    check_grad_fd(logits, loss, analytic);
}

TEST_CASE("euclidean loss halves the mean squared distance") {
    Tensor o({1, 1}, {2.0});
    Tensor s({1, 1}, {1.0});
    CHECK(euclidean_loss(o, s) == doctest::Approx(0.5).epsilon(1e-15));

    Tensor o2({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(euclidean_loss(o2, o2) == 0.0);

    Rng rng(41);
    Tensor out = random_tensor({4, 6}, rng);
    Tensor tgt = random_tensor({4, 6}, rng);
    double manual = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        manual += (out[i] - tgt[i]) * (out[i] - tgt[i]);
    }
    manual /= 2.0 * 4.0;
    CHECK(euclidean_loss(out, tgt) == doctest::Approx(manual).epsilon(1e-12));

    Tensor analytic = euclidean_loss_grad(out, tgt);
    auto loss = [&] { return euclidean_loss(out, tgt); };
    check_grad_fd(out, loss, analytic);
}

TEST_CASE("total loss is the classification term plus lambda times the segmentation term") {
    CHECK(total_loss(0.7, 0.3, 0.0) == 0.7);
    CHECK(std::abs(total_loss(0.7, 0.3, 0.001) - (0.7 + 0.001 * 0.3)) < 1e-15);
    CHECK(std::abs(total_loss(1.25, 4.0, 2.0) - 9.25) < 1e-12);
}

TEST_CASE("he init matches the target moments and is seed-stable") {
    Rng rng(77);
    const std::size_t fan_in = 128;
    Tensor w = he_init({1024, 128}, fan_in, rng);
    const double n = static_cast<double>(w.numel());
    double mean = 0.0;
    for (double v : w.values()) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : w.values()) var += (v - mean) * (v - mean);
    var /= n - 1.0;
    const double want_sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    CHECK(std::abs(mean) < 2e-3);
    CHECK(std::sqrt(var) == doctest::Approx(want_sd).epsilon(0.02));

    Rng r1(123), r2(123);
    Tensor a = he_init({4, 4}, 16, r1);
    Tensor b = he_init({4, 4}, 16, r2);
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("sgd applies decoupled weight decay through the gradient") {
    std::vector<Parameter> params;
    params.push_back(Parameter("w", Tensor({1}, {1.0})));
    params[0].grad.fill(0.0);
    OptimizerConfig cfg;
    cfg.learning_rate = 0.001;
    cfg.weight_decay = 0.0001;
    sgd_step(params, cfg);
    // Pure decay: w - lr*wd*w = 1 - 1e-7.
    CHECK(params[0].value[0] == doctest::Approx(0.9999999).epsilon(1e-12));
}

TEST_CASE("sgd with grad equal to the weight contracts geometrically") {
    std::vector<Parameter> params;
    params.push_back(Parameter("w", Tensor({1}, {1.0})));
    OptimizerConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    for (int step = 0; step < 5; ++step) {
        params[0].grad[0] = params[0].value[0];
        sgd_step(params, cfg);
    }
    CHECK(params[0].value[0] == doctest::Approx(std::pow(0.9, 5)).epsilon(1e-12));
}

TEST_CASE("optimizer config validation") {
    OptimizerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    OptimizerConfig bad = cfg;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.weight_decay = -1e-4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    OptimizerConfig no_decay = cfg;
    no_decay.weight_decay = 0.0;
    CHECK_NOTHROW(no_decay.validate());
}

TEST_CASE("zero_grads clears every accumulator") {
    std::vector<Parameter> params;
    params.push_back(Parameter("a", Tensor({2, 2})));
    params.push_back(Parameter("b", Tensor({3})));
    for (Parameter& p : params) p.grad.fill(7.0);
    zero_grads(params);
    for (const Parameter& p : params) {
        for (double v : p.grad.values()) CHECK(v == 0.0);
    }
}
