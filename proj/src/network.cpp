#include "pcw/network.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcw/checkpoint.hpp"
#include "pcw/error.hpp"
#include "pcw/rng.hpp"

namespace pcw::nn {

namespace {

// Base widths of the full-size network; scale_divisor divides all of them.
constexpr std::size_t kBaseC1 = 96, kBaseC2 = 256, kBaseC3 = 384, kBaseC4 = 256;
constexpr std::size_t kBaseFc1 = 256, kBaseFc2 = 256, kBaseFc3 = 2048;
constexpr std::size_t kClasses = 2;

constexpr std::size_t kConv1K = 11, kConv1Stride = 4, kConv1Pad = 5;
constexpr std::size_t kConv2K = 5, kConv2Pad = 2;
constexpr std::size_t kConv34K = 3, kConv34Pad = 1;
constexpr std::size_t kPoolK = 3, kPoolStride = 2;

std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    check_contract(in + 2 * pad >= k, "plan: feature map shrank below the kernel");
    return (in + 2 * pad - k) / stride + 1;
}

PoolSpec clamp_pool(std::size_t h, std::size_t w) {
    PoolSpec p;
    p.kh = std::min(kPoolK, h);
    p.kw = std::min(kPoolK, w);
    p.stride = kPoolStride;
    return p;
}

std::size_t pool_extent(std::size_t in, std::size_t k, std::size_t stride) {
    return (in - k) / stride + 1;
}

void add_into(Tensor& dst, const Tensor& src) {
    check_contract(dst.numel() == src.numel(), "gradient accumulate: size mismatch");
    double* d = dst.data();
    const double* s = src.data();
    for (std::size_t i = 0; i < dst.numel(); ++i) d[i] += s[i];
}

// [B,a] ++ [B,b] -> [B,a+b]
Tensor concat_rows(const Tensor& left, const Tensor& right) {
    const std::size_t b_n = left.dim(0);
    check_contract(right.dim(0) == b_n, "concat: batch mismatch");
    const std::size_t a = left.dim(1);
    const std::size_t b = right.dim(1);
    Tensor out({b_n, a + b});
    for (std::size_t i = 0; i < b_n; ++i) {
        for (std::size_t j = 0; j < a; ++j) out[i * (a + b) + j] = left[i * a + j];
        for (std::size_t j = 0; j < b; ++j) out[i * (a + b) + a + j] = right[i * b + j];
    }
    return out;
}

Tensor slice_cols(const Tensor& t, std::size_t from, std::size_t count) {
    const std::size_t b_n = t.dim(0);
    const std::size_t d = t.dim(1);
    Tensor out({b_n, count});
    for (std::size_t i = 0; i < b_n; ++i) {
        for (std::size_t j = 0; j < count; ++j) out[i * count + j] = t[i * d + from + j];
    }
    return out;
}

}  // namespace

void ArchitectureConfig::validate() const {
    if (input_width < 16 || input_height < 16) {
        throw ConfigError("network: input must be at least 16x16");
    }
    if (scale_divisor == 0) throw ConfigError("network: scale_divisor must be positive");
    for (std::size_t base : {kBaseC1, kBaseC2, kBaseC3, kBaseC4, kBaseFc1, kBaseFc2, kBaseFc3}) {
        if (base % scale_divisor != 0) {
            throw ConfigError("network: scale_divisor " + std::to_string(scale_divisor) +
                              " does not divide width " + std::to_string(base));
        }
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("network: lambda must be finite and non-negative");
    }
}

NetworkPlan plan_network(const ArchitectureConfig& cfg) {
    cfg.validate();
    NetworkPlan plan;
    plan.config = cfg;
    plan.seg_active = cfg.lambda != 0.0;
    const std::size_t s = cfg.scale_divisor;
    plan.c1 = kBaseC1 / s;
    plan.c2 = kBaseC2 / s;
    plan.c3 = kBaseC3 / s;
    plan.c4 = kBaseC4 / s;
    plan.fc1 = kBaseFc1 / s;
    plan.fc2 = kBaseFc2 / s;
    plan.fc3 = kBaseFc3 / s;
    plan.fc4 = cfg.input_width * cfg.input_height;  // one output per pixel
    plan.concat_width = plan.fc1 + plan.fc3;

    std::size_t h = cfg.input_height, w = cfg.input_width;
    plan.stages.push_back({"input", 1, h, w});
    h = conv_extent(h, kConv1K, kConv1Stride, kConv1Pad);
    w = conv_extent(w, kConv1K, kConv1Stride, kConv1Pad);
    plan.stages.push_back({"conv1", plan.c1, h, w});
    plan.pool1 = clamp_pool(h, w);
    h = pool_extent(h, plan.pool1.kh, plan.pool1.stride);
    w = pool_extent(w, plan.pool1.kw, plan.pool1.stride);
    plan.stages.push_back({"pool1", plan.c1, h, w});
    h = conv_extent(h, kConv2K, 1, kConv2Pad);
    w = conv_extent(w, kConv2K, 1, kConv2Pad);
    plan.stages.push_back({"conv2", plan.c2, h, w});
    plan.pool2 = clamp_pool(h, w);
    h = pool_extent(h, plan.pool2.kh, plan.pool2.stride);
    w = pool_extent(w, plan.pool2.kw, plan.pool2.stride);
    plan.stages.push_back({"pool2", plan.c2, h, w});
    plan.trunk_flat = plan.c2 * h * w;
    h = conv_extent(h, kConv34K, 1, kConv34Pad);
    w = conv_extent(w, kConv34K, 1, kConv34Pad);
    plan.stages.push_back({"conv3", plan.c3, h, w});
    h = conv_extent(h, kConv34K, 1, kConv34Pad);
    w = conv_extent(w, kConv34K, 1, kConv34Pad);
    plan.stages.push_back({"conv4", plan.c4, h, w});
    plan.pool3 = clamp_pool(h, w);
    h = pool_extent(h, plan.pool3.kh, plan.pool3.stride);
    w = pool_extent(w, plan.pool3.kw, plan.pool3.stride);
    plan.stages.push_back({"pool3", plan.c4, h, w});
    plan.head_flat = plan.c4 * h * w;

    auto add = [&](const char* name, std::vector<std::size_t> shape) {
        plan.parameter_total += Tensor::shape_numel(shape);
        plan.parameter_shapes.emplace_back(name, std::move(shape));
    };
    add("conv1.w", {plan.c1, 1, kConv1K, kConv1K});
    add("conv1.b", {plan.c1});
    add("conv2.w", {plan.c2, plan.c1, kConv2K, kConv2K});
    add("conv2.b", {plan.c2});
    add("conv3.w", {plan.c3, plan.c2, kConv34K, kConv34K});
    add("conv3.b", {plan.c3});
    add("conv4.w", {plan.c4, plan.c3, kConv34K, kConv34K});
    add("conv4.b", {plan.c4});
    add("fc1.w", {plan.fc1, plan.head_flat});
    add("fc1.b", {plan.fc1});
    add("fc2.w", {plan.fc2, plan.concat_width});
    add("fc2.b", {plan.fc2});
    add("fc3.w", {plan.fc3, plan.trunk_flat});
    add("fc3.b", {plan.fc3});
    add("fc4.w", {plan.fc4, plan.fc3});
    add("fc4.b", {plan.fc4});
    add("cls.w", {kClasses, plan.fc2});
    add("cls.b", {kClasses});
    check_contract(plan.parameter_shapes.size() == kParamCount, "plan: parameter list drifted");
    return plan;
}

std::string NetworkPlan::describe() const {
    std::ostringstream os;
    os << "stage          c        h        w\n";
    for (const Stage& st : stages) {
        char line[80];
        std::snprintf(line, sizeof(line), "%-10s %6zu %8zu %8zu\n", st.name.c_str(), st.c, st.h,
                      st.w);
        os << line;
    }
    os << "fc widths: fc1=" << fc1 << " fc2=" << fc2 << " fc3=" << fc3 << " fc4=" << fc4
       << " (junction " << concat_width << ")\n";
    os << "segmentation branch: " << (seg_active ? "active" : "masked") << "\n";
    for (const auto& [name, shape] : parameter_shapes) {
        os << name << " [";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << "]\n";
    }
    os << "total parameters: " << parameter_total << "\n";
    return os.str();
}

Network::Network(const ArchitectureConfig& cfg, std::uint64_t seed) : plan_(plan_network(cfg)) {
    params_.reserve(plan_.parameter_shapes.size());
    for (const auto& [name, shape] : plan_.parameter_shapes) {
        // Weights get He draws from a per-name stream; biases start at zero.
        if (name.ends_with(".w")) {
            Rng rng(derive_seed(seed, name));
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
            params_.push_back(Parameter(name, he_init(shape, fan_in, rng)));
        } else {
            params_.push_back(Parameter(name, Tensor(shape)));
        }
    }
}

Activations Network::forward(const Tensor& input) const {
    check_contract(input.rank() == 4 && input.dim(1) == 1 &&
                       input.dim(2) == plan_.config.input_height &&
                       input.dim(3) == plan_.config.input_width,
                   "forward: input must be [B,1,H,W] matching the configuration");
    const std::size_t b_n = input.dim(0);

    Activations a;
    a.input = input;
    a.z1 = conv2d_forward(input, p(kConv1W).value, p(kConv1B).value, kConv1Stride, kConv1Pad);
    a.r1 = relu_forward(a.z1);
    PoolResult pr1 = maxpool_forward(a.r1, plan_.pool1.kh, plan_.pool1.kw, plan_.pool1.stride);
    a.p1 = std::move(pr1.output);
    a.am1 = std::move(pr1.argmax);
    a.z2 = conv2d_forward(a.p1, p(kConv2W).value, p(kConv2B).value, 1, kConv2Pad);
    a.r2 = relu_forward(a.z2);
    PoolResult pr2 = maxpool_forward(a.r2, plan_.pool2.kh, plan_.pool2.kw, plan_.pool2.stride);
    a.p2 = std::move(pr2.output);
    a.am2 = std::move(pr2.argmax);

    a.z3 = conv2d_forward(a.p2, p(kConv3W).value, p(kConv3B).value, 1, kConv34Pad);
    a.r3 = relu_forward(a.z3);
    a.z4 = conv2d_forward(a.r3, p(kConv4W).value, p(kConv4B).value, 1, kConv34Pad);
    a.r4 = relu_forward(a.z4);
    PoolResult pr3 = maxpool_forward(a.r4, plan_.pool3.kh, plan_.pool3.kw, plan_.pool3.stride);
    a.p3 = std::move(pr3.output);
    a.am3 = std::move(pr3.argmax);

    a.head_flat = a.p3.reshaped({b_n, plan_.head_flat});
    a.z_fc1 = fc_forward(a.head_flat, p(kFc1W).value, p(kFc1B).value);
    a.r_fc1 = relu_forward(a.z_fc1);

    if (plan_.seg_active) {
        a.trunk_flat = a.p2.reshaped({b_n, plan_.trunk_flat});
        a.z_fc3 = fc_forward(a.trunk_flat, p(kFc3W).value, p(kFc3B).value);
        a.seg_out = fc_forward(a.z_fc3, p(kFc4W).value, p(kFc4B).value);
    } else {
        a.z_fc3 = Tensor({b_n, plan_.fc3});
        a.seg_out = Tensor({b_n, plan_.fc4});
    }

    a.concat = concat_rows(a.r_fc1, a.z_fc3);
    a.z_fc2 = fc_forward(a.concat, p(kFc2W).value, p(kFc2B).value);
    a.r_fc2 = relu_forward(a.z_fc2);
    a.logits = fc_forward(a.r_fc2, p(kClsW).value, p(kClsB).value);
    a.probs = softmax(a.logits);
    return a;
}

Losses Network::backward(const Activations& a, const Tensor& targets_onehot,
                         const Tensor& seg_targets, double lambda) {
    check_contract(lambda >= 0.0 && std::isfinite(lambda), "backward: bad lambda");
    Losses losses;
    losses.ce = cross_entropy_loss(a.probs, targets_onehot);
    losses.euclid = plan_.seg_active ? euclidean_loss(a.seg_out, seg_targets) : 0.0;
    losses.total = total_loss(losses.ce, plan_.seg_active ? losses.euclid : 0.0, lambda);

    // Classifier head.
    Tensor d_logits = softmax_cross_entropy_grad(a.probs, targets_onehot);
    FcGrads g_cls = fc_backward(d_logits, a.r_fc2, p(kClsW).value);
    add_into(p(kClsW).grad, g_cls.grad_weights);
    add_into(p(kClsB).grad, g_cls.grad_bias);
    Tensor d_z_fc2 = relu_backward(g_cls.grad_input, a.z_fc2);
    FcGrads g_fc2 = fc_backward(d_z_fc2, a.concat, p(kFc2W).value);
    add_into(p(kFc2W).grad, g_fc2.grad_weights);
    add_into(p(kFc2B).grad, g_fc2.grad_bias);

    Tensor d_r_fc1 = slice_cols(g_fc2.grad_input, 0, plan_.fc1);
    Tensor d_trunk;  // from the segmentation branch, if any

    if (plan_.seg_active) {
        // fc3's output feeds both fc4 and the junction; sum the two paths.
        Tensor d_z_fc3 = slice_cols(g_fc2.grad_input, plan_.fc1, plan_.fc3);
        Tensor d_seg = euclidean_loss_grad(a.seg_out, seg_targets);
        for (double& v : d_seg.values()) v *= lambda;
        FcGrads g_fc4 = fc_backward(d_seg, a.z_fc3, p(kFc4W).value);
        add_into(p(kFc4W).grad, g_fc4.grad_weights);
        add_into(p(kFc4B).grad, g_fc4.grad_bias);
        add_into(d_z_fc3, g_fc4.grad_input);
        FcGrads g_fc3 = fc_backward(d_z_fc3, a.trunk_flat, p(kFc3W).value);
        add_into(p(kFc3W).grad, g_fc3.grad_weights);
        add_into(p(kFc3B).grad, g_fc3.grad_bias);
        d_trunk = std::move(g_fc3.grad_input);
    }

    // Prediction branch down to the trunk.
    Tensor d_z_fc1 = relu_backward(d_r_fc1, a.z_fc1);
    FcGrads g_fc1 = fc_backward(d_z_fc1, a.head_flat, p(kFc1W).value);
    add_into(p(kFc1W).grad, g_fc1.grad_weights);
    add_into(p(kFc1B).grad, g_fc1.grad_bias);
    Tensor d_p3 = g_fc1.grad_input.reshaped(a.p3.shape());
    Tensor d_r4 = maxpool_backward(d_p3, a.am3, a.r4.shape());
    Tensor d_z4 = relu_backward(d_r4, a.z4);
    ConvGrads g_c4 = conv2d_backward(d_z4, a.r3, p(kConv4W).value, 1, kConv34Pad);
    add_into(p(kConv4W).grad, g_c4.grad_weights);
    add_into(p(kConv4B).grad, g_c4.grad_bias);
    Tensor d_z3 = relu_backward(g_c4.grad_input, a.z3);
    ConvGrads g_c3 = conv2d_backward(d_z3, a.p2, p(kConv3W).value, 1, kConv34Pad);
    add_into(p(kConv3W).grad, g_c3.grad_weights);
    add_into(p(kConv3B).grad, g_c3.grad_bias);

    Tensor d_p2 = std::move(g_c3.grad_input);
    if (plan_.seg_active) add_into(d_p2, d_trunk.reshaped(a.p2.shape()));

    // Shared trunk.
    Tensor d_r2 = maxpool_backward(d_p2, a.am2, a.r2.shape());
    Tensor d_z2 = relu_backward(d_r2, a.z2);
    ConvGrads g_c2 = conv2d_backward(d_z2, a.p1, p(kConv2W).value, 1, kConv2Pad);
    add_into(p(kConv2W).grad, g_c2.grad_weights);
    add_into(p(kConv2B).grad, g_c2.grad_bias);
    Tensor d_r1 = maxpool_backward(g_c2.grad_input, a.am1, a.r1.shape());
    Tensor d_z1 = relu_backward(d_r1, a.z1);
    ConvGrads g_c1 = conv2d_backward(d_z1, a.input, p(kConv1W).value, kConv1Stride, kConv1Pad);
    add_into(p(kConv1W).grad, g_c1.grad_weights);
    add_into(p(kConv1B).grad, g_c1.grad_bias);
    return losses;
}

double Network::objective(const Tensor& input, const Tensor& targets_onehot,
                          const Tensor& seg_targets, double lambda) const {
    Activations a = forward(input);
    const double ce = cross_entropy_loss(a.probs, targets_onehot);
    const double eu = plan_.seg_active ? euclidean_loss(a.seg_out, seg_targets) : 0.0;
    return total_loss(ce, eu, lambda);
}

double Network::warning_score(const Tensor& image) const {
    check_contract(image.rank() == 3 && image.dim(0) == 1, "warning_score: expected [1,H,W]");
    Activations a = forward(image.reshaped({1, 1, image.dim(1), image.dim(2)}));
    return a.probs[1];
}

namespace {

struct Batch {
    Tensor input, onehot, seg;
};

Batch assemble(const data::SampleSet& set, const std::vector<std::size_t>& idx) {
    const std::size_t b_n = idx.size();
    const std::size_t h = set.height, w = set.width;
    Batch batch{Tensor({b_n, 1, h, w}), Tensor({b_n, kClasses}), Tensor({b_n, h * w})};
    for (std::size_t b = 0; b < b_n; ++b) {
        const data::Sample& s = set.samples[idx[b]];
        std::copy(s.image.values().begin(), s.image.values().end(),
                  batch.input.values().begin() + static_cast<std::ptrdiff_t>(b * h * w));
        std::copy(s.seg.values().begin(), s.seg.values().end(),
                  batch.seg.values().begin() + static_cast<std::ptrdiff_t>(b * h * w));
        batch.onehot[b * kClasses + (s.warning ? 1 : 0)] = 1.0;
    }
    return batch;
}

}  // namespace

TrainResult train_network(Network& net, const data::SampleSet& train, const TrainOptions& opts) {
    opts.opt.validate();
    check_contract(!train.samples.empty(), "train: empty sample set");
    check_contract(train.height == net.plan().config.input_height &&
                       train.width == net.plan().config.input_width,
                   "train: dataset resolution does not match the network");

    std::vector<int> labels(train.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = train.samples[i].warning;
    const std::vector<std::size_t> pool = data::balanced_indices(labels);

    namespace fs = std::filesystem;
    if (!opts.checkpoint_dir.empty()) fs::create_directories(opts.checkpoint_dir);

    Rng rng(derive_seed(opts.seed, "batches"));
    TrainResult result;
    result.log.reserve(opts.opt.iterations);
    std::vector<std::size_t> idx(opts.opt.batch_size);
    for (std::size_t iter = 1; iter <= opts.opt.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < idx.size(); ++b) idx[b] = pool[rng.uniform_below(pool.size())];
        Batch batch = assemble(train, idx);
        Activations acts = net.forward(batch.input);
        zero_grads(net.parameters());
        Losses losses = net.backward(acts, batch.onehot, batch.seg, opts.lambda);
        if (!std::isfinite(losses.total)) {
            throw std::runtime_error("training diverged at iteration " + std::to_string(iter) +
                                     ": loss is not finite");
        }
        sgd_step(net.parameters(), opts.opt);
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.log.push_back({iter, losses.total, losses.ce, losses.euclid, ms});

        if (!opts.checkpoint_dir.empty() && opts.checkpoint_every > 0 &&
            iter % opts.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "iter_%05zu.ckpt", iter);
            save_checkpoint((fs::path(opts.checkpoint_dir) / name).string(), net.parameters());
        }
    }

    std::size_t correct = 0;
    const std::vector<double> scores = warning_scores(net, train, opts.opt.batch_size);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        correct += (scores[i] > 0.5 ? 1 : 0) == train.samples[i].warning ? 1 : 0;
    }
    result.train_accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    return result;
}

std::vector<double> warning_scores(const Network& net, const data::SampleSet& set,
                                   std::size_t batch_size) {
    check_contract(batch_size > 0, "warning_scores: batch_size must be positive");
    std::vector<double> scores;
    scores.reserve(set.samples.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.samples.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(start + batch_size, set.samples.size()); ++i) {
            idx.push_back(i);
        }
        Batch batch = assemble(set, idx);
        Activations a = net.forward(batch.input);
        for (std::size_t b = 0; b < idx.size(); ++b) scores.push_back(a.probs[b * kClasses + 1]);
    }
    return scores;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << "iteration,l_total,l_ce,l_euclid,wall_ms\n";
    for (const TrainLogRow& r : rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.3f\n", r.iteration, r.l_total,
                      r.l_ce, r.l_euclid, r.wall_ms);
        f << line;
    }
}

std::vector<TrainLogRow> read_train_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "iteration,l_total,l_ce,l_euclid,wall_ms") {
        throw ParseError(path + ": bad train log header", 0);
    }
    std::vector<TrainLogRow> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        TrainLogRow r;
        if (std::sscanf(line.c_str(), "%zu,%lg,%lg,%lg,%lg", &r.iteration, &r.l_total, &r.l_ce,
                        &r.l_euclid, &r.wall_ms) != 5) {
            throw ParseError(path + ": malformed row at line " + std::to_string(line_no), line_no);
        }
        rows.push_back(r);
    }
    return rows;
}

double smoothed_total_loss(const std::vector<TrainLogRow>& rows, std::size_t iteration,
                           std::size_t window) {
    check_contract(window > 0, "smoothed_total_loss: window must be positive");
    double sum = 0.0;
    std::size_t n = 0;
    for (const TrainLogRow& r : rows) {
        if (r.iteration <= iteration && r.iteration + window > iteration) {
            sum += r.l_total;
            ++n;
        }
    }
    check_contract(n > 0, "smoothed_total_loss: no rows in window");
    return sum / static_cast<double>(n);
}

}  // namespace pcw::nn
