#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcw/datagen.hpp"
#include "pcw/ops.hpp"
#include "pcw/tensor.hpp"

namespace pcw::nn {

// Two-branch warning network. The trunk (conv1, conv2) is shared; the
// prediction branch continues conv3/conv4/pool/fc1, is joined by the
// segmentation branch's fc3 output, and classifies through fc2 into two
// classes. The segmentation branch reads the trunk and regresses the
// flattened segmentation map through fc3/fc4 (both linear).
//
// With lambda == 0 the segmentation branch is masked: fc3/fc4 keep their
// initial weights, the forward pass skips them, and the junction sees zeros
// in their slots, so the model is exactly the prediction-only network while
// every weight tensor keeps its shape.
struct ArchitectureConfig {
    std::size_t input_width = 512;
    std::size_t input_height = 256;
    // Divides every channel and fc width; 1 is the full-size network, 8 the
    // desk profile. All base widths must stay divisible.
    std::size_t scale_divisor = 1;
    double lambda = 0.001;

    void validate() const;
};

struct PoolSpec {
    std::size_t kh = 3, kw = 3, stride = 2;
};

// Everything about the network that can be known without allocating weights.
struct NetworkPlan {
    ArchitectureConfig config;
    bool seg_active = true;

    std::size_t c1, c2, c3, c4;        // conv channel counts
    std::size_t fc1, fc2, fc3, fc4;    // fc output widths; fc4 == W*H
    std::size_t trunk_flat;            // flattened trunk feeding fc3
    std::size_t head_flat;             // flattened pool3 feeding fc1
    std::size_t concat_width;          // fc1 + fc3
    // Pool windows, clamped per dimension when a feature map is narrower
    // than the nominal 3x3 window.
    PoolSpec pool1, pool2, pool3;

    struct Stage {
        std::string name;
        std::size_t c, h, w;
    };
    std::vector<Stage> stages;

    std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_shapes;
    std::size_t parameter_total = 0;  // scalar count

    std::string describe() const;  // human-readable audit listing
};

NetworkPlan plan_network(const ArchitectureConfig& cfg);

// Saved forward pass; everything backward() needs.
struct Activations {
    Tensor input;
    Tensor z1, r1, p1;
    Tensor z2, r2, p2;
    Tensor z3, r3, z4, r4, p3;
    std::vector<std::size_t> am1, am2, am3;
    Tensor head_flat;              // [B, head_flat]
    Tensor z_fc1, r_fc1;
    Tensor trunk_flat;             // [B, trunk_flat] (kept when seg is active)
    Tensor z_fc3;                  // zeros when the branch is masked
    Tensor concat;
    Tensor z_fc2, r_fc2;
    Tensor logits, probs;          // [B,2]
    Tensor seg_out;                // [B, W*H]; zeros when masked
};

struct Losses {
    double total = 0.0;
    double ce = 0.0;
    double euclid = 0.0;
};

class Network {
  public:
    // Weights are He-initialised; each parameter's stream is seeded from
    // (seed, name), so two networks built from the same seed agree on every
    // shared tensor regardless of configuration.
    Network(const ArchitectureConfig& cfg, std::uint64_t seed);

    const NetworkPlan& plan() const { return plan_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }

    Activations forward(const Tensor& input) const;  // input [B,1,H,W]

    // Adds d(total)/d(param) into every gradient accumulator and reports the
    // loss values. `lambda` weights the segmentation term at runtime; the
    // masked branch ignores it.
    Losses backward(const Activations& acts, const Tensor& targets_onehot,
                    const Tensor& seg_targets, double lambda);

    // Loss value only; the finite-difference checks drive this.
    double objective(const Tensor& input, const Tensor& targets_onehot, const Tensor& seg_targets,
                     double lambda) const;

    // P(warning) for a single [1,H,W] image.
    double warning_score(const Tensor& image) const;

  private:
    const Parameter& p(std::size_t i) const { return params_[i]; }
    Parameter& p(std::size_t i) { return params_[i]; }

    NetworkPlan plan_;
    std::vector<Parameter> params_;
};

// Indices into Network::parameters(); fixed declaration order.
enum ParamIndex : std::size_t {
    kConv1W = 0, kConv1B, kConv2W, kConv2B, kConv3W, kConv3B, kConv4W, kConv4B,
    kFc1W, kFc1B, kFc2W, kFc2B, kFc3W, kFc3B, kFc4W, kFc4B, kClsW, kClsB,
    kParamCount,
};

struct TrainLogRow {
    std::size_t iteration = 0;  // 1-based
    double l_total = 0.0;
    double l_ce = 0.0;
    double l_euclid = 0.0;
    double wall_ms = 0.0;
};

struct TrainOptions {
    OptimizerConfig opt;
    double lambda = 0.001;
    std::uint64_t seed = 1;
    std::string checkpoint_dir;          // empty disables snapshots
    std::size_t checkpoint_every = 500;
};

struct TrainResult {
    std::vector<TrainLogRow> log;
    double train_accuracy = 0.0;  // final weights, whole (unbalanced) split
};

// Class-balanced SGD: batches are drawn with replacement from the oversampled
// index list. Throws if the loss stops being finite, naming the iteration.
TrainResult train_network(Network& net, const data::SampleSet& train, const TrainOptions& opts);

// Batched P(warning) for every sample in the set.
std::vector<double> warning_scores(const Network& net, const data::SampleSet& set,
                                   std::size_t batch_size);

// Train-log CSV: "iteration,l_total,l_ce,l_euclid,wall_ms". Losses round-trip
// exactly; wall_ms is the one column that varies between identical runs.
void write_train_log(const std::string& path, const std::vector<TrainLogRow>& rows);
std::vector<TrainLogRow> read_train_log(const std::string& path);

// Trailing mean of l_total over the `window` rows ending at `iteration`.
double smoothed_total_loss(const std::vector<TrainLogRow>& rows, std::size_t iteration,
                           std::size_t window);

}  // namespace pcw::nn
