#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcw/datagen.hpp"
#include "pcw/image.hpp"

namespace pcw::hog {

// Histogram-of-oriented-gradients descriptor. Defaults give the classic
// 64x128 pedestrian window: 8x8-pixel cells, 2x2-cell blocks at one-cell
// stride, 9 unsigned orientation bins over [0,180), L2-hys block
// normalisation -> 7*15*36 = 3780 values.
struct HogConfig {
    std::size_t window_w = 64;
    std::size_t window_h = 128;
    std::size_t cell = 8;
    std::size_t block = 2;
    std::size_t bins = 9;
    double l2hys_clip = 0.2;
    double norm_eps = 1e-10;

    void validate() const;
    std::size_t cells_x() const { return window_w / cell; }
    std::size_t cells_y() const { return window_h / cell; }
    std::size_t blocks_x() const { return cells_x() - block + 1; }
    std::size_t blocks_y() const { return cells_y() - block + 1; }
    std::size_t block_len() const { return block * block * bins; }
    std::size_t descriptor_length() const { return blocks_x() * blocks_y() * block_len(); }
};

// Per-cell orientation histograms of a whole grayscale image. Gradients are
// centred differences with replicated borders; each pixel votes its magnitude
// into the two bins bracketing its orientation (bin centres at k*20 degrees,
// wrapping), with no spatial interpolation. Partial cells at the right/bottom
// are dropped.
struct CellGrid {
    std::size_t cx = 0, cy = 0, bins = 0;
    std::vector<double> hist;  // cy * cx * bins
};
CellGrid cell_histograms(const Image& gray, const HogConfig& cfg);

// All L2-hys-normalised blocks of an image, so sliding windows can reuse them.
struct BlockGrid {
    std::size_t bx = 0, by = 0, len = 0;
    std::vector<double> data;  // by * bx * len
};
BlockGrid normalized_blocks(const CellGrid& cells, const HogConfig& cfg);

// Descriptor of the window whose top-left corner sits at cell (cell_x,
// cell_y); writes descriptor_length() doubles.
void window_descriptor(const BlockGrid& blocks, std::size_t cell_x, std::size_t cell_y,
                       const HogConfig& cfg, double* out);

// One-shot descriptor of an exactly window-sized image.
std::vector<double> compute_descriptor(const Image& window, const HogConfig& cfg);

struct LinearModel {
    std::vector<double> w;
    double b = 0.0;

    double score(const std::vector<double>& x) const;
};

struct HingeTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double learning_rate = 0.02;
    double l2 = 1e-4;
    std::uint64_t seed = 1;
};

// Mini-batch subgradient descent on the L2-regularised hinge loss.
LinearModel train_hinge(const std::vector<std::vector<double>>& positives,
                        const std::vector<std::vector<double>>& negatives,
                        const HingeTrainConfig& cfg);

struct Detection {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // frame coordinates, [x0,x1)
    double score = 0;
};

double iou(const Detection& a, const Detection& b);

// Greedy non-maximum suppression; candidates are ranked by (score desc, y0,
// x0) so equal scores resolve the same way every run.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

struct DetectConfig {
    std::vector<double> scales = {1.0, 0.8, 0.64, 0.512, 0.4096};  // 1.25^-k
    double keep_threshold = -1.0;
    double nms_iou = 0.5;
};

// Multi-scale sliding-window detection over a grayscale frame. The window
// slides at one-cell (8px) granularity on each pyramid level; boxes are
// reported in frame coordinates.
std::vector<Detection> detect(const Image& frame, const LinearModel& model, const HogConfig& cfg,
                              const DetectConfig& det);

// Warning region: the central half of the frame in x, full height.
struct RoiRule {
    double x0, y0, x1, y1;

    static RoiRule centered(std::size_t frame_w, std::size_t frame_h);
    bool contains_center(const Detection& d) const;
};

// No detection inside the region scores this sentinel.
constexpr double kNoDetectionScore = -1e9;

// Max detector score among detections whose centre lies in the region.
double warning_score(const std::vector<Detection>& dets, const RoiRule& roi);

// The trained baseline: detector weights plus the fixed analysis frame that
// every dataset image is upscaled to before detection.
struct BaselineModel {
    LinearModel model;
    HogConfig hog;
    std::size_t frame_w = 512;
    std::size_t frame_h = 256;
    DetectConfig det;
};

// Trains the detector from a labelled split: positives are the pedestrian and
// cyclist crops named by the segmentation maps, negatives are random road-free
// crops plus one round of hard negatives mined with the first model.
BaselineModel train_baseline(const data::SampleSet& train, std::uint64_t seed);

double score_frame(const BaselineModel& model, const Tensor& image);
std::vector<double> baseline_scores(const BaselineModel& model, const data::SampleSet& set);

}  // namespace pcw::hog
