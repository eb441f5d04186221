#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcw/image.hpp"
#include "pcw/rng.hpp"
#include "pcw/tensor.hpp"

namespace pcw::data {

// Semantic classes painted by the scene generator. Segmentation targets for
// the network are these ids mapped to id/5 in [0,1]; on disk they are stored
// as 8-bit PGM with pixel value id*51.
enum SceneClass : std::uint8_t {
    kBackground = 0,
    kRoad = 1,
    kSidewalk = 2,
    kVehicle = 3,
    kPedestrian = 4,
    kCyclist = 5,
};

constexpr std::uint8_t kSceneClassCount = 6;

// Bottom pixel row and occupied column range of one pedestrian or cyclist.
struct AgentFootprint {
    std::size_t y_b = 0;
    long x0 = 0, x1 = 0;
};

// One synthetic street scene. `warning` is 1 exactly when some pedestrian or
// cyclist stands on the road: its bottom pixel row must contain a pixel
// column x with road_left[y] <= x+0.5 < road_right[y]. The road edges and
// agent footprints are exported so the label can be re-derived externally.
struct Scene {
    Image image;                    // grayscale, [0,1]
    std::vector<std::uint8_t> seg;  // class ids, row-major height*width
    std::vector<double> road_left;  // per row; empty interval above the horizon
    std::vector<double> road_right;
    std::vector<AgentFootprint> footprints;
    int warning = 0;
};

// Deterministic in (width, height, seed, want_warning); the generator places
// at least one pedestrian or cyclist per scene and keeps every one of them
// off the road when want_warning is false.
Scene make_scene(std::size_t width, std::size_t height, std::uint64_t seed, bool want_warning);

struct DatasetConfig {
    std::size_t width = 512;
    std::size_t height = 256;
    std::size_t train_count = 2975;
    std::size_t eval_count = 1525;
    double warning_fraction = 1.0 / 6.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SampleRef {
    std::string image_path;  // relative to the dataset root
    std::string seg_path;
    int warning = 0;
};

// Writes <out_dir>/{train,eval}/{images,seg}/*.pgm plus train.csv/eval.csv
// manifests (header "image,seg,warning", paths relative to out_dir). Exactly
// round(count * warning_fraction) samples of each split carry warning=1; the
// label order is a seeded shuffle, so regenerating is byte-identical.
void generate_dataset(const DatasetConfig& cfg, const std::string& out_dir);

std::vector<SampleRef> load_manifest(const std::string& csv_path);

struct Sample {
    Tensor image;  // [1,H,W]
    Tensor seg;    // [H*W], values class_id/5
    int warning = 0;
};

Sample load_sample(const std::string& dataset_dir, const SampleRef& ref);

struct SampleSet {
    std::vector<Sample> samples;
    std::size_t width = 0;
    std::size_t height = 0;
};

SampleSet load_split(const std::string& dataset_dir, const std::string& manifest_name);

// Oversamples the minority class until both label counts match. Every index
// appears at least once in original order; each minority index is then
// repeated floor(majority/minority)-1 extra times, and the first
// majority%minority minority indices once more. With counts 500/2500 every
// minority index therefore appears exactly five times.
std::vector<std::size_t> balanced_indices(const std::vector<int>& labels);

struct AgentBox {
    std::size_t x0, y0, x1, y1;  // inclusive pixel bounds
    std::uint8_t cls;            // kPedestrian or kCyclist
};

// Connected components (4-neighbour, per class) of pedestrian and cyclist
// pixels in a segmentation map.
std::vector<AgentBox> agent_boxes(const std::vector<std::uint8_t>& seg, std::size_t width,
                                  std::size_t height);

}  // namespace pcw::data
