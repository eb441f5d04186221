#pragma once

#include <cstdint>
#include <string>

#include "pcw/datagen.hpp"
#include "pcw/network.hpp"
#include "pcw/ops.hpp"

namespace pcw {

// One flat configuration drives every pipeline stage. Defaults describe the
// full-size setup; configs/desk.cfg scales it down to laptop size.
struct RunConfig {
    // dataset
    std::size_t width = 512;
    std::size_t height = 256;
    std::size_t train_count = 2975;
    std::size_t eval_count = 1525;
    double warning_fraction = 1.0 / 6.0;
    // model
    std::size_t scale_divisor = 1;
    double lambda = 0.001;
    // optimiser
    double learning_rate = 0.001;
    double weight_decay = 0.0001;
    std::size_t batch_size = 128;
    std::size_t iterations = 2000;
    // run
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    data::DatasetConfig dataset() const;
    nn::ArchitectureConfig architecture() const;  // lambda as configured
    nn::OptimizerConfig optimizer() const;
    void validate() const;
};

// key = value lines; blank lines and '#' comments are skipped. Unknown or
// repeated keys and malformed values are ConfigErrors naming the offender.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Single key override (same key set as the file format).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace pcw
