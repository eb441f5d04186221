#include "pcw/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pcw/error.hpp"

namespace pcw {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        // stoull would wrap "-3" around instead of rejecting it.
        if (value.empty() || !std::isdigit(static_cast<unsigned char>(value[0]))) {
            throw std::invalid_argument("not a digit");
        }
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " needs a non-negative integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " needs a finite number, got '" + value + "'");
    }
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "width") {
        cfg.width = parse_size(key, value);
    } else if (key == "height") {
        cfg.height = parse_size(key, value);
    } else if (key == "train_count") {
        cfg.train_count = parse_size(key, value);
    } else if (key == "eval_count") {
        cfg.eval_count = parse_size(key, value);
    } else if (key == "warning_fraction") {
        cfg.warning_fraction = parse_double(key, value);
    } else if (key == "scale_divisor") {
        cfg.scale_divisor = parse_size(key, value);
    } else if (key == "lambda") {
        cfg.lambda = parse_double(key, value);
    } else if (key == "learning_rate") {
        cfg.learning_rate = parse_double(key, value);
    } else if (key == "weight_decay") {
        cfg.weight_decay = parse_double(key, value);
    } else if (key == "batch_size") {
        cfg.batch_size = parse_size(key, value);
    } else if (key == "iterations") {
        cfg.iterations = parse_size(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_size(key, value);
    } else if (key == "out_dir") {
        if (value.empty()) throw ConfigError("config: out_dir must not be empty");
        cfg.out_dir = value;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key or value");
        }
        if (!seen.insert(key).second) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        }
        try {
            apply_override(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

data::DatasetConfig RunConfig::dataset() const {
    data::DatasetConfig d;
    d.width = width;
    d.height = height;
    d.train_count = train_count;
    d.eval_count = eval_count;
    d.warning_fraction = warning_fraction;
    d.seed = seed;
    return d;
}

nn::ArchitectureConfig RunConfig::architecture() const {
    nn::ArchitectureConfig a;
    a.input_width = width;
    a.input_height = height;
    a.scale_divisor = scale_divisor;
    a.lambda = lambda;
    return a;
}

nn::OptimizerConfig RunConfig::optimizer() const {
    nn::OptimizerConfig o;
    o.learning_rate = learning_rate;
    o.weight_decay = weight_decay;
    o.batch_size = batch_size;
    o.iterations = iterations;
    return o;
}

void RunConfig::validate() const {
    dataset().validate();
    architecture().validate();
    optimizer().validate();
}

}  // namespace pcw
