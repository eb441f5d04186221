#include "pcw/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pcw/checkpoint.hpp"
#include "pcw/error.hpp"
#include "pcw/eval.hpp"
#include "pcw/hog.hpp"
#include "pcw/network.hpp"
#include "pcw/rng.hpp"

namespace pcw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dataset_dir(const RunConfig& cfg) { return cfg.out_dir + "/dataset"; }
std::string model_dir(const RunConfig& cfg, bool with_seg) {
    return cfg.out_dir + (with_seg ? "/cnn_with_seg" : "/cnn_no_seg");
}
std::string baseline_dir(const RunConfig& cfg) { return cfg.out_dir + "/baseline"; }
std::string eval_dir(const RunConfig& cfg) { return cfg.out_dir + "/eval"; }

void require_stage(const std::string& probe_file, const std::string& hint) {
    if (!fs::exists(probe_file)) {
        throw ConfigError("missing " + probe_file + "; run `" + hint + "` first");
    }
}

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// train_log.csv varies only in its wall_ms column between identical runs, so
// its digest covers the row content with that column removed.
std::uint64_t digest_train_log(const std::string& path) {
    const std::string bytes = read_bytes(path);
    std::string projected;
    projected.reserve(bytes.size());
    std::size_t line_start = 0;
    while (line_start < bytes.size()) {
        std::size_t line_end = bytes.find('\n', line_start);
        if (line_end == std::string::npos) line_end = bytes.size();
        const std::size_t last_comma = bytes.rfind(',', line_end);
        const std::size_t cut =
            last_comma != std::string::npos && last_comma >= line_start ? last_comma : line_end;
        projected.append(bytes, line_start, cut - line_start);
        projected.push_back('\n');
        line_start = line_end + 1;
    }
    return fnv1a64(projected);
}

std::uint64_t digest_artifact(const fs::path& file) {
    if (file.filename() == "train_log.csv") return digest_train_log(file.string());
    return fnv1a64(read_bytes(file.string()));
}

// Sorted relative path -> digest for everything under the stage directory,
// excluding the manifest itself.
std::vector<std::pair<std::string, std::uint64_t>> collect_artifacts(const std::string& stage_dir) {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    for (const auto& entry : fs::recursive_directory_iterator(stage_dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "run_manifest.json") continue;
        out.emplace_back(fs::relative(entry.path(), stage_dir).generic_string(),
                         digest_artifact(entry.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

json config_json(const RunConfig& cfg) {
    // out_dir is deliberately omitted so runs in different places compare
    // equal.
    json j;
    j["width"] = cfg.width;
    j["height"] = cfg.height;
    j["train_count"] = cfg.train_count;
    j["eval_count"] = cfg.eval_count;
    j["warning_fraction"] = cfg.warning_fraction;
    j["scale_divisor"] = cfg.scale_divisor;
    j["lambda"] = cfg.lambda;
    j["learning_rate"] = cfg.learning_rate;
    j["weight_decay"] = cfg.weight_decay;
    j["batch_size"] = cfg.batch_size;
    j["iterations"] = cfg.iterations;
    j["seed"] = cfg.seed;
    return j;
}

void write_manifest(const std::string& stage_dir, const std::string& command,
                    const RunConfig& cfg, json extra = json::object()) {
    json j;
    j["command"] = command;
    j["config"] = config_json(cfg);
    json artifacts = json::object();
    for (const auto& [rel, digest] : collect_artifacts(stage_dir)) {
        artifacts[rel] = hex64(digest);
    }
    j["artifacts"] = artifacts;
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream f(stage_dir + "/run_manifest.json", std::ios::trunc);
    if (!f) throw ConfigError("cannot write manifest in " + stage_dir);
    f << j.dump(2) << "\n";
}

void write_scores_csv(const std::string& path, const data::SampleSet& set,
                      const std::vector<double>& scores,
                      const std::vector<data::SampleRef>& refs) {
    check_contract(scores.size() == set.samples.size() && refs.size() == scores.size(),
                   "scores: size mismatch");
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << "image,score,warning\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        char line[256];
        std::snprintf(line, sizeof(line), "%s,%.17g,%d\n", refs[i].image_path.c_str(), scores[i],
                      set.samples[i].warning);
        f << line;
    }
}

struct ScoreFile {
    std::vector<double> scores;
    std::vector<int> labels;
};

ScoreFile read_scores_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "image,score,warning") {
        throw ParseError(path + ": bad scores header", 0);
    }
    ScoreFile out;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError(path + ": malformed row at line " + std::to_string(line_no), line_no);
        }
        out.scores.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        out.labels.push_back(line.substr(c2 + 1) == "1" ? 1 : 0);
    }
    return out;
}

}  // namespace

std::uint64_t digest_file(const std::string& path) { return fnv1a64(read_bytes(path)); }

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void run_generate(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = dataset_dir(cfg);
    fs::create_directories(dir);
    data::generate_dataset(cfg.dataset(), dir);
    write_manifest(dir, "generate", cfg);
    std::cout << "dataset: " << cfg.train_count << " train / " << cfg.eval_count
              << " eval scenes at " << cfg.width << "x" << cfg.height << " under " << dir << "\n";
}

void run_train(const RunConfig& cfg) {
    cfg.validate();
    require_stage(dataset_dir(cfg) + "/train.csv", "generate");
    const bool with_seg = cfg.lambda > 0.0;
    const std::string dir = model_dir(cfg, with_seg);
    fs::create_directories(dir);

    const data::SampleSet train = data::load_split(dataset_dir(cfg), "train.csv");
    nn::Network net(cfg.architecture(), cfg.seed);
    nn::TrainOptions opts;
    opts.opt = cfg.optimizer();
    opts.lambda = cfg.lambda;
    opts.seed = cfg.seed;
    opts.checkpoint_dir = dir + "/checkpoints";
    nn::TrainResult result = nn::train_network(net, train, opts);

    save_checkpoint(dir + "/final.ckpt", net.parameters());
    nn::write_train_log(dir + "/train_log.csv", result.log);
    json extra;
    extra["train_accuracy"] = result.train_accuracy;
    write_manifest(dir, "train", cfg, extra);

    const nn::TrainLogRow& last = result.log.back();
    std::printf("%s: %zu iterations, final l_total %.4f (ce %.4f, euclid %.4f), train accuracy "
                "%.3f\n",
                with_seg ? "cnn_with_seg" : "cnn_no_seg", last.iteration, last.l_total, last.l_ce,
                last.l_euclid, result.train_accuracy);
}

void run_baseline(const RunConfig& cfg) {
    cfg.validate();
    require_stage(dataset_dir(cfg) + "/train.csv", "generate");
    const std::string dir = baseline_dir(cfg);
    fs::create_directories(dir);

    const data::SampleSet train = data::load_split(dataset_dir(cfg), "train.csv");
    const hog::BaselineModel model = hog::train_baseline(train, cfg.seed);

    std::vector<Parameter> params;
    params.push_back(Parameter("hog.w", Tensor({model.model.w.size()}, model.model.w)));
    params.push_back(Parameter("hog.b", Tensor({1}, {model.model.b})));
    save_checkpoint(dir + "/model.ckpt", params);

    const data::SampleSet eval_set = data::load_split(dataset_dir(cfg), "eval.csv");
    const std::vector<data::SampleRef> refs =
        data::load_manifest(dataset_dir(cfg) + "/eval.csv");
    const std::vector<double> scores = hog::baseline_scores(model, eval_set);
    write_scores_csv(dir + "/scores.csv", eval_set, scores, refs);
    write_manifest(dir, "baseline", cfg);
    std::cout << "baseline: descriptor length " << model.hog.descriptor_length() << ", scored "
              << scores.size() << " eval frames\n";
}

void run_eval(const RunConfig& cfg) {
    cfg.validate();
    if (!(cfg.lambda > 0.0)) {
        throw ConfigError("eval: lambda must be positive to locate the with-seg model");
    }
    require_stage(dataset_dir(cfg) + "/eval.csv", "generate");
    require_stage(model_dir(cfg, true) + "/final.ckpt", "train");
    require_stage(model_dir(cfg, false) + "/final.ckpt", "train (with lambda = 0)");
    require_stage(baseline_dir(cfg) + "/scores.csv", "baseline");
    const std::string dir = eval_dir(cfg);
    fs::create_directories(dir);

    const data::SampleSet eval_set = data::load_split(dataset_dir(cfg), "eval.csv");
    const std::vector<data::SampleRef> refs =
        data::load_manifest(dataset_dir(cfg) + "/eval.csv");
    std::vector<int> labels(eval_set.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = eval_set.samples[i].warning;

    auto scored_model = [&](bool with_seg) {
        RunConfig mc = cfg;
        if (!with_seg) mc.lambda = 0.0;
        nn::Network net(mc.architecture(), cfg.seed);
        restore_parameters(load_checkpoint(model_dir(cfg, with_seg) + "/final.ckpt"),
                           net.parameters());
        return nn::warning_scores(net, eval_set, cfg.batch_size);
    };
    const std::vector<double> with_seg_scores = scored_model(true);
    const std::vector<double> no_seg_scores = scored_model(false);
    write_scores_csv(dir + "/scores_cnn_with_seg.csv", eval_set, with_seg_scores, refs);
    write_scores_csv(dir + "/scores_cnn_no_seg.csv", eval_set, no_seg_scores, refs);

    const ScoreFile hog_scores = read_scores_csv(baseline_dir(cfg) + "/scores.csv");
    check_contract(hog_scores.labels == labels, "eval: baseline scores disagree with the dataset");

    std::vector<eval::MethodResult> results;
    results.push_back({"hog", eval::roc(hog_scores.scores, labels)});
    results.push_back({"cnn_no_seg", eval::roc(no_seg_scores, labels)});
    results.push_back({"cnn_with_seg", eval::roc(with_seg_scores, labels)});

    for (const eval::MethodResult& r : results) {
        eval::write_roc_csv(dir + "/roc_" + r.name + ".csv", r.curve);
    }
    eval::write_report_csv(dir + "/report.csv", results, 0.15);
    eval::write_roc_svg(dir + "/roc.svg", results);
    write_manifest(dir, "eval", cfg);
    std::cout << eval::comparison_table(results, 0.15);
}

void run_repro(const RunConfig& cfg) {
    cfg.validate();
    if (!(cfg.lambda > 0.0)) {
        throw ConfigError("repro: lambda must be positive (the run trains the lambda=0 variant "
                          "alongside it)");
    }
    run_generate(cfg);
    run_train(cfg);
    RunConfig no_seg = cfg;
    no_seg.lambda = 0.0;
    run_train(no_seg);
    run_baseline(cfg);
    run_eval(cfg);

    // One digest per artifact across all stages, plus a combined digest, so
    // two runs can be compared with a single file diff.
    std::string listing;
    std::vector<std::pair<std::string, std::uint64_t>> all;
    for (const char* stage : {"dataset", "cnn_with_seg", "cnn_no_seg", "baseline", "eval"}) {
        for (const auto& [rel, digest] : collect_artifacts(cfg.out_dir + "/" + stage)) {
            all.emplace_back(std::string(stage) + "/" + rel, digest);
        }
        all.emplace_back(std::string(stage) + "/run_manifest.json",
                         digest_file(cfg.out_dir + "/" + stage + "/run_manifest.json"));
    }
    std::sort(all.begin(), all.end());
    for (const auto& [rel, digest] : all) listing += hex64(digest) + "  " + rel + "\n";
    listing += "combined " + hex64(fnv1a64(listing)) + "\n";
    std::ofstream f(cfg.out_dir + "/run_digest.txt", std::ios::trunc);
    if (!f) throw ConfigError("cannot write run_digest.txt");
    f << listing;
    std::cout << "run digest written to " << cfg.out_dir << "/run_digest.txt\n";
}

}  // namespace pcw
