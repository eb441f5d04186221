#pragma once

#include <cstdint>
#include <string>

#include "pcw/config.hpp"

namespace pcw {

// Pipeline stages. Each writes its artifacts under cfg.out_dir:
//
//   dataset/          synthetic scenes + train.csv/eval.csv manifests
//   cnn_with_seg/     trained two-branch model (lambda > 0)
//   cnn_no_seg/       trained prediction-only model (lambda == 0)
//   baseline/         sliding-window detector + its eval scores
//   eval/             scores, ROC curves, report.csv, roc.svg
//
// plus a run_manifest.json per stage recording the configuration and a
// digest of every artifact. Nothing in the manifests depends on wall-clock
// time or the absolute output location, so two runs of the same
// configuration produce byte-identical trees (the wall_ms column of
// train_log.csv is projected out of its digest).
void run_generate(const RunConfig& cfg);

// Trains with cfg.lambda as given; the output directory is cnn_with_seg when
// lambda > 0 and cnn_no_seg when it is zero. Requires the dataset stage.
void run_train(const RunConfig& cfg);

// Requires the dataset stage.
void run_baseline(const RunConfig& cfg);

// Requires dataset, both trained models, and the baseline.
void run_eval(const RunConfig& cfg);

// generate -> train (lambda and lambda=0) -> baseline -> eval, then writes
// run_digest.txt summarising every artifact digest. cfg.lambda must be > 0.
void run_repro(const RunConfig& cfg);

// FNV-1a 64 digest helpers used for the manifests.
std::uint64_t digest_file(const std::string& path);
std::string hex64(std::uint64_t v);

}  // namespace pcw
