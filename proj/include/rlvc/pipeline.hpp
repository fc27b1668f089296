#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "rlvc/config.hpp"
#include "rlvc/eval.hpp"
#include "rlvc/reward.hpp"
#include "rlvc/trainer.hpp"

// The five commands of the rlvc tool, usable without the CLI.
namespace rlvc::pipeline {

/// Loads `cfg.dataset` and standardizes it when `cfg.standardize` is set.
data::ZslDataset load(const RunConfig& cfg);

/// Writes the synthetic benchmark to `cfg.out`. Refuses a non-empty
/// directory unless `cfg.overwrite`.
std::filesystem::path gen_synthetic(const RunConfig& cfg);

/// Labels of seen-class rows mapped to indices into the sorted seen-class list.
std::vector<int> seen_indices(const data::ZslDataset& ds, std::span<const int> rows);

struct PretrainResult {
    rl::RewardModel model;
    double train_accuracy = 0.0;
    std::filesystem::path checkpoint;
};
PretrainResult pretrain_reward(const RunConfig& cfg);

struct TrainResult {
    std::vector<train::MetricsRow> metrics;
    std::vector<train::UpdateCounters> counters;
    std::filesystem::path generator;
    std::filesystem::path metrics_log;
};
/// Writes the generator checkpoint, metrics.csv, prototypes.txt and
/// config.txt into `cfg.out`. On a numeric abort the partial metrics log is
/// still written before the exception propagates.
TrainResult train(const RunConfig& cfg, std::ostream* progress = nullptr);

/// Exports `cfg.synth_per_class` features per unseen class into `cfg.out`.
std::filesystem::path synthesize(const RunConfig& cfg);

/// Prints nothing; writes report.txt into `cfg.out`.
eval::EvalReport evaluate(const RunConfig& cfg);

}  // namespace rlvc::pipeline
