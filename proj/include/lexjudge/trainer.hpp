#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lexjudge/corpus.hpp"
#include "lexjudge/evaluator.hpp"
#include "lexjudge/model.hpp"

namespace lexjudge::trainer {

struct ExperimentConfig {
    std::string name;
    model::ModelConfig model;
    model::TrainMode mode = model::TrainMode::AdapterOnly;
    corpus::GroupFilter train_filter;
    std::optional<corpus::GroupFilter> dev_filter;  // defaults to the train languages
    bool include_mt_swiss = false;
    bool include_mt_foreign = false;
    bool oversample = true;
    std::vector<double> learning_rates{2e-3};
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double warmup_fraction = 0.1;
    std::size_t patience = 3;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& context);

struct CorpusBundle {
    corpus::Dataset train;
    corpus::Dataset dev;
    corpus::Dataset test;
    std::optional<corpus::Dataset> train_augmented;  // originals plus mt copies
    std::optional<corpus::Dataset> mt_foreign;
};

CorpusBundle load_bundle(const std::string& corpus_root);

// Originals matching the filter, plus the requested mt slices, oversampled to
// label parity when asked.
corpus::Dataset build_training_set(const CorpusBundle& bundle, const ExperimentConfig& config,
                                   std::uint64_t seed);

struct EvalRecord {
    std::size_t epoch = 0;
    double dev_macro_f1 = 0.0;
};

struct TrainResult {
    double best_dev_macro_f1 = 0.0;
    std::size_t best_epoch = 0;  // 1-based epoch whose checkpoint was kept
    std::size_t epochs_run = 0;
    bool stopped_early = false;
    std::vector<EvalRecord> history;
    double test_macro_f1 = 0.0;
    evaluator::PredictionSet test_predictions;
};

// Test-only instrumentation points; production runs pass nullptr.
struct TrainHooks {
    std::function<double(std::size_t epoch, double measured)> dev_score_override;
    std::function<void(std::size_t epoch, model::Model& model)> after_epoch;
};

TrainResult train_once(const ExperimentConfig& config, const CorpusBundle& bundle,
                       double learning_rate, std::uint64_t seed,
                       const TrainHooks* hooks = nullptr);

struct LrOutcome {
    double learning_rate = 0.0;
    bool diverged = false;
    std::vector<double> dev_scores;  // one per seed
    std::vector<TrainResult> runs;
};

struct ExperimentResult {
    std::string name;
    std::vector<LrOutcome> grid;
    double selected_lr = 0.0;
    std::size_t selected_index = 0;
};

// Selection sees dev scores only; the earliest rate wins ties.
std::size_t select_learning_rate(const std::vector<LrOutcome>& grid);

ExperimentResult run_experiment(const ExperimentConfig& config, const CorpusBundle& bundle,
                                const std::vector<std::uint64_t>& seeds,
                                const TrainHooks* hooks = nullptr);

evaluator::PredictionSet predict_dataset(model::Model& m, const corpus::Dataset& dataset);

}  // namespace lexjudge::trainer
