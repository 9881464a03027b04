#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexjudge/augment.hpp"
#include "lexjudge/corpus.hpp"
#include "lexjudge/evaluator.hpp"
#include "lexjudge/stats.hpp"
#include "lexjudge/trainer.hpp"

namespace lexjudge::pipeline {

struct PrepareOptions {
    std::string corpus_root;
    std::vector<corpus::Language> targets{corpus::Language::De, corpus::Language::Fr,
                                          corpus::Language::It};
    int year_cutoff = 2016;
    std::string model_tag = "mock-mt-1";
    std::string endpoint;  // empty: mock backend; otherwise an HTTP translator
    double backoff_base_seconds = 1.0;
};

// Materializes augmented/train_augmented.jsonl, augmented/mt_foreign.jsonl
// (when foreign_train.jsonl exists) and augmented/manifest.json.
augment::Manifest prepare(const PrepareOptions& options);

struct RunOptions {
    std::string corpus_root;
    std::string config_path;
    std::string out_dir;  // artifacts land in <out_dir>/<experiment name>/
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

trainer::ExperimentResult run(const RunOptions& options);

struct ReportOptions {
    std::vector<std::string> run_dirs;
    corpus::Dimension dimension = corpus::Dimension::Language;
    std::string out_base;  // writes <out_base>.csv and <out_base>.md
};

evaluator::ScoreGrid report(const ReportOptions& options);

struct AsoCommandOptions {
    std::vector<std::string> run_dirs;
    stats::AsoOptions aso;
    bool bonferroni = true;
    std::string out_path;  // CSV
};

stats::AsoMatrix aso(const AsoCommandOptions& options);

struct DistanceOptions {
    std::string corpus_root;
    corpus::Dimension dimension = corpus::Dimension::LegalArea;
    std::string out_path;  // CSV
};

stats::DistanceTable distances(const DistanceOptions& options);

std::string predictions_to_jsonl(const evaluator::PredictionSet& predictions);
evaluator::PredictionSet predictions_from_jsonl(const std::string& text,
                                                const std::string& context);

}  // namespace lexjudge::pipeline
