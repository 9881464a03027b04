#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexjudge/corpus.hpp"

namespace lexjudge::evaluator {

struct PredictionRecord {
    std::string id;
    int gold = 0;
    int pred = 0;
    corpus::Language language = corpus::Language::De;
    std::optional<corpus::Region> region;
    std::optional<corpus::LegalArea> legal_area;
};

using PredictionSet = std::vector<PredictionRecord>;

// Unweighted mean of the two per-class F1 scores; zero divisions resolve to 0.
double macro_f1(const PredictionSet& preds);
double macro_f1(const std::vector<int>& gold, const std::vector<int>& pred);

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n-1); 0 when n == 1
    std::size_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

// max - min over per-language scores; requires at least two languages.
double diff(const std::map<std::string, double>& language_scores);

struct GridCell {
    bool present = false;
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t sample_count = 0;  // values aggregated (seeds)
    std::size_t support = 0;       // test examples in the stratum
    bool low_support = false;      // support < 5
};

struct ScoreGrid {
    corpus::Dimension column_dimension = corpus::Dimension::Language;
    std::vector<std::string> row_labels;  // train groups
    std::vector<std::string> col_labels;  // eval strata
    std::vector<std::vector<GridCell>> cells;
    std::vector<GridCell> all_column;                 // aggregate of the row's cell means
    std::vector<std::optional<double>> diff_column;   // only for the language dimension
};

// One run's predictions, keyed by its train group; several runs per group
// (one per seed) aggregate into that group's row.
struct GridRun {
    std::string group;
    PredictionSet predictions;
};

ScoreGrid stratified_grid(const std::vector<GridRun>& runs, corpus::Dimension column_dimension);

std::string render_csv(const ScoreGrid& grid);
std::string render_markdown(const ScoreGrid& grid);

}  // namespace lexjudge::evaluator
