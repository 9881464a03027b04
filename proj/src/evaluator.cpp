#include "lexjudge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lexjudge/error.hpp"
#include "lexjudge/util.hpp"

namespace lexjudge::evaluator {

namespace {

double f1_for_class(int cls, const PredictionSet& preds) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& p : preds) {
        if (p.pred == cls && p.gold == cls) ++tp;
        else if (p.pred == cls && p.gold != cls) ++fp;
        else if (p.pred != cls && p.gold == cls) ++fn;
    }
    double precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
    double recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<std::string> stratum_label(const PredictionRecord& p, corpus::Dimension dim) {
    switch (dim) {
        case corpus::Dimension::Language:
            return std::string(corpus::to_string(p.language));
        case corpus::Dimension::Region:
            if (!p.region) return std::nullopt;
            return std::string(corpus::to_string(*p.region));
        case corpus::Dimension::LegalArea:
            if (!p.legal_area) return std::nullopt;
            return std::string(corpus::to_string(*p.legal_area));
        case corpus::Dimension::Label:
            return std::to_string(p.gold);
    }
    throw Error(ErrorCode::Internal, "unhandled dimension");
}

std::string render_cell(const GridCell& cell, bool markdown) {
    if (!cell.present) return markdown ? "--" : "";
    std::string text = util::format_cell(cell.mean, cell.stddev);
    if (cell.low_support) text += markdown ? " [^low]" : " *";
    return text;
}

}  // namespace

double macro_f1(const PredictionSet& preds) {
    if (preds.empty()) throw Error(ErrorCode::Invalid, "macro_f1 of an empty prediction set");
    return 0.5 * (f1_for_class(0, preds) + f1_for_class(1, preds));
}

double macro_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
    if (gold.size() != pred.size())
        throw Error(ErrorCode::Invalid, "gold and prediction lengths differ");
    PredictionSet preds(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        preds[i].gold = gold[i];
        preds[i].pred = pred[i];
    }
    return macro_f1(preds);
}

Aggregate aggregate(const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorCode::Invalid, "aggregate of an empty value list");
    Aggregate a;
    a.n = values.size();
    for (double v : values) a.mean += v;
    a.mean /= double(a.n);
    if (a.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / double(a.n - 1));
    }
    return a;
}

double diff(const std::map<std::string, double>& language_scores) {
    if (language_scores.size() < 2)
        throw Error(ErrorCode::Invalid, "diff needs at least two language scores");
    double lo = language_scores.begin()->second;
    double hi = lo;
    for (const auto& [_, v] : language_scores) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

ScoreGrid stratified_grid(const std::vector<GridRun>& runs, corpus::Dimension column_dimension) {
    if (runs.empty()) throw Error(ErrorCode::Invalid, "stratified_grid without runs");

    ScoreGrid grid;
    grid.column_dimension = column_dimension;

    for (const auto& run : runs) {
        if (std::find(grid.row_labels.begin(), grid.row_labels.end(), run.group) ==
            grid.row_labels.end())
            grid.row_labels.push_back(run.group);
    }
    grid.col_labels = corpus::dimension_values(column_dimension);

    // Per row and stratum: the stratum macro-F1 of each run in the group.
    std::vector<std::vector<std::vector<double>>> scores(
        grid.row_labels.size(), std::vector<std::vector<double>>(grid.col_labels.size()));
    std::vector<std::vector<std::size_t>> supports(
        grid.row_labels.size(), std::vector<std::size_t>(grid.col_labels.size(), 0));

    for (const auto& run : runs) {
        std::size_t row = std::size_t(
            std::find(grid.row_labels.begin(), grid.row_labels.end(), run.group) -
            grid.row_labels.begin());
        for (std::size_t col = 0; col < grid.col_labels.size(); ++col) {
            PredictionSet stratum;
            for (const auto& p : run.predictions) {
                auto label = stratum_label(p, column_dimension);
                if (label && *label == grid.col_labels[col]) stratum.push_back(p);
            }
            if (stratum.empty()) continue;  // absent, never zero
            scores[row][col].push_back(macro_f1(stratum));
            supports[row][col] = std::max(supports[row][col], stratum.size());
        }
    }

    // Drop strata that are empty in every row.
    std::vector<std::size_t> kept;
    for (std::size_t col = 0; col < grid.col_labels.size(); ++col) {
        bool any = false;
        for (std::size_t row = 0; row < grid.row_labels.size(); ++row)
            if (!scores[row][col].empty()) any = true;
        if (any) kept.push_back(col);
    }
    std::vector<std::string> col_labels;
    for (std::size_t col : kept) col_labels.push_back(grid.col_labels[col]);
    grid.col_labels = std::move(col_labels);

    grid.cells.assign(grid.row_labels.size(), std::vector<GridCell>(grid.col_labels.size()));
    for (std::size_t row = 0; row < grid.row_labels.size(); ++row) {
        std::vector<double> row_means;
        std::map<std::string, double> language_means;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            std::size_t col = kept[i];
            GridCell& cell = grid.cells[row][i];
            if (scores[row][col].empty()) continue;
            Aggregate a = aggregate(scores[row][col]);
            cell.present = true;
            cell.mean = a.mean;
            cell.stddev = a.stddev;
            cell.sample_count = a.n;
            cell.support = supports[row][col];
            cell.low_support = cell.support < 5;
            row_means.push_back(a.mean);
            if (column_dimension == corpus::Dimension::Language)
                language_means[grid.col_labels[i]] = a.mean;
        }
        GridCell all;
        if (!row_means.empty()) {
            Aggregate a = aggregate(row_means);
            all.present = true;
            all.mean = a.mean;
            all.stddev = a.stddev;
            all.sample_count = a.n;
        }
        grid.all_column.push_back(all);
        if (column_dimension == corpus::Dimension::Language && language_means.size() >= 2)
            grid.diff_column.push_back(diff(language_means));
        else
            grid.diff_column.push_back(std::nullopt);
    }
    return grid;
}

std::string render_csv(const ScoreGrid& grid) {
    std::ostringstream out;
    bool with_diff = grid.column_dimension == corpus::Dimension::Language;
    out << "group";
    for (const auto& label : grid.col_labels) out << "," << label;
    out << ",All";
    if (with_diff) out << ",Diff";
    out << "\n";
    for (std::size_t row = 0; row < grid.row_labels.size(); ++row) {
        out << grid.row_labels[row];
        for (const auto& cell : grid.cells[row]) out << "," << render_cell(cell, false);
        out << "," << render_cell(grid.all_column[row], false);
        if (with_diff) {
            out << ",";
            if (grid.diff_column[row]) out << util::format_score_1dp(*grid.diff_column[row]);
        }
        out << "\n";
    }
    return out.str();
}

std::string render_markdown(const ScoreGrid& grid) {
    std::ostringstream out;
    bool with_diff = grid.column_dimension == corpus::Dimension::Language;
    std::size_t columns = grid.col_labels.size() + 1 + (with_diff ? 1 : 0);

    out << "| group |";
    for (const auto& label : grid.col_labels) out << " " << label << " |";
    out << " All |";
    if (with_diff) out << " Diff |";
    out << "\n|";
    for (std::size_t i = 0; i <= columns; ++i) out << " --- |";
    out << "\n";

    bool any_low = false;
    for (std::size_t row = 0; row < grid.row_labels.size(); ++row) {
        out << "| " << grid.row_labels[row] << " |";
        for (const auto& cell : grid.cells[row]) {
            out << " " << render_cell(cell, true) << " |";
            if (cell.low_support) any_low = true;
        }
        out << " " << render_cell(grid.all_column[row], true) << " |";
        if (with_diff) {
            out << " ";
            if (grid.diff_column[row]) out << util::format_score_1dp(*grid.diff_column[row]);
            else out << "--";
            out << " |";
        }
        out << "\n";
    }
    if (any_low) out << "\n[^low]: fewer than 5 test examples in this stratum.\n";
    return out.str();
}

}  // namespace lexjudge::evaluator
