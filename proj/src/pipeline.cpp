#include "lexjudge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "json.hpp"

#include "lexjudge/error.hpp"
#include "lexjudge/translator.hpp"
#include "lexjudge/util.hpp"

namespace lexjudge::pipeline {

using nlohmann::json;

namespace {

std::string hex_digest(const std::string& path) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(util::file_digest(path)));
    return buffer;
}

json optional_enum_to_json(const std::optional<corpus::Region>& region) {
    if (!region) return nullptr;
    return corpus::to_string(*region);
}

json optional_enum_to_json(const std::optional<corpus::LegalArea>& area) {
    if (!area) return nullptr;
    return corpus::to_string(*area);
}

}  // namespace

augment::Manifest prepare(const PrepareOptions& options) {
    std::string train_path = options.corpus_root + "/train.jsonl";
    corpus::Dataset train = corpus::load_corpus(train_path, corpus::Split::Train);

    translator::MockBackend mock;
    std::unique_ptr<translator::HttpBackend> http;
    translator::Backend* backend = &mock;
    if (!options.endpoint.empty()) {
        http = std::make_unique<translator::HttpBackend>(options.endpoint);
        backend = http.get();
    }
    translator::TranslationCache cache(options.corpus_root + "/cache/mt");
    translator::ClientOptions client_options;
    client_options.model_tag = options.model_tag;
    client_options.backoff_base_seconds = options.backoff_base_seconds;
    translator::Client client(*backend, &cache, client_options);

    corpus::Dataset augmented = augment::build_augmented(train, options.targets, client);
    std::string augmented_dir = options.corpus_root + "/augmented";
    std::filesystem::create_directories(augmented_dir);
    corpus::save_corpus(augmented, augmented_dir + "/train_augmented.jsonl");

    augment::Manifest manifest;
    manifest.model_tag = options.model_tag;
    manifest.targets = options.targets;
    manifest.source_digests["train.jsonl"] = hex_digest(train_path);
    manifest.counts["train_originals"] = train.size();
    manifest.counts["train_augmented"] = augmented.size();
    manifest.counts["train_mt_copies"] = augmented.size() - train.size();

    std::string foreign_path = options.corpus_root + "/foreign_train.jsonl";
    if (std::filesystem::exists(foreign_path)) {
        corpus::Dataset foreign = corpus::load_corpus(foreign_path, corpus::Split::Train);
        std::size_t eligible = 0;
        for (const auto& c : foreign.cases())
            if (c.year <= options.year_cutoff) ++eligible;
        corpus::Dataset mt_foreign =
            augment::ingest_foreign(foreign, options.targets, client, options.year_cutoff);
        corpus::save_corpus(mt_foreign, augmented_dir + "/mt_foreign.jsonl");
        manifest.source_digests["foreign_train.jsonl"] = hex_digest(foreign_path);
        manifest.counts["foreign_eligible"] = eligible;
        manifest.counts["mt_foreign"] = mt_foreign.size();
    }
    augment::write_manifest(augmented_dir + "/manifest.json", manifest);
    return manifest;
}

std::string predictions_to_jsonl(const evaluator::PredictionSet& predictions) {
    std::string out;
    for (const auto& p : predictions) {
        json record;
        record["id"] = p.id;
        record["gold"] = p.gold;
        record["pred"] = p.pred;
        record["language"] = corpus::to_string(p.language);
        record["region"] = optional_enum_to_json(p.region);
        record["legal_area"] = optional_enum_to_json(p.legal_area);
        out += record.dump();
        out += '\n';
    }
    return out;
}

evaluator::PredictionSet predictions_from_jsonl(const std::string& text,
                                                const std::string& context) {
    evaluator::PredictionSet out;
    std::size_t line_no = 0;
    std::size_t at = 0;
    while (at < text.size()) {
        std::size_t end = text.find('\n', at);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(at, end - at);
        at = end + 1;
        ++line_no;
        if (line.empty()) continue;
        std::string where = context + ":" + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, where + ": " + e.what());
        }
        try {
            evaluator::PredictionRecord p;
            p.id = record.at("id").get<std::string>();
            p.gold = record.at("gold").get<int>();
            p.pred = record.at("pred").get<int>();
            p.language = corpus::parse_language(record.at("language").get<std::string>());
            if (record.contains("region") && !record["region"].is_null())
                p.region = corpus::parse_region(record["region"].get<std::string>());
            if (record.contains("legal_area") && !record["legal_area"].is_null())
                p.legal_area = corpus::parse_legal_area(record["legal_area"].get<std::string>());
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, where + ": " + e.what());
        }
    }
    return out;
}

trainer::ExperimentResult run(const RunOptions& options) {
    trainer::ExperimentConfig config = trainer::load_experiment_config(options.config_path);
    trainer::CorpusBundle bundle = trainer::load_bundle(options.corpus_root);
    trainer::ExperimentResult result = trainer::run_experiment(config, bundle, options.seeds);

    std::string dir = options.out_dir + "/" + config.name;
    std::filesystem::create_directories(dir);
    util::write_text_file(dir + "/config.json", util::read_text_file(options.config_path));

    json doc;
    doc["name"] = result.name;
    doc["selected_lr"] = result.selected_lr;
    doc["seeds"] = options.seeds;
    doc["grid"] = json::array();
    for (const auto& outcome : result.grid) {
        json entry;
        entry["learning_rate"] = outcome.learning_rate;
        entry["diverged"] = outcome.diverged;
        entry["dev_scores"] = outcome.dev_scores;
        doc["grid"].push_back(entry);
    }
    const trainer::LrOutcome& selected = result.grid[result.selected_index];
    doc["test_macro_f1"] = json::array();
    doc["best_epochs"] = json::array();
    for (const auto& run : selected.runs) {
        doc["test_macro_f1"].push_back(run.test_macro_f1);
        doc["best_epochs"].push_back(run.best_epoch);
    }
    util::write_text_file(dir + "/result.json", doc.dump(2) + "\n");

    for (std::size_t i = 0; i < selected.runs.size(); ++i) {
        std::string seed_dir = dir + "/seed_" + std::to_string(options.seeds[i]);
        std::filesystem::create_directories(seed_dir);
        util::write_text_file(seed_dir + "/predictions.jsonl",
                              predictions_to_jsonl(selected.runs[i].test_predictions));
        json metrics;
        metrics["seed"] = options.seeds[i];
        metrics["learning_rate"] = result.selected_lr;
        metrics["best_dev_macro_f1"] = selected.runs[i].best_dev_macro_f1;
        metrics["best_epoch"] = selected.runs[i].best_epoch;
        metrics["epochs_run"] = selected.runs[i].epochs_run;
        metrics["stopped_early"] = selected.runs[i].stopped_early;
        metrics["test_macro_f1"] = selected.runs[i].test_macro_f1;
        json history = json::array();
        for (const auto& record : selected.runs[i].history) {
            json item;
            item["epoch"] = record.epoch;
            item["dev_macro_f1"] = record.dev_macro_f1;
            history.push_back(item);
        }
        metrics["history"] = history;
        util::write_text_file(seed_dir + "/metrics.json", metrics.dump(2) + "\n");
    }
    return result;
}

namespace {

std::string run_name(const std::string& run_dir) {
    json doc;
    try {
        doc = json::parse(util::read_text_file(run_dir + "/result.json"));
        return doc.at("name").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, run_dir + "/result.json: " + e.what());
    }
}

std::vector<std::string> seed_dirs(const std::string& run_dir) {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(run_dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0)
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    if (out.empty())
        throw Error(ErrorCode::State, "no seed directories under " + run_dir);
    return out;
}

}  // namespace

evaluator::ScoreGrid report(const ReportOptions& options) {
    if (options.run_dirs.empty()) throw Error(ErrorCode::Invalid, "report needs run directories");
    std::vector<evaluator::GridRun> runs;
    for (const auto& dir : options.run_dirs) {
        std::string name = run_name(dir);
        for (const auto& seed_dir : seed_dirs(dir)) {
            std::string path = seed_dir + "/predictions.jsonl";
            runs.push_back({name, predictions_from_jsonl(util::read_text_file(path), path)});
        }
    }
    evaluator::ScoreGrid grid = evaluator::stratified_grid(runs, options.dimension);
    if (!options.out_base.empty()) {
        util::write_text_file(options.out_base + ".csv", evaluator::render_csv(grid));
        util::write_text_file(options.out_base + ".md", evaluator::render_markdown(grid));
    }
    return grid;
}

stats::AsoMatrix aso(const AsoCommandOptions& options) {
    if (options.run_dirs.size() < 2)
        throw Error(ErrorCode::Invalid, "aso needs at least two run directories");
    std::vector<stats::NamedScores> systems;
    for (const auto& dir : options.run_dirs) {
        json doc;
        try {
            doc = json::parse(util::read_text_file(dir + "/result.json"));
            std::vector<double> scores = doc.at("test_macro_f1").get<std::vector<double>>();
            systems.emplace_back(doc.at("name").get<std::string>(), std::move(scores));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, dir + "/result.json: " + e.what());
        }
    }
    stats::AsoMatrix matrix = stats::aso_matrix(systems, options.aso, options.bonferroni);
    if (!options.out_path.empty())
        util::write_text_file(options.out_path, stats::render_csv(matrix));
    return matrix;
}

stats::DistanceTable distances(const DistanceOptions& options) {
    if (options.dimension != corpus::Dimension::LegalArea &&
        options.dimension != corpus::Dimension::Region &&
        options.dimension != corpus::Dimension::Label)
        throw Error(ErrorCode::Invalid, "distances needs an ordered content dimension");

    corpus::Dataset train =
        corpus::load_corpus(options.corpus_root + "/train.jsonl", corpus::Split::Train);
    corpus::Dataset test =
        corpus::load_corpus(options.corpus_root + "/test.jsonl", corpus::Split::Test);

    auto groups = [&](const corpus::Dataset& dataset) {
        std::vector<stats::NamedDistribution> out;
        for (corpus::Language lang : corpus::kLanguages) {
            corpus::GroupFilter filter;
            filter.languages = std::set<corpus::Language>{lang};
            corpus::Dataset subset = corpus::apply_filter(dataset, filter);
            if (subset.size() == 0) continue;
            out.emplace_back(std::string(corpus::to_string(lang)),
                             corpus::distribution(subset, options.dimension));
        }
        return out;
    };
    stats::DistanceTable table = stats::distance_table(groups(test), groups(train));
    if (!options.out_path.empty())
        util::write_text_file(options.out_path, stats::render_csv(table));
    return table;
}

}  // namespace lexjudge::pipeline
