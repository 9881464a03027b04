#include "doctest.h"

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "lexjudge/corpus.hpp"
#include "lexjudge/error.hpp"
#include "lexjudge/pipeline.hpp"
#include "lexjudge/synth.hpp"
#include "lexjudge/util.hpp"

using namespace lexjudge;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() / (std::string("lexjudge_pl_") + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

synth::SynthOptions small_synth() {
    synth::SynthOptions options;
    options.train_cases = 36;
    options.dev_cases = 16;
    options.test_cases = 16;
    options.foreign_cases = 8;
    options.low_resource_fraction = 0.25;
    options.seed = 3;
    return options;
}

const char* kSmokeConfig = R"({
    "name": "pipe_smoke",
    "mode": "full",
    "train": {"languages": ["de", "fr", "it"]},
    "learning_rates": [2e-3],
    "epochs": 2,
    "batch_size": 8,
    "patience": 3,
    "model": {"vocab_size": 64, "hidden": 16, "layers": 1, "heads": 2, "ffn": 32,
              "aggregator_layers": 1, "block_length": 12, "max_blocks": 2, "dropout": 0.0}
})";

std::vector<std::filesystem::path> files_under(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::exists(dir)) return out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("prepare materializes the augmented corpora and manifest") {
    auto root = temp_dir("prepare");
    auto summary = synth::generate(root.string(), small_synth());
    CHECK(summary.train == 36);
    CHECK(summary.foreign == 8);

    pipeline::PrepareOptions options;
    options.corpus_root = root.string();
    options.backoff_base_seconds = 0.0;
    augment::Manifest manifest = pipeline::prepare(options);

    auto augmented = corpus::load_corpus(root / "augmented" / "train_augmented.jsonl",
                                         corpus::Split::Train);
    CHECK(augmented.size() == 3 * summary.train);

    auto foreign = corpus::load_corpus(root / "foreign_train.jsonl", corpus::Split::Train);
    std::size_t eligible = 0;
    for (const auto& c : foreign.cases())
        if (c.year <= options.year_cutoff) ++eligible;
    auto mt_foreign =
        corpus::load_corpus(root / "augmented" / "mt_foreign.jsonl", corpus::Split::Train);
    CHECK(mt_foreign.size() == 3 * eligible);
    for (const auto& c : mt_foreign.cases()) {
        CHECK(c.provenance == corpus::Provenance::Mt);
        CHECK(c.jurisdiction == corpus::Jurisdiction::IN);
        CHECK(c.language != corpus::Language::En);
    }

    CHECK(manifest.model_tag == "mock-mt-1");
    CHECK(manifest.counts.at("train_originals") == summary.train);
    CHECK(manifest.counts.at("train_augmented") == 3 * summary.train);
    CHECK(manifest.counts.at("train_mt_copies") == 2 * summary.train);
    CHECK(manifest.counts.at("foreign_eligible") == eligible);
    CHECK(manifest.counts.at("mt_foreign") == 3 * eligible);
    CHECK(manifest.source_digests.at("train.jsonl").size() == 16);
    CHECK(manifest.source_digests.count("foreign_train.jsonl") == 1);

    auto reloaded = augment::read_manifest((root / "augmented" / "manifest.json").string());
    CHECK(reloaded.model_tag == manifest.model_tag);
    CHECK(reloaded.counts == manifest.counts);
    CHECK(reloaded.source_digests == manifest.source_digests);
    std::filesystem::remove_all(root);
}

TEST_CASE("prepare re-run is served from the translation cache") {
    auto root = temp_dir("prepare_rerun");
    synth::SynthOptions synth_options = small_synth();
    synth_options.train_cases = 12;
    synth_options.foreign_cases = 4;
    synth::generate(root.string(), synth_options);

    pipeline::PrepareOptions options;
    options.corpus_root = root.string();
    options.backoff_base_seconds = 0.0;
    pipeline::prepare(options);

    // Every fresh translation appends a cache line, so unchanged cache shards
    // mean the second pass issued no backend calls.
    auto digest_all = [&]() {
        std::vector<std::uint64_t> out;
        for (const auto& path : files_under(root / "cache" / "mt"))
            out.push_back(util::file_digest(path.string()));
        for (const auto& path : files_under(root / "augmented"))
            out.push_back(util::file_digest(path.string()));
        return out;
    };
    auto before = digest_all();
    REQUIRE_FALSE(before.empty());
    pipeline::prepare(options);
    CHECK(digest_all() == before);
    std::filesystem::remove_all(root);
}

TEST_CASE("run writes per-experiment and per-seed artifacts") {
    auto root = temp_dir("run");
    synth::generate(root.string(), small_synth());
    util::write_text_file((root / "config.json").string(), kSmokeConfig);

    pipeline::RunOptions options;
    options.corpus_root = root.string();
    options.config_path = (root / "config.json").string();
    options.out_dir = (root / "out").string();
    options.seeds = {1, 2};
    auto result = pipeline::run(options);
    CHECK(result.name == "pipe_smoke");
    REQUIRE(result.grid.size() == 1);
    CHECK(result.grid[0].runs.size() == 2);

    auto run_dir = root / "out" / "pipe_smoke";
    CHECK(util::read_text_file((run_dir / "config.json").string()) == kSmokeConfig);

    json doc = json::parse(util::read_text_file((run_dir / "result.json").string()));
    CHECK(doc.at("name") == "pipe_smoke");
    CHECK(doc.at("selected_lr") == doctest::Approx(2e-3));
    CHECK(doc.at("seeds") == json::array({1, 2}));
    CHECK(doc.at("grid").size() == 1);
    CHECK(doc.at("test_macro_f1").size() == 2);
    CHECK(doc.at("best_epochs").size() == 2);

    auto test_set = corpus::load_corpus(root / "test.jsonl", corpus::Split::Test);
    for (int seed : {1, 2}) {
        auto seed_dir = run_dir / ("seed_" + std::to_string(seed));
        std::string path = (seed_dir / "predictions.jsonl").string();
        auto preds = pipeline::predictions_from_jsonl(util::read_text_file(path), path);
        CHECK(preds.size() == test_set.size());
        json metrics = json::parse(util::read_text_file((seed_dir / "metrics.json").string()));
        CHECK(metrics.at("seed") == seed);
        CHECK(metrics.at("learning_rate") == doctest::Approx(2e-3));
        CHECK(metrics.at("history").size() == metrics.at("epochs_run").get<std::size_t>());
    }

    SUBCASE("report aggregates the run directory") {
        pipeline::ReportOptions report_options;
        report_options.run_dirs = {run_dir.string()};
        report_options.out_base = (root / "report").string();
        auto grid = pipeline::report(report_options);
        REQUIRE(grid.row_labels == std::vector<std::string>{"pipe_smoke"});
        CHECK_FALSE(grid.col_labels.empty());
        REQUIRE(grid.all_column.size() == 1);
        CHECK(grid.all_column[0].present);
        for (const auto& cell : grid.cells[0])
            if (cell.present) CHECK(cell.sample_count == 2);  // one value per seed

        std::string csv = util::read_text_file((root / "report.csv").string());
        CHECK(csv.rfind("group,", 0) == 0);
        CHECK(csv.find("pipe_smoke") != std::string::npos);
        std::string md = util::read_text_file((root / "report.md").string());
        CHECK(md.find("| pipe_smoke |") != std::string::npos);
    }

    SUBCASE("a second invocation reproduces every artifact byte for byte") {
        pipeline::RunOptions again = options;
        again.out_dir = (root / "out2").string();
        pipeline::run(again);
        auto mirror = root / "out2" / "pipe_smoke";
        for (const char* name : {"result.json", "seed_1/predictions.jsonl",
                                 "seed_1/metrics.json", "seed_2/predictions.jsonl"}) {
            CHECK(util::file_digest((run_dir / name).string()) ==
                  util::file_digest((mirror / name).string()));
        }

        pipeline::ReportOptions ra, rb;
        ra.run_dirs = {run_dir.string()};
        ra.out_base = (root / "rep_a").string();
        rb.run_dirs = {mirror.string()};
        rb.out_base = (root / "rep_b").string();
        pipeline::report(ra);
        pipeline::report(rb);
        CHECK(util::read_text_file((root / "rep_a.csv").string()) ==
              util::read_text_file((root / "rep_b.csv").string()));
        CHECK(util::read_text_file((root / "rep_a.md").string()) ==
              util::read_text_file((root / "rep_b.md").string()));
    }
    std::filesystem::remove_all(root);
}

TEST_CASE("report rejects unusable inputs") {
    CHECK_THROWS_AS(pipeline::report({}), Error);

    auto root = temp_dir("report_bad");
    util::write_text_file((root / "result.json").string(), "{\"name\": \"x\"}\n");
    pipeline::ReportOptions options;
    options.run_dirs = {root.string()};
    try {
        pipeline::report(options);
        FAIL("expected a state error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::State);
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
    std::filesystem::remove_all(root);
}

TEST_CASE("aso command compares stored run results") {
    auto root = temp_dir("aso_cmd");
    auto fake_run = [&](const std::string& name, std::vector<double> scores) {
        auto dir = root / name;
        std::filesystem::create_directories(dir);
        json doc;
        doc["name"] = name;
        doc["test_macro_f1"] = scores;
        util::write_text_file((dir / "result.json").string(), doc.dump(2) + "\n");
        return dir.string();
    };
    std::string strong = fake_run("strong", {0.80, 0.82, 0.84});
    std::string weak = fake_run("weak", {0.40, 0.41, 0.42});

    pipeline::AsoCommandOptions options;
    options.run_dirs = {strong, weak};
    options.aso.bootstrap_iterations = 200;
    options.out_path = (root / "aso.csv").string();
    auto matrix = pipeline::aso(options);
    REQUIRE(matrix.names == std::vector<std::string>{"strong", "weak"});
    CHECK(matrix.epsilon_min[0][0] == doctest::Approx(1.0));
    CHECK(matrix.epsilon_min[0][1] == doctest::Approx(0.0).epsilon(0.05));
    CHECK(matrix.bonferroni);
    CHECK(matrix.alpha_effective == doctest::Approx(0.05 / 2.0));

    std::string csv = util::read_text_file((root / "aso.csv").string());
    CHECK(csv.rfind("# alpha=", 0) == 0);
    CHECK(csv.find("strong") != std::string::npos);

    pipeline::AsoCommandOptions bad;
    bad.run_dirs = {strong};
    CHECK_THROWS_AS(pipeline::aso(bad), Error);

    util::write_text_file((root / "strong" / "result.json").string(), "{oops\n");
    CHECK_THROWS_AS(pipeline::aso(options), Error);
    std::filesystem::remove_all(root);
}

TEST_CASE("distances command tabulates language divergences") {
    auto root = temp_dir("distances");
    synth::generate(root.string(), small_synth());

    pipeline::DistanceOptions options;
    options.corpus_root = root.string();
    options.dimension = corpus::Dimension::LegalArea;
    options.out_path = (root / "dist.csv").string();
    auto table = pipeline::distances(options);
    CHECK_FALSE(table.row_labels.empty());
    CHECK_FALSE(table.col_labels.empty());
    REQUIRE(table.values.size() == table.row_labels.size());
    for (const auto& row : table.values) {
        REQUIRE(row.size() == table.col_labels.size());
        for (double v : row) {
            CHECK(v >= 0.0);
            CHECK(v <= 3.0);
        }
    }
    std::string csv = util::read_text_file((root / "dist.csv").string());
    CHECK(csv.rfind("test\\train", 0) == 0);

    pipeline::DistanceOptions bad = options;
    bad.dimension = corpus::Dimension::Language;
    CHECK_THROWS_AS(pipeline::distances(bad), Error);
    std::filesystem::remove_all(root);
}

TEST_CASE("prediction files round trip through jsonl") {
    evaluator::PredictionSet preds;
    evaluator::PredictionRecord a;
    a.id = "case_1";
    a.gold = 1;
    a.pred = 0;
    a.language = corpus::Language::Fr;
    a.region = corpus::Region::RL;
    a.legal_area = corpus::LegalArea::Social;
    evaluator::PredictionRecord b;
    b.id = "case_2";
    b.gold = 0;
    b.pred = 0;
    b.language = corpus::Language::It;  // foreign mt cases carry no region
    preds.push_back(a);
    preds.push_back(b);

    std::string text = pipeline::predictions_to_jsonl(preds);
    auto back = pipeline::predictions_from_jsonl(text, "roundtrip");
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "case_1");
    CHECK(back[0].gold == 1);
    CHECK(back[0].pred == 0);
    CHECK(back[0].language == corpus::Language::Fr);
    CHECK(back[0].region == corpus::Region::RL);
    CHECK(back[0].legal_area == corpus::LegalArea::Social);
    CHECK(back[1].id == "case_2");
    CHECK_FALSE(back[1].region.has_value());
    CHECK_FALSE(back[1].legal_area.has_value());

    try {
        pipeline::predictions_from_jsonl(text + "{oops\n", "ctx");
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find("ctx:3") != std::string::npos);
    }
    CHECK_THROWS_AS(
        pipeline::predictions_from_jsonl(R"({"id": "x", "gold": "no", "pred": 0})", "ctx"),
        Error);
}
