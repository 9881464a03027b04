#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lexjudge.h"

namespace {

int fail(lj_status status) {
    std::fprintf(stderr, "error: %s\n", lj_last_error());
    return int(status);
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ',';
        out += items[i];
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-lingual legal judgment prediction experiments"};
    app.require_subcommand(1);

    // prepare
    std::string corpus_root;
    bool synthetic = false;
    std::size_t synth_train = 360, synth_dev = 90, synth_test = 150, synth_foreign = 80;
    double low_fraction = 0.05;
    std::uint64_t synth_seed = 7;
    std::string targets = "de,fr,it";
    int year_cutoff = 2016;
    std::string model_tag = "mock-mt-1";
    std::string endpoint;

    CLI::App* prepare = app.add_subcommand("prepare", "Materialize the augmented corpus");
    prepare->add_option("--corpus", corpus_root, "Corpus root directory")->required();
    prepare->add_flag("--synthetic", synthetic, "Generate a synthetic corpus first");
    prepare->add_option("--train", synth_train, "Synthetic training cases");
    prepare->add_option("--dev", synth_dev, "Synthetic dev cases");
    prepare->add_option("--test", synth_test, "Synthetic test cases");
    prepare->add_option("--foreign", synth_foreign, "Synthetic foreign cases");
    prepare->add_option("--low-fraction", low_fraction, "Low-resource language share");
    prepare->add_option("--seed", synth_seed, "Synthetic corpus seed");
    prepare->add_option("--targets", targets, "Translation targets, comma separated");
    prepare->add_option("--year-cutoff", year_cutoff, "Foreign ingestion year cutoff");
    prepare->add_option("--model-tag", model_tag, "Translation model tag");
    prepare->add_option("--endpoint", endpoint, "HTTP translator endpoint (default: mock)");

    // run
    std::string config_path, out_dir, seeds = "1,2,3";
    CLI::App* run = app.add_subcommand("run", "Run one experiment config");
    run->add_option("--corpus", corpus_root, "Corpus root directory")->required();
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--out", out_dir, "Output directory for run artifacts")->required();
    run->add_option("--seeds", seeds, "Seeds, comma separated");

    // report
    std::vector<std::string> run_dirs;
    std::string dimension = "language";
    std::string out_base;
    CLI::App* report = app.add_subcommand("report", "Stratified score grid from runs");
    report->add_option("--runs", run_dirs, "Run directories")->required()->delimiter(',');
    report->add_option("--dimension", dimension, "language|region|legal_area|label");
    report->add_option("--out", out_base, "Output base path (.csv and .md)")->required();

    // aso
    double alpha = 0.05;
    std::size_t bootstrap = 1000;
    bool no_bonferroni = false;
    std::uint64_t aso_seed = 1234;
    std::string out_path;
    CLI::App* aso = app.add_subcommand("aso", "Pairwise dominance matrix over runs");
    aso->add_option("--runs", run_dirs, "Run directories")->required()->delimiter(',');
    aso->add_option("--alpha", alpha, "Confidence level");
    aso->add_option("--bootstrap", bootstrap, "Bootstrap iterations");
    aso->add_flag("--no-bonferroni", no_bonferroni, "Skip the Bonferroni correction");
    aso->add_option("--seed", aso_seed, "Bootstrap seed");
    aso->add_option("--out", out_path, "Output CSV path")->required();

    // distances
    std::string dist_dimension = "legal_area";
    CLI::App* distances = app.add_subcommand("distances", "Distribution distances across groups");
    distances->add_option("--corpus", corpus_root, "Corpus root directory")->required();
    distances->add_option("--dimension", dist_dimension, "legal_area|region|label");
    distances->add_option("--out", out_path, "Output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    if (prepare->parsed()) {
        if (synthetic) {
            lj_status status = lj_synth_corpus(corpus_root.c_str(), synth_train, synth_dev,
                                               synth_test, synth_foreign, low_fraction, synth_seed);
            if (status != LJ_OK) return fail(status);
            std::printf("synthetic corpus written to %s\n", corpus_root.c_str());
        }
        lj_status status = lj_prepare(corpus_root.c_str(), targets.c_str(), year_cutoff,
                                      model_tag.c_str(), endpoint.c_str());
        if (status != LJ_OK) return fail(status);
        std::printf("augmented corpus written to %s/augmented\n", corpus_root.c_str());
        return 0;
    }
    if (run->parsed()) {
        lj_status status =
            lj_run(corpus_root.c_str(), config_path.c_str(), out_dir.c_str(), seeds.c_str());
        if (status != LJ_OK) return fail(status);
        std::printf("run artifacts written to %s\n", out_dir.c_str());
        return 0;
    }
    if (report->parsed()) {
        lj_status status =
            lj_report(join(run_dirs).c_str(), dimension.c_str(), out_base.c_str());
        if (status != LJ_OK) return fail(status);
        std::printf("report written to %s.csv and %s.md\n", out_base.c_str(), out_base.c_str());
        return 0;
    }
    if (aso->parsed()) {
        lj_status status = lj_aso(join(run_dirs).c_str(), alpha, bootstrap, no_bonferroni ? 0 : 1,
                                  aso_seed, out_path.c_str());
        if (status != LJ_OK) return fail(status);
        std::printf("dominance matrix written to %s\n", out_path.c_str());
        return 0;
    }
    if (distances->parsed()) {
        lj_status status =
            lj_distances(corpus_root.c_str(), dist_dimension.c_str(), out_path.c_str());
        if (status != LJ_OK) return fail(status);
        std::printf("distance table written to %s\n", out_path.c_str());
        return 0;
    }
    return 0;
}
