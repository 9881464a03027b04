#include "lexjudge.h"

#include <string>
#include <vector>

#include "lexjudge/corpus.hpp"
#include "lexjudge/error.hpp"
#include "lexjudge/evaluator.hpp"
#include "lexjudge/pipeline.hpp"
#include "lexjudge/stats.hpp"
#include "lexjudge/synth.hpp"
#include "lexjudge/util.hpp"

namespace {

thread_local std::string g_last_error;

lj_status to_status(lexjudge::ErrorCode code) {
    switch (code) {
        case lexjudge::ErrorCode::Io: return LJ_ERR_IO;
        case lexjudge::ErrorCode::Parse: return LJ_ERR_PARSE;
        case lexjudge::ErrorCode::Invalid: return LJ_ERR_INVALID;
        case lexjudge::ErrorCode::Backend: return LJ_ERR_BACKEND;
        case lexjudge::ErrorCode::State: return LJ_ERR_STATE;
        case lexjudge::ErrorCode::Internal: return LJ_ERR_INTERNAL;
    }
    return LJ_ERR_INTERNAL;
}

template <typename Fn>
lj_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LJ_OK;
    } catch (const lexjudge::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LJ_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LJ_ERR_INTERNAL;
    }
}

void require(bool ok, const char* message) {
    if (!ok) throw lexjudge::Error(lexjudge::ErrorCode::Invalid, message);
}

std::vector<lexjudge::corpus::Language> parse_targets(const char* csv) {
    require(csv != nullptr && *csv != '\0', "targets must not be empty");
    std::vector<lexjudge::corpus::Language> out;
    for (const auto& item : lexjudge::util::split_csv_list(csv))
        out.push_back(lexjudge::corpus::parse_language(item));
    require(!out.empty(), "targets must not be empty");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const char* csv) {
    require(csv != nullptr && *csv != '\0', "seeds must not be empty");
    std::vector<std::uint64_t> out;
    for (const auto& item : lexjudge::util::split_csv_list(csv)) {
        try {
            out.push_back(std::stoull(item));
        } catch (const std::exception&) {
            throw lexjudge::Error(lexjudge::ErrorCode::Invalid, "bad seed value: " + item);
        }
    }
    require(!out.empty(), "seeds must not be empty");
    return out;
}

std::vector<std::string> parse_dirs(const char* csv) {
    require(csv != nullptr && *csv != '\0', "run directories must not be empty");
    return lexjudge::util::split_csv_list(csv);
}

}  // namespace

extern "C" {

struct lj_corpus {
    lexjudge::corpus::Dataset dataset;
};

const char* lj_last_error(void) { return g_last_error.c_str(); }

lj_status lj_corpus_open(const char* path, const char* split, lj_corpus** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "path and out must not be null");
        require(split != nullptr, "split must not be null");
        auto dataset =
            lexjudge::corpus::load_corpus(path, lexjudge::corpus::parse_split(split));
        *out = new lj_corpus{std::move(dataset)};
    });
}

void lj_corpus_close(lj_corpus* corpus) { delete corpus; }

lj_status lj_corpus_size(const lj_corpus* corpus, size_t* out) {
    return guarded([&] {
        require(corpus != nullptr && out != nullptr, "corpus and out must not be null");
        *out = corpus->dataset.size();
    });
}

lj_status lj_corpus_label_counts(const lj_corpus* corpus, size_t* dismissals,
                                 size_t* approvals) {
    return guarded([&] {
        require(corpus != nullptr && dismissals != nullptr && approvals != nullptr,
                "corpus and outputs must not be null");
        auto counts = corpus->dataset.label_counts();
        *dismissals = counts[0];
        *approvals = counts[1];
    });
}

lj_status lj_corpus_distribution(const lj_corpus* corpus, const char* dimension, double* values,
                                 size_t capacity, size_t* out_size) {
    return guarded([&] {
        require(corpus != nullptr && dimension != nullptr && values != nullptr &&
                    out_size != nullptr,
                "corpus and outputs must not be null");
        auto dim = lexjudge::corpus::parse_dimension(dimension);
        auto freq = lexjudge::corpus::distribution(corpus->dataset, dim);
        require(capacity >= freq.size(), "distribution buffer too small");
        for (std::size_t i = 0; i < freq.size(); ++i) values[i] = freq[i];
        *out_size = freq.size();
    });
}

lj_status lj_macro_f1(const int* gold, const int* pred, size_t n, double* out) {
    return guarded([&] {
        require(gold != nullptr && pred != nullptr && out != nullptr,
                "gold, pred and out must not be null");
        std::vector<int> g(gold, gold + n), p(pred, pred + n);
        *out = lexjudge::evaluator::macro_f1(g, p);
    });
}

lj_status lj_aggregate(const double* values, size_t n, double* mean, double* stddev) {
    return guarded([&] {
        require(values != nullptr && mean != nullptr && stddev != nullptr,
                "values and outputs must not be null");
        auto a = lexjudge::evaluator::aggregate(std::vector<double>(values, values + n));
        *mean = a.mean;
        *stddev = a.stddev;
    });
}

lj_status lj_aso_epsilon(const double* scores_a, size_t n_a, const double* scores_b, size_t n_b,
                         double alpha, size_t bootstrap, uint64_t seed, double* epsilon_hat,
                         double* epsilon_min) {
    return guarded([&] {
        require(scores_a != nullptr && scores_b != nullptr && epsilon_hat != nullptr &&
                    epsilon_min != nullptr,
                "scores and outputs must not be null");
        lexjudge::stats::AsoOptions options;
        options.alpha = alpha;
        options.bootstrap_iterations = bootstrap;
        options.seed = seed;
        auto result =
            lexjudge::stats::aso_epsilon(std::vector<double>(scores_a, scores_a + n_a),
                                         std::vector<double>(scores_b, scores_b + n_b), options);
        *epsilon_hat = result.epsilon_hat;
        *epsilon_min = result.epsilon_min;
    });
}

lj_status lj_wasserstein_1d(const double* p, const double* q, size_t n, double* out) {
    return guarded([&] {
        require(p != nullptr && q != nullptr && out != nullptr,
                "distributions and out must not be null");
        *out = lexjudge::stats::wasserstein_1d(std::vector<double>(p, p + n),
                                               std::vector<double>(q, q + n));
    });
}

lj_status lj_synth_corpus(const char* corpus_root, size_t train_cases, size_t dev_cases,
                          size_t test_cases, size_t foreign_cases, double low_resource_fraction,
                          uint64_t seed) {
    return guarded([&] {
        require(corpus_root != nullptr, "corpus_root must not be null");
        lexjudge::synth::SynthOptions options;
        options.train_cases = train_cases;
        options.dev_cases = dev_cases;
        options.test_cases = test_cases;
        options.foreign_cases = foreign_cases;
        options.low_resource_fraction = low_resource_fraction;
        options.seed = seed;
        lexjudge::synth::generate(corpus_root, options);
    });
}

lj_status lj_prepare(const char* corpus_root, const char* targets_csv, int year_cutoff,
                     const char* model_tag, const char* endpoint) {
    return guarded([&] {
        require(corpus_root != nullptr, "corpus_root must not be null");
        lexjudge::pipeline::PrepareOptions options;
        options.corpus_root = corpus_root;
        options.targets = parse_targets(targets_csv);
        options.year_cutoff = year_cutoff;
        if (model_tag != nullptr && *model_tag != '\0') options.model_tag = model_tag;
        if (endpoint != nullptr) options.endpoint = endpoint;
        lexjudge::pipeline::prepare(options);
    });
}

lj_status lj_run(const char* corpus_root, const char* config_path, const char* out_dir,
                 const char* seeds_csv) {
    return guarded([&] {
        require(corpus_root != nullptr && config_path != nullptr && out_dir != nullptr,
                "corpus_root, config_path and out_dir must not be null");
        lexjudge::pipeline::RunOptions options;
        options.corpus_root = corpus_root;
        options.config_path = config_path;
        options.out_dir = out_dir;
        options.seeds = parse_seeds(seeds_csv);
        lexjudge::pipeline::run(options);
    });
}

lj_status lj_report(const char* run_dirs_csv, const char* dimension, const char* out_base) {
    return guarded([&] {
        require(dimension != nullptr && out_base != nullptr,
                "dimension and out_base must not be null");
        lexjudge::pipeline::ReportOptions options;
        options.run_dirs = parse_dirs(run_dirs_csv);
        options.dimension = lexjudge::corpus::parse_dimension(dimension);
        options.out_base = out_base;
        lexjudge::pipeline::report(options);
    });
}

lj_status lj_aso(const char* run_dirs_csv, double alpha, size_t bootstrap, int bonferroni,
                 uint64_t seed, const char* out_path) {
    return guarded([&] {
        require(out_path != nullptr, "out_path must not be null");
        lexjudge::pipeline::AsoCommandOptions options;
        options.run_dirs = parse_dirs(run_dirs_csv);
        options.aso.alpha = alpha;
        options.aso.bootstrap_iterations = bootstrap;
        options.aso.seed = seed;
        options.bonferroni = bonferroni != 0;
        options.out_path = out_path;
        lexjudge::pipeline::aso(options);
    });
}

lj_status lj_distances(const char* corpus_root, const char* dimension, const char* out_path) {
    return guarded([&] {
        require(corpus_root != nullptr && dimension != nullptr && out_path != nullptr,
                "corpus_root, dimension and out_path must not be null");
        lexjudge::pipeline::DistanceOptions options;
        options.corpus_root = corpus_root;
        options.dimension = lexjudge::corpus::parse_dimension(dimension);
        options.out_path = out_path;
        lexjudge::pipeline::distances(options);
    });
}

}  // extern "C"
