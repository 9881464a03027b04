#ifndef LEXJUDGE_H
#define LEXJUDGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define LJ_API __declspec(dllexport)
#else
#define LJ_API __attribute__((visibility("default")))
#endif

typedef enum lj_status {
    LJ_OK = 0,
    LJ_ERR_IO = 1,
    LJ_ERR_PARSE = 2,
    LJ_ERR_INVALID = 3,
    LJ_ERR_BACKEND = 4,
    LJ_ERR_STATE = 5,
    LJ_ERR_INTERNAL = 6
} lj_status;

/* Message of the last failing call on this thread; "" if none. */
LJ_API const char* lj_last_error(void);

/* ---- corpus handles ------------------------------------------------- */

typedef struct lj_corpus lj_corpus;

/* split: "train" | "dev" | "test" */
LJ_API lj_status lj_corpus_open(const char* path, const char* split, lj_corpus** out);
LJ_API void lj_corpus_close(lj_corpus* corpus);
LJ_API lj_status lj_corpus_size(const lj_corpus* corpus, size_t* out);
LJ_API lj_status lj_corpus_label_counts(const lj_corpus* corpus, size_t* dismissals,
                                        size_t* approvals);

/* dimension: "language" | "region" | "legal_area" | "label". Writes the
 * frequency vector in the dimension's fixed order. */
LJ_API lj_status lj_corpus_distribution(const lj_corpus* corpus, const char* dimension,
                                        double* values, size_t capacity, size_t* out_size);

/* ---- metrics over flat arrays ---------------------------------------- */

LJ_API lj_status lj_macro_f1(const int* gold, const int* pred, size_t n, double* out);
LJ_API lj_status lj_aggregate(const double* values, size_t n, double* mean, double* stddev);
LJ_API lj_status lj_aso_epsilon(const double* scores_a, size_t n_a, const double* scores_b,
                                size_t n_b, double alpha, size_t bootstrap, uint64_t seed,
                                double* epsilon_hat, double* epsilon_min);
LJ_API lj_status lj_wasserstein_1d(const double* p, const double* q, size_t n, double* out);

/* ---- pipeline commands ------------------------------------------------ */

LJ_API lj_status lj_synth_corpus(const char* corpus_root, size_t train_cases, size_t dev_cases,
                                 size_t test_cases, size_t foreign_cases,
                                 double low_resource_fraction, uint64_t seed);

/* targets_csv e.g. "de,fr,it"; endpoint NULL or "" selects the mock backend. */
LJ_API lj_status lj_prepare(const char* corpus_root, const char* targets_csv, int year_cutoff,
                            const char* model_tag, const char* endpoint);

LJ_API lj_status lj_run(const char* corpus_root, const char* config_path, const char* out_dir,
                        const char* seeds_csv);

/* run_dirs_csv: comma-separated run directories produced by lj_run. */
LJ_API lj_status lj_report(const char* run_dirs_csv, const char* dimension,
                           const char* out_base);
LJ_API lj_status lj_aso(const char* run_dirs_csv, double alpha, size_t bootstrap, int bonferroni,
                        uint64_t seed, const char* out_path);
LJ_API lj_status lj_distances(const char* corpus_root, const char* dimension,
                              const char* out_path);

#ifdef __cplusplus
}
#endif

#endif /* LEXJUDGE_H */
