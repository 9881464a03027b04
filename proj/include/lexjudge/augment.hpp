#pragma once

#include <map>
#include <string>
#include <vector>

#include "lexjudge/corpus.hpp"
#include "lexjudge/translator.hpp"

namespace lexjudge::augment {

struct PlanItem {
    std::string case_id;
    corpus::Language source = corpus::Language::De;
    corpus::Language target = corpus::Language::De;
    bool cached = false;  // already translated, skippable
};

// One item per (case, target) with target differing from the case language.
// Machine-translated inputs are refused.
std::vector<PlanItem> plan_translations(const corpus::Dataset& dataset,
                                        const std::vector<corpus::Language>& targets,
                                        translator::TranslationCache* cache,
                                        const std::string& model_tag);

// Every case appears once per target: unchanged when the target matches its
// language, as a machine-translated copy otherwise. Output size is
// |dataset| * |targets|.
corpus::Dataset build_augmented(const corpus::Dataset& dataset,
                                const std::vector<corpus::Language>& targets,
                                translator::Client& client);

// Foreign-jurisdiction cases up to the year cutoff (inclusive), translated
// into every target. The originals do not appear in the output.
corpus::Dataset ingest_foreign(const corpus::Dataset& foreign,
                               const std::vector<corpus::Language>& targets,
                               translator::Client& client, int year_cutoff);

struct Manifest {
    std::string model_tag;
    std::vector<corpus::Language> targets;
    std::map<std::string, std::string> source_digests;  // file name -> hex digest
    std::map<std::string, std::size_t> counts;
};

void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

}  // namespace lexjudge::augment
