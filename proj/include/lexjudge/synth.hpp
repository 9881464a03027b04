#pragma once

#include <cstdint>
#include <string>

namespace lexjudge::synth {

// Three pseudo-languages with disjoint filler vocabularies share a pool of
// label cue tokens; each language only ever uses part of the pool, so the
// low-resource language benefits from data pooled across languages.
struct SynthOptions {
    std::size_t train_cases = 360;
    std::size_t dev_cases = 90;
    std::size_t test_cases = 150;
    std::size_t foreign_cases = 80;
    double low_resource_fraction = 0.05;  // share of the third language in train/dev
    std::uint64_t seed = 7;
};

struct SynthSummary {
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::size_t foreign = 0;
};

SynthSummary generate(const std::string& corpus_root, const SynthOptions& options);

}  // namespace lexjudge::synth
