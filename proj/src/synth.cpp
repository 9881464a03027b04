#include "lexjudge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "lexjudge/corpus.hpp"
#include "lexjudge/error.hpp"
#include "lexjudge/rng.hpp"

namespace lexjudge::synth {

namespace {

using corpus::Language;
using corpus::LegalArea;
using corpus::Region;

template <typename T>
T weighted_pick(Rng& rng, const std::vector<std::pair<T, double>>& weights) {
    double u = rng.uniform();
    double acc = 0.0;
    for (const auto& [value, w] : weights) {
        acc += w;
        if (u < acc) return value;
    }
    return weights.back().first;
}

std::vector<std::pair<Region, double>> regions_for(Language lang) {
    switch (lang) {
        case Language::De:
            return {{Region::ZH, 0.30}, {Region::ES, 0.20},  {Region::CS, 0.15},
                    {Region::NWS, 0.15}, {Region::EM, 0.10}, {Region::FED, 0.10}};
        case Language::Fr:
            return {{Region::RL, 0.45}, {Region::EM, 0.25}, {Region::FED, 0.30}};
        case Language::It:
            return {{Region::TI, 0.80}, {Region::FED, 0.20}};
        case Language::En:
            break;
    }
    throw Error(ErrorCode::Internal, "no regions for this language");
}

std::vector<std::pair<LegalArea, double>> areas_for(Region region) {
    using A = LegalArea;
    switch (region) {
        case Region::ZH: return {{A::Public, 0.40}, {A::Civil, 0.30}, {A::Penal, 0.20}, {A::Social, 0.10}};
        case Region::ES: return {{A::Public, 0.30}, {A::Civil, 0.35}, {A::Penal, 0.20}, {A::Social, 0.15}};
        case Region::CS: return {{A::Public, 0.25}, {A::Civil, 0.30}, {A::Penal, 0.30}, {A::Social, 0.15}};
        case Region::NWS: return {{A::Public, 0.30}, {A::Civil, 0.25}, {A::Penal, 0.25}, {A::Social, 0.20}};
        case Region::EM: return {{A::Public, 0.25}, {A::Civil, 0.25}, {A::Penal, 0.25}, {A::Social, 0.25}};
        case Region::RL: return {{A::Public, 0.20}, {A::Civil, 0.40}, {A::Penal, 0.25}, {A::Social, 0.15}};
        case Region::TI: return {{A::Public, 0.15}, {A::Civil, 0.25}, {A::Penal, 0.30}, {A::Social, 0.30}};
        case Region::FED: return {{A::Public, 0.35}, {A::Civil, 0.20}, {A::Penal, 0.25}, {A::Social, 0.20}};
    }
    throw Error(ErrorCode::Internal, "unhandled region");
}

// Each language sees only a window of the 12 cue variants per class.
std::pair<int, int> cue_window(Language lang) {
    switch (lang) {
        case Language::De: return {0, 8};
        case Language::Fr: return {3, 11};
        case Language::It: return {2, 7};
        case Language::En: return {0, 12};
    }
    throw Error(ErrorCode::Internal, "unhandled language");
}

std::string make_text(Rng& rng, Language lang, int label) {
    std::vector<std::string> tokens;
    std::size_t filler = 30 + rng.uniform_int(31);
    std::string prefix = std::string(corpus::to_string(lang)) + "_w";
    for (std::size_t i = 0; i < filler; ++i)
        tokens.push_back(prefix + std::to_string(rng.uniform_int(40)));

    auto [lo, hi] = cue_window(lang);
    auto cue = [&](int cls) {
        int variant = lo + int(rng.uniform_int(std::size_t(hi - lo)));
        return std::string(cls == 0 ? "dx" : "ax") + std::to_string(variant);
    };
    for (int k = 0; k < 3; ++k) tokens.push_back(cue(label));
    if (rng.uniform() < 0.3) tokens.push_back(cue(1 - label));

    rng.shuffle(tokens);
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) text += ' ';
        text += tokens[i];
    }
    return text;
}

std::string padded_id(const char* prefix, std::size_t index) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%s_%06zu", prefix, index);
    return buffer;
}

std::size_t rounded(double x) { return std::size_t(std::llround(x)); }

// Exact per-language counts so every stratum is populated even at small sizes.
std::vector<Language> language_quota(std::size_t count, double low_resource_fraction) {
    std::size_t it = std::max<std::size_t>(1, rounded(low_resource_fraction * double(count)));
    if (it > count) it = count;
    std::size_t de = rounded(0.58 * double(count - it));
    std::size_t fr = count - it - de;
    std::vector<Language> out;
    out.insert(out.end(), de, Language::De);
    out.insert(out.end(), fr, Language::Fr);
    out.insert(out.end(), it, Language::It);
    return out;
}

std::vector<Language> test_quota(std::size_t count) {
    std::size_t de = rounded(0.40 * double(count));
    std::size_t fr = rounded(0.35 * double(count));
    if (de + fr > count) fr = count - de;
    std::vector<Language> out;
    out.insert(out.end(), de, Language::De);
    out.insert(out.end(), fr, Language::Fr);
    out.insert(out.end(), count - de - fr, Language::It);
    return out;
}

// Roughly 70% approvals within every language slice, never single-class
// for slices of two or more cases.
std::vector<int> label_quota(Rng& rng, const std::vector<Language>& languages) {
    std::vector<int> labels(languages.size(), 1);
    for (Language lang : {Language::De, Language::Fr, Language::It, Language::En}) {
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < languages.size(); ++i)
            if (languages[i] == lang) slots.push_back(i);
        if (slots.empty()) continue;
        std::size_t zeros = rounded(0.3 * double(slots.size()));
        if (zeros == 0 && slots.size() >= 2) zeros = 1;
        rng.shuffle(slots);
        for (std::size_t k = 0; k < zeros; ++k) labels[slots[k]] = 0;
    }
    return labels;
}

corpus::Case swiss_case(Rng& rng, const std::string& id, Language lang, int label) {
    corpus::Case c;
    c.id = id;
    c.language = lang;
    c.label = label;
    c.year = 2000 + int(rng.uniform_int(21));
    c.region = weighted_pick(rng, regions_for(lang));
    c.legal_area = weighted_pick(rng, areas_for(*c.region));
    c.jurisdiction = corpus::Jurisdiction::CH;
    c.provenance = corpus::Provenance::Original;
    c.source_language = lang;
    c.text = make_text(rng, lang, label);
    return c;
}

corpus::Dataset make_split(const char* prefix, corpus::Split split, Rng rng,
                           std::vector<Language> languages) {
    rng.shuffle(languages);
    std::vector<int> labels = label_quota(rng, languages);
    std::vector<corpus::Case> cases;
    cases.reserve(languages.size());
    for (std::size_t i = 0; i < languages.size(); ++i)
        cases.push_back(swiss_case(rng, padded_id(prefix, i), languages[i], labels[i]));
    return corpus::Dataset(std::move(cases), split);
}

}  // namespace

SynthSummary generate(const std::string& corpus_root, const SynthOptions& options) {
    if (options.low_resource_fraction < 0.0 || options.low_resource_fraction > 0.5)
        throw Error(ErrorCode::Invalid, "low_resource_fraction must be in [0, 0.5]");
    if (options.train_cases == 0 || options.dev_cases == 0 || options.test_cases == 0)
        throw Error(ErrorCode::Invalid, "train, dev and test must be non-empty");

    double f = options.low_resource_fraction;
    corpus::Dataset train = make_split("tr", corpus::Split::Train,
                                       Rng::stream(options.seed, "synth_train"),
                                       language_quota(options.train_cases, f));
    corpus::Dataset dev = make_split("dv", corpus::Split::Dev,
                                     Rng::stream(options.seed, "synth_dev"),
                                     language_quota(options.dev_cases, f));
    corpus::Dataset test = make_split("ts", corpus::Split::Test,
                                      Rng::stream(options.seed, "synth_test"),
                                      test_quota(options.test_cases));

    Rng foreign_rng = Rng::stream(options.seed, "synth_foreign");
    std::vector<Language> foreign_languages(options.foreign_cases, Language::En);
    std::vector<int> foreign_labels = label_quota(foreign_rng, foreign_languages);
    std::vector<corpus::Case> foreign_cases;
    foreign_cases.reserve(options.foreign_cases);
    for (std::size_t i = 0; i < options.foreign_cases; ++i) {
        corpus::Case c;
        c.id = padded_id("fx", i);
        c.language = Language::En;
        c.label = foreign_labels[i];
        c.year = 2000 + int(foreign_rng.uniform_int(21));
        c.jurisdiction = corpus::Jurisdiction::IN;
        c.provenance = corpus::Provenance::Original;
        c.source_language = Language::En;
        c.text = make_text(foreign_rng, Language::En, c.label);
        foreign_cases.push_back(std::move(c));
    }
    corpus::Dataset foreign(std::move(foreign_cases), corpus::Split::Train);

    corpus::save_corpus(train, corpus_root + "/train.jsonl");
    corpus::save_corpus(dev, corpus_root + "/dev.jsonl");
    corpus::save_corpus(test, corpus_root + "/test.jsonl");
    corpus::save_corpus(foreign, corpus_root + "/foreign_train.jsonl");

    SynthSummary summary;
    summary.train = train.size();
    summary.dev = dev.size();
    summary.test = test.size();
    summary.foreign = foreign.size();
    return summary;
}

}  // namespace lexjudge::synth
