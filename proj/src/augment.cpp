#include "lexjudge/augment.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "lexjudge/error.hpp"
#include "lexjudge/util.hpp"

namespace lexjudge::augment {

using nlohmann::json;

namespace {

corpus::Case translated_copy(const corpus::Case& original, corpus::Language target,
                             std::string text) {
    corpus::Case copy = original;
    copy.id = original.id + ":" + std::string(corpus::to_string(target));
    copy.text = std::move(text);
    copy.language = target;
    copy.source_language = original.language;
    copy.provenance = corpus::Provenance::Mt;
    return copy;
}

// Translates every (source language, target) group in one client call each.
std::vector<corpus::Case> translate_group(const std::vector<const corpus::Case*>& sources,
                                          corpus::Language target,
                                          translator::Client& client) {
    std::vector<corpus::Case> out;
    if (sources.empty()) return out;
    std::map<corpus::Language, std::vector<const corpus::Case*>> by_source;
    for (const auto* c : sources) by_source[c->language].push_back(c);
    for (const auto& [source, cases] : by_source) {
        std::vector<std::string> ids, texts;
        for (const auto* c : cases) {
            ids.push_back(c->id);
            texts.push_back(c->text);
        }
        auto translations = client.translate_texts(ids, texts, source, target);
        for (std::size_t i = 0; i < cases.size(); ++i)
            out.push_back(translated_copy(*cases[i], target, std::move(translations[i])));
    }
    return out;
}

}  // namespace

std::vector<PlanItem> plan_translations(const corpus::Dataset& dataset,
                                        const std::vector<corpus::Language>& targets,
                                        translator::TranslationCache* cache,
                                        const std::string& model_tag) {
    std::vector<PlanItem> plan;
    for (const auto& c : dataset.cases()) {
        if (c.provenance == corpus::Provenance::Mt)
            throw Error(ErrorCode::Invalid,
                        "refusing to translate machine-translated case " + c.id);
        for (corpus::Language target : targets) {
            if (target == c.language) continue;
            PlanItem item;
            item.case_id = c.id;
            item.source = c.language;
            item.target = target;
            if (cache != nullptr)
                item.cached = cache->lookup(c.id, c.language, target, model_tag).has_value();
            plan.push_back(std::move(item));
        }
    }
    return plan;
}

corpus::Dataset build_augmented(const corpus::Dataset& dataset,
                                const std::vector<corpus::Language>& targets,
                                translator::Client& client) {
    if (targets.empty()) throw Error(ErrorCode::Invalid, "build_augmented needs targets");
    for (const auto& c : dataset.cases())
        if (c.provenance == corpus::Provenance::Mt)
            throw Error(ErrorCode::Invalid,
                        "refusing to translate machine-translated case " + c.id);

    std::vector<corpus::Case> out;
    for (corpus::Language target : targets) {
        std::vector<const corpus::Case*> needing;
        for (const auto& c : dataset.cases()) {
            if (c.language == target) {
                out.push_back(c);
            } else {
                needing.push_back(&c);
            }
        }
        auto copies = translate_group(needing, target, client);
        out.insert(out.end(), std::make_move_iterator(copies.begin()),
                   std::make_move_iterator(copies.end()));
    }
    return corpus::Dataset(std::move(out), dataset.split());
}

corpus::Dataset ingest_foreign(const corpus::Dataset& foreign,
                               const std::vector<corpus::Language>& targets,
                               translator::Client& client, int year_cutoff) {
    if (targets.empty()) throw Error(ErrorCode::Invalid, "ingest_foreign needs targets");
    std::vector<const corpus::Case*> eligible;
    for (const auto& c : foreign.cases()) {
        if (c.provenance == corpus::Provenance::Mt)
            throw Error(ErrorCode::Invalid,
                        "refusing to translate machine-translated case " + c.id);
        if (c.year <= year_cutoff) eligible.push_back(&c);
    }
    std::vector<corpus::Case> out;
    for (corpus::Language target : targets) {
        auto copies = translate_group(eligible, target, client);
        out.insert(out.end(), std::make_move_iterator(copies.begin()),
                   std::make_move_iterator(copies.end()));
    }
    return corpus::Dataset(std::move(out), foreign.split());
}

void write_manifest(const std::string& path, const Manifest& manifest) {
    json doc;
    doc["model"] = manifest.model_tag;
    doc["targets"] = json::array();
    for (auto lang : manifest.targets) doc["targets"].push_back(corpus::to_string(lang));
    doc["sources"] = manifest.source_digests;
    doc["counts"] = manifest.counts;
    util::write_text_file(path, doc.dump(2) + "\n");
}

Manifest read_manifest(const std::string& path) {
    json doc;
    try {
        doc = json::parse(util::read_text_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, "malformed manifest " + path + ": " + e.what());
    }
    Manifest manifest;
    try {
        manifest.model_tag = doc.at("model").get<std::string>();
        for (const auto& item : doc.at("targets"))
            manifest.targets.push_back(corpus::parse_language(item.get<std::string>()));
        manifest.source_digests =
            doc.at("sources").get<std::map<std::string, std::string>>();
        manifest.counts = doc.at("counts").get<std::map<std::string, std::size_t>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, "malformed manifest " + path + ": " + e.what());
    }
    return manifest;
}

}  // namespace lexjudge::augment
