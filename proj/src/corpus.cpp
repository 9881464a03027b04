#include "lexjudge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "lexjudge/error.hpp"
#include "lexjudge/rng.hpp"

namespace lexjudge::corpus {

using nlohmann::json;

std::string to_string(Language v) {
    switch (v) {
        case Language::De: return "de";
        case Language::Fr: return "fr";
        case Language::It: return "it";
        case Language::En: return "en";
    }
    throw Error(ErrorCode::Internal, "bad language value");
}

std::string to_string(Region v) {
    switch (v) {
        case Region::ZH: return "ZH";
        case Region::ES: return "ES";
        case Region::CS: return "CS";
        case Region::NWS: return "NWS";
        case Region::EM: return "EM";
        case Region::RL: return "RL";
        case Region::TI: return "TI";
        case Region::FED: return "FED";
    }
    throw Error(ErrorCode::Internal, "bad region value");
}

std::string to_string(LegalArea v) {
    switch (v) {
        case LegalArea::Public: return "public";
        case LegalArea::Civil: return "civil";
        case LegalArea::Penal: return "penal";
        case LegalArea::Social: return "social";
    }
    throw Error(ErrorCode::Internal, "bad legal area value");
}

std::string to_string(Jurisdiction v) {
    switch (v) {
        case Jurisdiction::CH: return "CH";
        case Jurisdiction::IN: return "IN";
    }
    throw Error(ErrorCode::Internal, "bad jurisdiction value");
}

std::string to_string(Provenance v) {
    switch (v) {
        case Provenance::Original: return "original";
        case Provenance::Mt: return "mt";
    }
    throw Error(ErrorCode::Internal, "bad provenance value");
}

std::string to_string(Split v) {
    switch (v) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    throw Error(ErrorCode::Internal, "bad split value");
}

namespace {

[[noreturn]] void bad_enum(const std::string& kind, const std::string& s) {
    throw Error(ErrorCode::Parse, "unknown " + kind + " value \"" + s + "\"");
}

}  // namespace

Language parse_language(const std::string& s) {
    for (Language v : kLanguages)
        if (to_string(v) == s) return v;
    bad_enum("language", s);
}

Region parse_region(const std::string& s) {
    for (Region v : kRegions)
        if (to_string(v) == s) return v;
    bad_enum("region", s);
}

LegalArea parse_legal_area(const std::string& s) {
    for (LegalArea v : kLegalAreas)
        if (to_string(v) == s) return v;
    bad_enum("legal_area", s);
}

Jurisdiction parse_jurisdiction(const std::string& s) {
    if (s == "CH") return Jurisdiction::CH;
    if (s == "IN") return Jurisdiction::IN;
    bad_enum("jurisdiction", s);
}

Provenance parse_provenance(const std::string& s) {
    if (s == "original") return Provenance::Original;
    if (s == "mt") return Provenance::Mt;
    bad_enum("provenance", s);
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    bad_enum("split", s);
}

void validate_case(const Case& c, const std::string& context) {
    auto fail = [&](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::Invalid, context + "invalid field \"" + field + "\": " + why +
                                            (c.id.empty() ? "" : " (case " + c.id + ")"));
    };
    if (c.id.empty()) fail("id", "must be non-empty");
    if (c.label != 0 && c.label != 1) fail("label", "must be 0 or 1");
    if (c.provenance == Provenance::Mt && c.source_language == c.language)
        fail("source_language", "must differ from language for mt cases");
    if (c.provenance == Provenance::Original && c.source_language != c.language)
        fail("source_language", "must equal language for original cases");
    if (c.jurisdiction == Jurisdiction::CH) {
        if (!c.region) fail("region", "required for jurisdiction CH");
        if (!c.legal_area) fail("legal_area", "required for jurisdiction CH");
    }
}

Dataset::Dataset(std::vector<Case> cases, Split split) : cases_(std::move(cases)), split_(split) {
    std::sort(cases_.begin(), cases_.end(),
              [](const Case& a, const Case& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < cases_.size(); ++i) {
        if (cases_[i].id == cases_[i - 1].id)
            throw Error(ErrorCode::Invalid, "duplicate case id \"" + cases_[i].id + "\"");
    }
}

Dataset Dataset::unchecked(std::vector<Case> cases, Split split) {
    Dataset d;
    d.cases_ = std::move(cases);
    d.split_ = split;
    return d;
}

std::array<std::size_t, 2> Dataset::label_counts() const {
    std::array<std::size_t, 2> counts{0, 0};
    for (const Case& c : cases_) counts[static_cast<std::size_t>(c.label)]++;
    return counts;
}

bool GroupFilter::matches(const Case& c) const {
    if (languages && !languages->count(c.language)) return false;
    if (regions && (!c.region || !regions->count(*c.region))) return false;
    if (legal_areas && (!c.legal_area || !legal_areas->count(*c.legal_area))) return false;
    if (jurisdictions && !jurisdictions->count(c.jurisdiction)) return false;
    if (provenances && !provenances->count(c.provenance)) return false;
    if (max_year && c.year > *max_year) return false;
    return true;
}

Dimension parse_dimension(const std::string& s) {
    if (s == "language") return Dimension::Language;
    if (s == "region") return Dimension::Region;
    if (s == "legal_area") return Dimension::LegalArea;
    if (s == "label") return Dimension::Label;
    bad_enum("dimension", s);
}

std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::Language: return "language";
        case Dimension::Region: return "region";
        case Dimension::LegalArea: return "legal_area";
        case Dimension::Label: return "label";
    }
    throw Error(ErrorCode::Internal, "bad dimension value");
}

std::vector<std::string> dimension_values(Dimension d) {
    std::vector<std::string> out;
    switch (d) {
        case Dimension::Language:
            for (Language v : kLanguages) out.push_back(to_string(v));
            break;
        case Dimension::Region:
            for (Region v : kRegions) out.push_back(to_string(v));
            break;
        case Dimension::LegalArea:
            for (LegalArea v : kLegalAreas) out.push_back(to_string(v));
            break;
        case Dimension::Label:
            out = {"0", "1"};
            break;
    }
    return out;
}

std::optional<std::string> stratum_of(const Case& c, Dimension d) {
    switch (d) {
        case Dimension::Language: return to_string(c.language);
        case Dimension::Region:
            if (!c.region) return std::nullopt;
            return to_string(*c.region);
        case Dimension::LegalArea:
            if (!c.legal_area) return std::nullopt;
            return to_string(*c.legal_area);
        case Dimension::Label: return std::to_string(c.label);
    }
    throw Error(ErrorCode::Internal, "bad dimension value");
}

namespace {

Case case_from_json(const json& j, const std::string& context) {
    auto require = [&](const char* field) -> const json& {
        auto it = j.find(field);
        if (it == j.end())
            throw Error(ErrorCode::Parse, context + "missing field \"" + field + "\"");
        return *it;
    };
    auto require_string = [&](const char* field) -> std::string {
        const json& v = require(field);
        if (!v.is_string())
            throw Error(ErrorCode::Parse, context + "field \"" + field + "\" must be a string");
        return v.get<std::string>();
    };
    auto require_int = [&](const char* field) -> long long {
        const json& v = require(field);
        if (!v.is_number_integer())
            throw Error(ErrorCode::Parse, context + "field \"" + field + "\" must be an integer");
        return v.get<long long>();
    };

    Case c;
    c.id = require_string("id");
    c.text = require_string("text");
    try {
        c.language = parse_language(require_string("language"));
        long long label = require_int("label");
        if (label != 0 && label != 1)
            throw Error(ErrorCode::Invalid, "invalid field \"label\": must be 0 or 1");
        c.label = static_cast<int>(label);
        c.year = static_cast<int>(require_int("year"));
        const json& region = require("region");
        if (!region.is_null()) c.region = parse_region(region.get<std::string>());
        const json& area = require("legal_area");
        if (!area.is_null()) c.legal_area = parse_legal_area(area.get<std::string>());
        c.jurisdiction = parse_jurisdiction(require_string("jurisdiction"));
        c.provenance = parse_provenance(require_string("provenance"));
        c.source_language = parse_language(require_string("source_language"));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Parse || e.code() == ErrorCode::Invalid)
            throw Error(e.code(), context + e.what());
        throw;
    }
    validate_case(c, context);
    return c;
}

json case_to_json(const Case& c) {
    json j;
    j["id"] = c.id;
    j["text"] = c.text;
    j["language"] = to_string(c.language);
    j["label"] = c.label;
    j["year"] = c.year;
    j["region"] = c.region ? json(to_string(*c.region)) : json(nullptr);
    j["legal_area"] = c.legal_area ? json(to_string(*c.legal_area)) : json(nullptr);
    j["jurisdiction"] = to_string(c.jurisdiction);
    j["provenance"] = to_string(c.provenance);
    j["source_language"] = to_string(c.source_language);
    return j;
}

}  // namespace

Dataset load_corpus(const std::filesystem::path& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open corpus file: " + path.string());

    std::vector<Case> cases;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string context = path.filename().string() + ":" + std::to_string(line_no) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Parse, context + "malformed record: " + e.what());
        }
        cases.push_back(case_from_json(j, context));
    }
    return Dataset(std::move(cases), split);
}

void save_corpus(const Dataset& dataset, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write corpus file: " + path.string());
    for (const Case& c : dataset.cases()) out << case_to_json(c).dump() << "\n";
    if (!out) throw Error(ErrorCode::Io, "short write: " + path.string());
}

Dataset apply_filter(const Dataset& dataset, const GroupFilter& filter) {
    std::vector<Case> kept;
    kept.reserve(dataset.size());
    for (const Case& c : dataset.cases())
        if (filter.matches(c)) kept.push_back(c);
    return Dataset(std::move(kept), dataset.split());
}

Dataset oversample(const Dataset& dataset, std::uint64_t seed) {
    auto counts = dataset.label_counts();
    if (counts[0] == 0 || counts[1] == 0)
        throw Error(ErrorCode::Invalid,
                    "oversampling undefined: dataset has only one class (counts " +
                        std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + ")");
    int minority = counts[0] < counts[1] ? 0 : 1;
    std::size_t deficit =
        counts[minority == 0 ? 1 : 0] - counts[static_cast<std::size_t>(minority)];

    std::vector<const Case*> pool;
    for (const Case& c : dataset.cases())
        if (c.label == minority) pool.push_back(&c);

    std::vector<Case> result(dataset.cases().begin(), dataset.cases().end());
    result.reserve(result.size() + deficit);
    Rng rng = Rng::stream(seed, "oversample");
    for (std::size_t i = 0; i < deficit; ++i)
        result.push_back(*pool[rng.uniform_int(pool.size())]);

    // Originals stay in id order, duplicates follow in draw order.
    return Dataset::unchecked(std::move(result), dataset.split());
}

std::vector<double> distribution(const Dataset& dataset, Dimension dimension) {
    if (dataset.empty())
        throw Error(ErrorCode::Invalid, "distribution undefined on an empty dataset");
    std::vector<std::string> values = dimension_values(dimension);
    std::vector<double> freq(values.size(), 0.0);
    for (const Case& c : dataset.cases()) {
        std::optional<std::string> v = stratum_of(c, dimension);
        if (!v)
            throw Error(ErrorCode::Invalid, "case " + c.id + " has no value for dimension " +
                                                to_string(dimension));
        auto it = std::find(values.begin(), values.end(), *v);
        freq[static_cast<std::size_t>(it - values.begin())] += 1.0;
    }
    double n = static_cast<double>(dataset.size());
    for (double& f : freq) f /= n;
    return freq;
}

}  // namespace lexjudge::corpus
