#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lexjudge::corpus {

enum class Language { De, Fr, It, En };
enum class Region { ZH, ES, CS, NWS, EM, RL, TI, FED };
enum class LegalArea { Public, Civil, Penal, Social };
enum class Jurisdiction { CH, IN };
enum class Provenance { Original, Mt };
enum class Split { Train, Dev, Test };

inline constexpr std::array<Language, 4> kLanguages{Language::De, Language::Fr, Language::It,
                                                    Language::En};
inline constexpr std::array<Region, 8> kRegions{Region::ZH, Region::ES, Region::CS, Region::NWS,
                                                Region::EM, Region::RL, Region::TI, Region::FED};
// Fixed support order for legal areas; distributions and grids follow it.
inline constexpr std::array<LegalArea, 4> kLegalAreas{LegalArea::Public, LegalArea::Civil,
                                                      LegalArea::Penal, LegalArea::Social};

std::string to_string(Language v);
std::string to_string(Region v);
std::string to_string(LegalArea v);
std::string to_string(Jurisdiction v);
std::string to_string(Provenance v);
std::string to_string(Split v);

Language parse_language(const std::string& s);
Region parse_region(const std::string& s);
LegalArea parse_legal_area(const std::string& s);
Jurisdiction parse_jurisdiction(const std::string& s);
Provenance parse_provenance(const std::string& s);
Split parse_split(const std::string& s);

// One court decision. Binary label: 0 = dismissal, 1 = approval.
struct Case {
    std::string id;
    std::string text;
    Language language = Language::De;
    int label = 0;
    int year = 0;
    std::optional<Region> region;
    std::optional<LegalArea> legal_area;
    Jurisdiction jurisdiction = Jurisdiction::CH;
    Provenance provenance = Provenance::Original;
    Language source_language = Language::De;
};

// Checks the Case invariants, throwing ErrorCode::Invalid with the offending
// field named. `context` is prefixed to the message (file:line during load).
void validate_case(const Case& c, const std::string& context);

// Immutable ordered collection; construction sorts by id and rejects duplicates.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Case> cases, Split split);

    // Keeps the given order and allows repeated ids (oversampled sets).
    static Dataset unchecked(std::vector<Case> cases, Split split);

    const std::vector<Case>& cases() const noexcept { return cases_; }
    Split split() const noexcept { return split_; }
    std::size_t size() const noexcept { return cases_.size(); }
    bool empty() const noexcept { return cases_.empty(); }

    // Counts per label value {0, 1}.
    std::array<std::size_t, 2> label_counts() const;

private:
    std::vector<Case> cases_;
    Split split_ = Split::Train;
};

// Empty optional means "no restriction". Applying a filter twice equals once.
struct GroupFilter {
    std::optional<std::set<Language>> languages;
    std::optional<std::set<Region>> regions;
    std::optional<std::set<LegalArea>> legal_areas;
    std::optional<std::set<Jurisdiction>> jurisdictions;
    std::optional<std::set<Provenance>> provenances;
    std::optional<int> max_year;

    bool matches(const Case& c) const;
};

enum class Dimension { Language, Region, LegalArea, Label };

Dimension parse_dimension(const std::string& s);
std::string to_string(Dimension d);

// Enum labels of a dimension in its fixed order.
std::vector<std::string> dimension_values(Dimension d);

// The stratum value of a case under a dimension; empty optional if unset.
std::optional<std::string> stratum_of(const Case& c, Dimension d);

Dataset load_corpus(const std::filesystem::path& path, Split split);
void save_corpus(const Dataset& dataset, const std::filesystem::path& path);

Dataset apply_filter(const Dataset& dataset, const GroupFilter& filter);

// Duplicates minority-class cases with replacement until class counts match.
Dataset oversample(const Dataset& dataset, std::uint64_t seed);

// Normalized frequency vector over the dimension's enum, in fixed order.
std::vector<double> distribution(const Dataset& dataset, Dimension dimension);

}  // namespace lexjudge::corpus
