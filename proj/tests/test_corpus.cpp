#include "doctest.h"

#include <filesystem>
#include <map>
#include <string>

#include "lexjudge/corpus.hpp"
#include "lexjudge/error.hpp"
#include "lexjudge/util.hpp"

using namespace lexjudge;
using namespace lexjudge::corpus;

namespace {

std::filesystem::path temp_dir(const char* tag) {
    auto dir = std::filesystem::temp_directory_path() / (std::string("lexjudge_corpus_") + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Case swiss_case(std::string id, Language lang, int label, int year = 2010,
                Region region = Region::ZH, LegalArea area = LegalArea::Civil) {
    Case c;
    c.id = std::move(id);
    c.text = "ruling text for " + c.id;
    c.language = lang;
    c.label = label;
    c.year = year;
    c.region = region;
    c.legal_area = area;
    c.jurisdiction = Jurisdiction::CH;
    c.provenance = Provenance::Original;
    c.source_language = lang;
    return c;
}

Case foreign_case(std::string id, int label, int year) {
    Case c;
    c.id = std::move(id);
    c.text = "foreign ruling " + c.id;
    c.language = Language::En;
    c.label = label;
    c.year = year;
    c.jurisdiction = Jurisdiction::IN;
    c.provenance = Provenance::Original;
    c.source_language = Language::En;
    return c;
}

}  // namespace

TEST_CASE("enum string round trips") {
    for (auto lang : kLanguages) CHECK(parse_language(to_string(lang)) == lang);
    for (auto region : kRegions) CHECK(parse_region(to_string(region)) == region);
    for (auto area : kLegalAreas) CHECK(parse_legal_area(to_string(area)) == area);
    CHECK(parse_jurisdiction(to_string(Jurisdiction::CH)) == Jurisdiction::CH);
    CHECK(parse_jurisdiction(to_string(Jurisdiction::IN)) == Jurisdiction::IN);
    CHECK(parse_provenance(to_string(Provenance::Mt)) == Provenance::Mt);
    CHECK(parse_split(to_string(Split::Dev)) == Split::Dev);
    CHECK(parse_dimension(to_string(Dimension::LegalArea)) == Dimension::LegalArea);
    CHECK_THROWS_AS(parse_language("xx"), Error);
    CHECK_THROWS_AS(parse_region("atlantis"), Error);
}

TEST_CASE("validate_case names the offending field and id") {
    auto ok = swiss_case("c1", Language::De, 1);
    CHECK_NOTHROW(validate_case(ok, "ctx"));

    auto bad_label = ok;
    bad_label.label = 2;
    try {
        validate_case(bad_label, "ctx");
        FAIL("expected invalid label to throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Invalid);
        CHECK(std::string(e.what()).find("label") != std::string::npos);
        CHECK(std::string(e.what()).find("c1") != std::string::npos);
    }

    auto no_region = ok;
    no_region.region.reset();
    try {
        validate_case(no_region, "ctx");
        FAIL("expected missing swiss region to throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Invalid);
        CHECK(std::string(e.what()).find("region") != std::string::npos);
    }

    auto no_id = ok;
    no_id.id.clear();
    CHECK_THROWS_AS(validate_case(no_id, "ctx"), Error);
}

TEST_CASE("dataset construction sorts by id and rejects duplicates") {
    std::vector<Case> cases{swiss_case("b", Language::De, 0), swiss_case("a", Language::Fr, 1)};
    Dataset ds(cases, Split::Train);
    CHECK(ds.size() == 2);
    CHECK(ds.cases()[0].id == "a");
    CHECK(ds.cases()[1].id == "b");

    std::vector<Case> dup{swiss_case("a", Language::De, 0), swiss_case("a", Language::Fr, 1)};
    CHECK_THROWS_AS(Dataset(dup, Split::Train), Error);

    auto kept = Dataset::unchecked({swiss_case("b", Language::De, 0),
                                    swiss_case("a", Language::Fr, 1),
                                    swiss_case("a", Language::Fr, 1)},
                                   Split::Train);
    CHECK(kept.size() == 3);
    CHECK(kept.cases()[0].id == "b");
}

TEST_CASE("label_counts tallies both classes") {
    Dataset ds({swiss_case("a", Language::De, 0), swiss_case("b", Language::De, 1),
                swiss_case("c", Language::Fr, 1)},
               Split::Train);
    auto counts = ds.label_counts();
    CHECK(counts[0] == 1);
    CHECK(counts[1] == 2);
}

TEST_CASE("load_corpus reads a three-record file sorted by id") {
    auto dir = temp_dir("load3");
    auto path = dir / "train.jsonl";
    util::write_text_file(
        path,
        R"({"id":"c2","text":"zwei","language":"de","label":1,"year":2011,"region":"ZH","legal_area":"civil","jurisdiction":"CH","provenance":"original","source_language":"de"})"
        "\n"
        R"({"id":"c1","text":"eins","language":"fr","label":0,"year":2012,"region":"RL","legal_area":"penal","jurisdiction":"CH","provenance":"original","source_language":"fr"})"
        "\n"
        R"({"id":"c3","text":"tre","language":"it","label":1,"year":2013,"region":"TI","legal_area":"social","jurisdiction":"CH","provenance":"original","source_language":"it"})"
        "\n");
    auto ds = load_corpus(path, Split::Train);
    CHECK(ds.size() == 3);
    CHECK(ds.cases()[0].id == "c1");
    CHECK(ds.cases()[0].language == Language::Fr);
    CHECK(ds.cases()[1].label == 1);
    CHECK(ds.cases()[2].legal_area == LegalArea::Social);
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_corpus reports file and line for malformed records") {
    auto dir = temp_dir("badline");
    auto path = dir / "train.jsonl";
    util::write_text_file(
        path,
        R"({"id":"c1","text":"eins","language":"de","label":0,"year":2012,"region":"ZH","legal_area":"civil","jurisdiction":"CH","provenance":"original","source_language":"de"})"
        "\n"
        "{not json}\n");
    try {
        load_corpus(path, Split::Train);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Parse);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
        CHECK(std::string(e.what()).find("train.jsonl") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_corpus rejects out-of-range label naming the field") {
    auto dir = temp_dir("badlabel");
    auto path = dir / "train.jsonl";
    util::write_text_file(
        path,
        R"({"id":"c1","text":"eins","language":"de","label":2,"year":2012,"region":"ZH","legal_area":"civil","jurisdiction":"CH","provenance":"original","source_language":"de"})"
        "\n");
    try {
        load_corpus(path, Split::Train);
        FAIL("expected invalid label error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("label") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_corpus rejects duplicate ids") {
    auto dir = temp_dir("dupid");
    auto path = dir / "train.jsonl";
    std::string rec =
        R"({"id":"c1","text":"eins","language":"de","label":0,"year":2012,"region":"ZH","legal_area":"civil","jurisdiction":"CH","provenance":"original","source_language":"de"})";
    util::write_text_file(path, rec + "\n" + rec + "\n");
    CHECK_THROWS_AS(load_corpus(path, Split::Train), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("load missing file raises an io error") {
    auto dir = temp_dir("iomiss");
    CHECK_THROWS_AS(load_corpus(dir / "absent.jsonl", Split::Train), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("save then load is a fixed point") {
    auto dir = temp_dir("fixedpoint");
    Dataset ds({swiss_case("a", Language::De, 0, 2008, Region::ES, LegalArea::Public),
                swiss_case("b", Language::It, 1, 2015, Region::TI, LegalArea::Penal),
                foreign_case("f1", 1, 2012)},
               Split::Train);
    auto p1 = dir / "one.jsonl";
    auto p2 = dir / "two.jsonl";
    save_corpus(ds, p1);
    auto loaded = load_corpus(p1, Split::Train);
    save_corpus(loaded, p2);
    CHECK(util::read_text_file(p1) == util::read_text_file(p2));
    CHECK(loaded.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded.cases()[i].id == ds.cases()[i].id);
        CHECK(loaded.cases()[i].text == ds.cases()[i].text);
        CHECK(loaded.cases()[i].language == ds.cases()[i].language);
        CHECK(loaded.cases()[i].label == ds.cases()[i].label);
        CHECK(loaded.cases()[i].year == ds.cases()[i].year);
        CHECK(loaded.cases()[i].region == ds.cases()[i].region);
        CHECK(loaded.cases()[i].legal_area == ds.cases()[i].legal_area);
        CHECK(loaded.cases()[i].jurisdiction == ds.cases()[i].jurisdiction);
        CHECK(loaded.cases()[i].provenance == ds.cases()[i].provenance);
        CHECK(loaded.cases()[i].source_language == ds.cases()[i].source_language);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("apply_filter keeps matching cases and is idempotent") {
    Dataset ds({swiss_case("a", Language::De, 0), swiss_case("b", Language::Fr, 1),
                swiss_case("c", Language::It, 1), swiss_case("d", Language::It, 0)},
               Split::Train);

    GroupFilter only_it;
    only_it.languages = std::set<Language>{Language::It};
    auto it_only = apply_filter(ds, only_it);
    CHECK(it_only.size() == 2);
    for (const auto& c : it_only.cases()) CHECK(c.language == Language::It);

    auto twice = apply_filter(it_only, only_it);
    CHECK(twice.size() == it_only.size());
    for (std::size_t i = 0; i < twice.size(); ++i)
        CHECK(twice.cases()[i].id == it_only.cases()[i].id);
}

TEST_CASE("zero-shot style filter excludes the target language") {
    Dataset ds({swiss_case("a", Language::De, 0), swiss_case("b", Language::Fr, 1),
                swiss_case("c", Language::It, 1)},
               Split::Train);
    GroupFilter f;
    f.languages = std::set<Language>{Language::De, Language::Fr};
    f.provenances = std::set<Provenance>{Provenance::Original};
    auto out = apply_filter(ds, f);
    CHECK(out.size() == 2);
    for (const auto& c : out.cases()) CHECK(c.language != Language::It);
}

TEST_CASE("max_year filter is inclusive") {
    Dataset ds({foreign_case("f1", 0, 2013), foreign_case("f2", 1, 2014),
                foreign_case("f3", 1, 2015)},
               Split::Train);
    GroupFilter f;
    f.max_year = 2014;
    auto out = apply_filter(ds, f);
    CHECK(out.size() == 2);
    for (const auto& c : out.cases()) CHECK(c.year <= 2014);
}

TEST_CASE("a filter and its complement partition the dataset") {
    std::vector<Case> cases;
    for (int i = 0; i < 20; ++i)
        cases.push_back(swiss_case("p" + std::to_string(i),
                                   i % 3 == 0 ? Language::De : (i % 3 == 1 ? Language::Fr
                                                                           : Language::It),
                                   i % 2));
    Dataset ds(cases, Split::Train);
    GroupFilter de_only;
    de_only.languages = std::set<Language>{Language::De};
    GroupFilter not_de;
    not_de.languages = std::set<Language>{Language::Fr, Language::It};
    CHECK(apply_filter(ds, de_only).size() + apply_filter(ds, not_de).size() == ds.size());
}

TEST_CASE("oversample balances 80/20 to 80/80 keeping every original") {
    std::vector<Case> cases;
    for (int i = 0; i < 80; ++i) cases.push_back(swiss_case("maj" + std::to_string(i), Language::De, 0));
    for (int i = 0; i < 20; ++i) cases.push_back(swiss_case("min" + std::to_string(i), Language::De, 1));
    Dataset ds(cases, Split::Train);

    auto balanced = oversample(ds, 11);
    auto counts = balanced.label_counts();
    CHECK(counts[0] == 80);
    CHECK(counts[1] == 80);

    std::set<std::string> ids;
    for (const auto& c : balanced.cases()) ids.insert(c.id);
    CHECK(ids.size() == 100);  // every original id still present, duplicates only add copies

    auto again = oversample(ds, 11);
    REQUIRE(again.size() == balanced.size());
    for (std::size_t i = 0; i < balanced.size(); ++i)
        CHECK(again.cases()[i].id == balanced.cases()[i].id);

    Dataset already({swiss_case("a", Language::De, 0), swiss_case("b", Language::De, 1)},
                    Split::Train);
    auto untouched = oversample(already, 3);
    CHECK(untouched.size() == 2);

    Dataset single({swiss_case("a", Language::De, 0)}, Split::Train);
    CHECK_THROWS_AS(oversample(single, 1), Error);
}

TEST_CASE("distribution follows the fixed enum order and sums to one") {
    std::vector<Case> cases;
    for (int i = 0; i < 10; ++i)
        cases.push_back(swiss_case("pub" + std::to_string(i), Language::De, 0, 2010, Region::ZH,
                                   LegalArea::Public));
    for (int i = 0; i < 30; ++i)
        cases.push_back(swiss_case("soc" + std::to_string(i), Language::De, 1, 2010, Region::ZH,
                                   LegalArea::Social));
    Dataset ds(cases, Split::Train);
    auto freq = distribution(ds, Dimension::LegalArea);
    REQUIRE(freq.size() == 4);
    CHECK(freq[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(freq[1] == doctest::Approx(0.0));
    CHECK(freq[2] == doctest::Approx(0.0));
    CHECK(freq[3] == doctest::Approx(0.75).epsilon(1e-12));

    double total = freq[0] + freq[1] + freq[2] + freq[3];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    Dataset quad({swiss_case("a", Language::De, 0, 2010, Region::ZH, LegalArea::Public),
                  swiss_case("b", Language::De, 0, 2010, Region::ZH, LegalArea::Civil),
                  swiss_case("c", Language::De, 0, 2010, Region::ZH, LegalArea::Penal),
                  swiss_case("d", Language::De, 0, 2010, Region::ZH, LegalArea::Social)},
                 Split::Train);
    auto uniform = distribution(quad, Dimension::LegalArea);
    for (double v : uniform) CHECK(v == doctest::Approx(0.25));

    Dataset empty;
    CHECK_THROWS_AS(distribution(empty, Dimension::LegalArea), Error);

    Dataset missing({foreign_case("f1", 0, 2012)}, Split::Train);
    try {
        distribution(missing, Dimension::LegalArea);
        FAIL("expected missing-dimension error naming the case");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("f1") != std::string::npos);
    }
}

TEST_CASE("stratum_of reports enum labels and label strings") {
    auto c = swiss_case("a", Language::Fr, 1, 2010, Region::RL, LegalArea::Penal);
    CHECK(stratum_of(c, Dimension::Language).value() == "fr");
    CHECK(stratum_of(c, Dimension::Region).value() == "RL");
    CHECK(stratum_of(c, Dimension::LegalArea).value() == "penal");
    CHECK(stratum_of(c, Dimension::Label).value() == "1");
    auto f = foreign_case("f", 0, 2012);
    CHECK_FALSE(stratum_of(f, Dimension::Region).has_value());
    CHECK(dimension_values(Dimension::Label) == std::vector<std::string>{"0", "1"});
}
