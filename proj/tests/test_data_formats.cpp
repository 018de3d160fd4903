#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "micns/dataset.hpp"
#include "micns/errors.hpp"
#include "micns/rng.hpp"
#include "micns/tensor_io.hpp"
#include "test_util.hpp"

using namespace micns;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("micns_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("tensor files round-trip values at float32 precision") {
    Rng rng(11);
    auto dir = fresh_dir("tio");
    for (std::size_t rank = 1; rank <= 4; ++rank) {
        std::vector<std::size_t> shape;
        for (std::size_t i = 0; i < rank; ++i) shape.push_back(1 + rng.index(4));
        Tensor t = testutil::random_tensor(rng, shape, -100.0, 100.0);
        fs::path p = dir / ("r" + std::to_string(rank) + ".micn");
        save_tensor(p, t);
        Tensor back = load_tensor(p);
        CHECK(back.shape() == t.shape());
        for (std::size_t i = 0; i < t.size(); ++i)
            CHECK(back[i] == static_cast<double>(static_cast<float>(t[i])));
    }
}

TEST_CASE("a second save of a loaded tensor is byte-identical") {
    Rng rng(12);
    auto dir = fresh_dir("tio2");
    Tensor t = testutil::random_tensor(rng, {3, 7}, -5.0, 5.0);
    fs::path p1 = dir / "a.micn", p2 = dir / "b.micn";
    save_tensor(p1, t);
    save_tensor(p2, load_tensor(p1));
    CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("tensor header is the documented byte layout") {
    std::ostringstream os;
    save_tensor(os, Tensor::matrix(1, 2, {1.0, 2.0}));
    std::string b = os.str();
    REQUIRE(b.size() == 10 + 8 + 8);
    CHECK(b.substr(0, 4) == "MICN");
    CHECK(static_cast<unsigned char>(b[4]) == 1);  // version u16 LE
    CHECK(static_cast<unsigned char>(b[5]) == 0);
    CHECK(static_cast<unsigned char>(b[6]) == 2);  // rank u32 LE
    CHECK(static_cast<unsigned char>(b[10]) == 1);  // dim 0
    CHECK(static_cast<unsigned char>(b[14]) == 2);  // dim 1
}

TEST_CASE("corrupt tensor files raise coded errors") {
    std::string good;
    {
        std::ostringstream os;
        save_tensor(os, Tensor::matrix(2, 2, {1, 2, 3, 4}));
        good = os.str();
    }

    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        std::istringstream in(bad);
        try {
            load_tensor(in, "case");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.code() == IoError::Code::bad_magic);
        }
    }

    SUBCASE("unsupported version") {
        std::string bad = good;
        bad[4] = 9;
        std::istringstream in(bad);
        try {
            load_tensor(in, "case");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.code() == IoError::Code::bad_version);
        }
    }

    SUBCASE("payload one byte short names expected and actual lengths") {
        std::string bad = good.substr(0, good.size() - 1);
        std::istringstream in(bad);
        try {
            load_tensor(in, "case");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.code() == IoError::Code::truncated);
            std::string msg = e.what();
            CHECK(msg.find("expected 16 bytes") != std::string::npos);
            CHECK(msg.find("got 15") != std::string::npos);
        }
    }

    SUBCASE("trailing bytes") {
        std::string bad = good + "x";
        std::istringstream in(bad);
        CHECK_THROWS_AS(load_tensor(in, "case"), IoError);
    }

    SUBCASE("oversized dimensions") {
        std::string bad = good.substr(0, 10);
        // dims 100000 x 100000 overflow the element guard
        for (std::uint32_t d : {100000u, 100000u})
            for (int i = 0; i < 4; ++i) bad.push_back(static_cast<char>((d >> (8 * i)) & 0xff));
        std::istringstream in(bad);
        try {
            load_tensor(in, "case");
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.code() == IoError::Code::dim_overflow);
        }
    }

    SUBCASE("missing file") {
        try {
            load_tensor(fs::path("/nonexistent/nowhere.micn"));
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(e.code() == IoError::Code::open_failed);
        }
    }
}

TEST_CASE("concept csv writes header plus 0/1 rows and reads them back") {
    auto dir = fresh_dir("csv");
    data::ConceptCsv csv;
    csv.ids = {"s0", "s1"};
    csv.names = {"Bilateral involvement", "Crazy, paving"};
    csv.bits = Tensor::matrix(2, 2, {1, 0, 0, 1});
    fs::path p = dir / "labels.csv";
    data::write_concept_csv(p, csv);

    std::string text = file_bytes(p);
    CHECK(text == "id,Bilateral involvement,\"Crazy, paving\"\ns0,1,0\ns1,0,1\n");

    data::ConceptCsv back = data::read_concept_csv(p);
    CHECK(back.ids == csv.ids);
    CHECK(back.names == csv.names);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.bits[i] == csv.bits[i]);

    // Round-trip again: byte identical.
    fs::path p2 = dir / "labels2.csv";
    data::write_concept_csv(p2, back);
    CHECK(file_bytes(p) == file_bytes(p2));
}

TEST_CASE("concept csv rejects non-binary cells and malformed rows") {
    auto dir = fresh_dir("csvbad");
    {
        std::ofstream f(dir / "bad.csv");
        f << "id,a\ns0,0.5\n";
    }
    CHECK_THROWS_AS(data::read_concept_csv(dir / "bad.csv"), IoError);
    {
        std::ofstream f(dir / "short.csv");
        f << "id,a,b\ns0,1\n";
    }
    CHECK_THROWS_AS(data::read_concept_csv(dir / "short.csv"), IoError);
    {
        std::ofstream f(dir / "nohdr.csv");
        f << "sample,a\ns0,1\n";
    }
    CHECK_THROWS_AS(data::read_concept_csv(dir / "nohdr.csv"), IoError);

    data::ConceptCsv bad;
    bad.ids = {"s0"};
    bad.names = {"a"};
    bad.bits = Tensor::matrix(1, 1, {0.5});
    CHECK_THROWS_AS(data::write_concept_csv(dir / "w.csv", bad), ValueError);
}

TEST_CASE("manifest save/load/save produces identical bytes") {
    auto dir = fresh_dir("manifest");
    data::DatasetManifest m;
    m.feature_dim = 3;
    m.n_classes = 2;
    m.concept_labels_csv = "labels.csv";
    m.samples = {{"a", "features/a.micn", "", 0}, {"b", "features/b.micn", "maps/b.micn", 1}};
    fs::path p1 = dir / "m1.json", p2 = dir / "m2.json";
    data::save_manifest(p1, m);
    data::DatasetManifest back = data::load_manifest(p1);
    CHECK(back.feature_dim == 3);
    CHECK(back.samples.size() == 2);
    CHECK(back.samples[1].feature_map == "maps/b.micn");
    data::save_manifest(p2, back);
    CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("manifest validation rejects duplicates and bad labels") {
    auto dir = fresh_dir("manifestbad");
    auto write = [&](const std::string& body) {
        std::ofstream f(dir / "m.json");
        f << body;
    };
    write(R"({"format_version":1,"feature_dim":2,"num_classes":2,
           "samples":[{"id":"a","features":"x.micn","label":0},
                      {"id":"a","features":"y.micn","label":1}]})");
    CHECK_THROWS_AS(data::load_manifest(dir / "m.json"), ValueError);

    write(R"({"format_version":1,"feature_dim":2,"num_classes":2,
           "samples":[{"id":"a","features":"x.micn","label":5}]})");
    CHECK_THROWS_AS(data::load_manifest(dir / "m.json"), ValueError);

    write("{not json");
    CHECK_THROWS_AS(data::load_manifest(dir / "m.json"), IoError);
}

TEST_CASE("load_dataset checks tensor shapes against the manifest") {
    auto dir = fresh_dir("loadbad");
    save_tensor(dir / "good.micn", Tensor::vec({1.0, 2.0}));
    save_tensor(dir / "bad.micn", Tensor::vec({1.0, 2.0, 3.0}));

    data::DatasetManifest m;
    m.base_dir = dir;
    m.feature_dim = 2;
    m.n_classes = 2;
    m.samples = {{"a", "good.micn", "", 0}, {"b", "bad.micn", "", 1}};
    CHECK_THROWS_AS(data::load_dataset(m), ShapeError);

    m.samples = {{"a", "good.micn", "", 0}, {"b", "missing.micn", "", 1}};
    CHECK_THROWS_AS(data::load_dataset(m), IoError);
}

TEST_CASE("planted-rule pools reject shared assignments and starved classes") {
    using fuzzy::ConjunctiveRule;
    // Overlapping rules are allowed; the shared assignment (1,1) joins no pool.
    std::vector<ConjunctiveRule> overlap{{0, {{0, true}}, 0}, {1, {{1, true}}, 0}};
    auto pools = data::planted_pools(overlap, 2, 2);
    REQUIRE(pools.size() == 2);
    CHECK(pools[0] == std::vector<std::uint32_t>{1});  // c0=1, c1=0
    CHECK(pools[1] == std::vector<std::uint32_t>{2});  // c0=0, c1=1

    // A rule subsumed by another has no exclusive assignment left.
    std::vector<ConjunctiveRule> subsumed{{0, {{0, true}}, 0},
                                          {1, {{0, true}, {1, true}}, 0}};
    CHECK_THROWS_AS(data::planted_pools(subsumed, 2, 2), ValueError);

    // Contradictory rule never fires; normalized() rejects the duplicate concept.
    std::vector<ConjunctiveRule> contradictory{{0, {{0, true}, {0, false}}, 0},
                                               {1, {{0, true}}, 0}};
    CHECK_THROWS_AS(data::validate_planted_rules(contradictory, 2, 2), ValueError);

    // The default bodies pin every concept, so each class owns exactly the
    // one complementary bit pattern.
    auto dpools = data::planted_pools(data::default_planted_rules(), 4, 2);
    CHECK(dpools[0] == std::vector<std::uint32_t>{10});  // bits 0101 read c_0..c_3
    CHECK(dpools[1] == std::vector<std::uint32_t>{5});
}

TEST_CASE("synthetic generation plants rules, balances classes and reloads cleanly") {
    auto dir = fresh_dir("synth");
    data::SyntheticSpec spec;
    spec.samples_per_class = 25;
    spec.feature_dim = 8;
    spec.seed = 42;
    auto result = data::gen_synthetic(spec, dir);
    const data::Dataset& d = result.dataset;

    CHECK(d.size() == 50);
    CHECK(d.features.rows() == 50);
    CHECK(d.features.cols() == 8);
    CHECK(d.concept_labels.cols() == 4);
    CHECK(d.concept_names[0] == "c_0");

    // Every sample's concept bits satisfy exactly its class's planted rule.
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<double> truths;
        for (std::size_t c = 0; c < 4; ++c) truths.push_back(d.concept_labels.at(i, c));
        for (const auto& rule : result.rules) {
            double v = fuzzy::eval_rule(rule, truths);
            if (rule.class_index == d.labels[i]) CHECK(v == 1.0);
            else CHECK(v == 0.0);
        }
    }

    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "concept_labels.csv"));
    CHECK(fs::exists(dir / "concepts.json"));
    CHECK(fs::exists(dir / "ground_truth_rules.json"));
    CHECK(fs::exists(dir / "features/s0000.micn"));

    // Identical spec, identical bytes; different seed, different features.
    auto dir2 = fresh_dir("synth_repeat");
    data::gen_synthetic(spec, dir2);
    CHECK(file_bytes(dir / "features/s0000.micn") == file_bytes(dir2 / "features/s0000.micn"));
    CHECK(file_bytes(dir / "concept_labels.csv") == file_bytes(dir2 / "concept_labels.csv"));

    data::SyntheticSpec spec2 = spec;
    spec2.seed = 43;
    auto dir3 = fresh_dir("synth_reseed");
    data::gen_synthetic(spec2, dir3);
    CHECK(file_bytes(dir / "features/s0000.micn") != file_bytes(dir3 / "features/s0000.micn"));
}

TEST_CASE("synthetic noise is bounded by sigma scale") {
    // With sigma 0 the features are the exact affine image: regenerating with
    // the same seed but different sigma only moves features by the noise.
    auto dir_a = fresh_dir("noise_a");
    auto dir_b = fresh_dir("noise_b");
    data::SyntheticSpec a;
    a.samples_per_class = 10;
    a.noise_sigma = 0.0;
    a.seed = 7;
    data::SyntheticSpec b = a;
    b.noise_sigma = 0.01;
    auto ra = data::gen_synthetic(a, dir_a);
    auto rb = data::gen_synthetic(b, dir_b);
    // Same seed draws the same concept bits.
    for (std::size_t i = 0; i < ra.dataset.size(); ++i)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(ra.dataset.concept_labels.at(i, c) == rb.dataset.concept_labels.at(i, c));
}
