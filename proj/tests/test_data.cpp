#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cncfl/data.hpp"
#include "cncfl/engine.hpp"
#include "cncfl/error.hpp"
#include "cncfl/model.hpp"

using namespace cncfl;

namespace {

std::vector<Sample> sorted(std::vector<Sample> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<Sample> union_of(const std::vector<Shard>& shards) {
    std::vector<Sample> all;
    for (const auto& s : shards) all.insert(all.end(), s.samples.begin(), s.samples.end());
    return all;
}

double label_entropy(const std::vector<Sample>& samples) {
    std::map<int, double> counts;
    for (const auto& s : samples) counts[s.label] += 1.0;
    double h = 0.0;
    for (const auto& [label, c] : counts) {
        const double p = c / static_cast<double>(samples.size());
        h -= p * std::log(p);
    }
    return h;
}

double centralized_accuracy(const std::vector<Sample>& data, std::size_t classes, std::size_t epochs) {
    auto p = init_model(1, data[0].features.size(), classes);
    for (std::size_t e = 0; e < epochs; ++e) p = sgd_local_train(p, data, Hyperparams{0.01, 10, 1}, e);
    return evaluate(p, data);
}

// 2 images of 3x3 and their labels, big-endian headers.
const std::vector<std::uint8_t> kImages{
    0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x03, 0x00, 0x00, 0x00, 0x03,
    0,    255,  0,    51,   102,  153,  204,  255,  1,
    10,   20,   30,   40,   50,   60,   70,   80,   90,
};
const std::vector<std::uint8_t> kLabels{0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x02, 7, 3};

} // namespace

TEST_CASE("gen_synthetic balance and determinism") {
    const auto d = gen_synthetic(5, 100, 2, 2, 4.0);
    CHECK(d.size() == 100);
    CHECK(std::count_if(d.begin(), d.end(), [](const Sample& s) { return s.label == 0; }) == 50);
    CHECK(d == gen_synthetic(5, 100, 2, 2, 4.0));
    CHECK(d != gen_synthetic(6, 100, 2, 2, 4.0));

    const auto odd = gen_synthetic(5, 103, 3, 10, 1.0);
    std::map<int, int> counts;
    for (const auto& s : odd) ++counts[s.label];
    CHECK(counts.size() == 10);
    for (const auto& [l, c] : counts) CHECK((c == 10 || c == 11));
    CHECK(count_classes(odd) == 10);
}

TEST_CASE("gen_synthetic rejects bad arguments") {
    CHECK_THROWS_AS(gen_synthetic(1, 10, 0, 2, 1.0), InvalidInput);
    CHECK_THROWS_AS(gen_synthetic(1, 3, 2, 4, 1.0), InvalidInput);
}

TEST_CASE("synthetic difficulty is governed by separation") {
    const auto chance = gen_synthetic(8, 1000, 10, 10, 0.0);
    CHECK(std::abs(centralized_accuracy(chance, 10, 20) - 0.1) <= 0.1);
    const auto easy = gen_synthetic(8, 2000, 10, 10, 6.0);
    CHECK(centralized_accuracy(easy, 10, 50) >= 0.95);
}

TEST_CASE("partition_iid sizes and coverage") {
    const auto d100 = gen_synthetic(1, 100, 2, 2, 1.0);
    const auto s10 = partition_iid(d100, 10, 3);
    REQUIRE(s10.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(s10[i].size() == 10);
        CHECK(s10[i].client_id == static_cast<int>(i));
    }
    CHECK(sorted(union_of(s10)) == sorted(d100));

    const auto d101 = gen_synthetic(1, 101, 2, 2, 1.0);
    const auto s = partition_iid(d101, 10, 3);
    std::multiset<std::size_t> sizes;
    for (const auto& sh : s) sizes.insert(sh.size());
    CHECK(sizes.count(11) == 1);
    CHECK(sizes.count(10) == 9);
    CHECK(sorted(union_of(s)) == sorted(d101));

    CHECK(partition_iid(d100, 10, 3)[4].samples == s10[4].samples);
    CHECK_THROWS_AS(partition_iid(d100, 0, 1), InvalidInput);
    CHECK_THROWS_AS(partition_iid(d100, 101, 1), InvalidInput);
}

TEST_CASE("partition_weighted follows multipliers") {
    const auto d = gen_synthetic(1, 100, 2, 2, 1.0);
    const std::vector<double> mult{1.0, 3.0};
    const auto s = partition_weighted(d, 4, mult, 2);
    REQUIRE(s.size() == 4);
    // one guaranteed sample each, the remaining 96 split 1:3:1:3
    CHECK(s[0].size() == 13);
    CHECK(s[1].size() == 37);
    CHECK(s[2].size() == 13);
    CHECK(s[3].size() == 37);
    CHECK(sorted(union_of(s)) == sorted(d));
}

TEST_CASE("partition_label_skew single label per client") {
    const auto d = gen_synthetic(4, 1000, 3, 10, 2.0);
    const auto s = partition_label_skew(d, 10, 1, 9);
    REQUIRE(s.size() == 10);
    std::set<int> seen;
    for (const auto& sh : s) {
        std::set<int> labels;
        for (const auto& x : sh.samples) labels.insert(x.label);
        CHECK(labels.size() == 1);
        seen.insert(*labels.begin());
        CHECK(sh.size() == 100);
    }
    CHECK(seen.size() == 10);
    CHECK(sorted(union_of(s)) == sorted(d));
}

TEST_CASE("partition_label_skew bounds labels per client") {
    const auto d = gen_synthetic(4, 2000, 3, 10, 2.0);
    const auto s = partition_label_skew(d, 20, 2, 9);
    for (const auto& sh : s) {
        std::set<int> labels;
        for (const auto& x : sh.samples) labels.insert(x.label);
        CHECK(labels.size() <= 2);
        CHECK(sh.size() == 100);
    }
    CHECK(sorted(union_of(s)) == sorted(d));
    CHECK(partition_label_skew(d, 20, 2, 9)[7].samples == s[7].samples);
    CHECK_THROWS_AS(partition_label_skew(d, 20, 0, 9), InvalidInput);
    CHECK_THROWS_AS(partition_label_skew(d, 20, 11, 9), InvalidInput);
}

TEST_CASE("label skew with all labels keeps the global entropy") {
    const auto d = gen_synthetic(4, 5000, 3, 10, 2.0);
    const double global = label_entropy(d);
    const auto s = partition_label_skew(d, 10, 10, 9);
    for (const auto& sh : s) CHECK(std::abs(label_entropy(sh.samples) - global) <= 0.05 * global);
}

TEST_CASE("split_holdout") {
    const auto d = gen_synthetic(4, 100, 3, 4, 2.0);
    const auto tt = split_holdout(d, 0.2, 3);
    CHECK(tt.test.size() == 20);
    CHECK(tt.train.size() == 80);
    auto all = tt.train;
    all.insert(all.end(), tt.test.begin(), tt.test.end());
    CHECK(sorted(all) == sorted(d));
}

TEST_CASE("parse_idx reads the hand-crafted fixture") {
    const auto s = parse_idx(kImages, kLabels);
    REQUIRE(s.size() == 2);
    CHECK(s[0].label == 7);
    CHECK(s[1].label == 3);
    REQUIRE(s[0].features.size() == 9);
    CHECK(s[0].features[0] == 0.0);
    CHECK(s[0].features[1] == 1.0);
    CHECK(s[0].features[3] == doctest::Approx(0.2));
    CHECK(s[1].features[8] == doctest::Approx(90.0 / 255.0));
}

TEST_CASE("idx round trip reproduces the fixture bytes") {
    const auto s = parse_idx(kImages, kLabels);
    const auto bytes = encode_idx(s, 3, 3);
    CHECK(bytes.images == kImages);
    CHECK(bytes.labels == kLabels);
}

TEST_CASE("idx errors") {
    auto bad_magic = kImages;
    bad_magic[3] = 0x02;
    try {
        parse_idx(bad_magic, kLabels);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("unexpected magic") != std::string::npos);
    }

    std::vector<std::uint8_t> three_images{0x00, 0x00, 0x08, 0x03, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0, 1, 5, 6, 7};
    try {
        parse_idx(three_images, kLabels);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
    }

    const std::vector<std::uint8_t> truncated(kImages.begin(), kImages.end() - 1);
    try {
        parse_idx(truncated, kLabels);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("load_idx from files") {
    const auto dir = std::filesystem::temp_directory_path() / "cncfl_idx_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "img", std::ios::binary).write(reinterpret_cast<const char*>(kImages.data()), kImages.size());
        std::ofstream(dir / "lbl", std::ios::binary).write(reinterpret_cast<const char*>(kLabels.data()), kLabels.size());
    }
    CHECK(load_idx(dir / "img", dir / "lbl") == parse_idx(kImages, kLabels));
    CHECK_THROWS_AS(load_idx(dir / "missing", dir / "lbl"), ParseError);
    std::filesystem::remove_all(dir);
}
