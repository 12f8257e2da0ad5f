#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cncfl/data.hpp"
#include "cncfl/error.hpp"
#include "cncfl/model.hpp"
#include "cncfl/oracle.hpp"

using namespace cncfl;

namespace {

// Scalar reimplementation of the mean cross-entropy, written against the
// documented layout rather than the library's internals.
double reference_loss(const ParamVector& p, const std::vector<Sample>& batch) {
    const auto& v = p.values;
    const std::size_t d = p.layout[0].cols;
    double total = 0.0;
    for (const auto& s : batch) {
        std::vector<double> z;
        if (p.layout.size() == 2) {
            const std::size_t c = p.layout[0].rows;
            for (std::size_t k = 0; k < c; ++k) {
                double acc = v[c * d + k];
                for (std::size_t j = 0; j < d; ++j) acc += v[k * d + j] * s.features[j];
                z.push_back(acc);
            }
        } else {
            const std::size_t h = p.layout[0].rows;
            const std::size_t c = p.layout[2].rows;
            const std::size_t b1 = h * d, w2 = b1 + h, b2 = w2 + c * h;
            std::vector<double> a(h);
            for (std::size_t u = 0; u < h; ++u) {
                double acc = v[b1 + u];
                for (std::size_t j = 0; j < d; ++j) acc += v[u * d + j] * s.features[j];
                a[u] = std::tanh(acc);
            }
            for (std::size_t k = 0; k < c; ++k) {
                double acc = v[b2 + k];
                for (std::size_t u = 0; u < h; ++u) acc += v[w2 + k * h + u] * a[u];
                z.push_back(acc);
            }
        }
        double mx = z[0];
        for (double x : z) mx = std::max(mx, x);
        double sum = 0.0;
        for (double x : z) sum += std::exp(x - mx);
        total += -(z[static_cast<std::size_t>(s.label)] - mx - std::log(sum));
    }
    return total / static_cast<double>(batch.size());
}

std::vector<Sample> blob_batch(std::uint64_t seed, std::size_t n, std::size_t dim, int classes) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s{{}, static_cast<int>(i % static_cast<std::size_t>(classes))};
        for (std::size_t j = 0; j < dim; ++j) s.features.push_back(nd(rng));
        out.push_back(s);
    }
    return out;
}

} // namespace

TEST_CASE("init_model shapes") {
    const auto p = init_model(7, 4, 3);
    REQUIRE(p.layout.size() == 2);
    CHECK(p.layout[0] == LayerShape{"W", 3, 4});
    CHECK(p.layout[1] == LayerShape{"b", 3, 1});
    CHECK(p.size() == 15);
    CHECK(init_model(7, 784, 10, 32).size() == 25450);
    CHECK(p.input_dim() == 4);
    CHECK(p.num_classes() == 3);
    CHECK_FALSE(p.hidden().has_value());
}

TEST_CASE("init_model is deterministic and has zero biases") {
    const auto a = init_model(7, 4, 3);
    const auto b = init_model(7, 4, 3);
    CHECK(a.values == b.values);
    CHECK(init_model(8, 4, 3).values != a.values);
    for (std::size_t k = 12; k < 15; ++k) CHECK(a.values[k] == 0.0);
}

TEST_CASE("init_model rejects bad shapes") {
    CHECK_THROWS_AS(init_model(1, 4, 3, 0), InvalidInput);
    CHECK_THROWS_AS(init_model(1, 0, 3), InvalidInput);
    CHECK_THROWS_AS(init_model(1, 4, 1), InvalidInput);
}

TEST_CASE("init_model weight scale follows fan-in") {
    const auto p = init_model(3, 400, 10);
    double sq = 0.0;
    for (std::size_t k = 0; k < 4000; ++k) sq += p.values[k] * p.values[k];
    const double sd = std::sqrt(sq / 4000.0);
    CHECK(sd == doctest::Approx(1.0 / 20.0).epsilon(0.05));
}

TEST_CASE("zero parameters give ln C loss") {
    for (int c : {2, 3, 10}) {
        auto p = init_model(1, 5, static_cast<std::size_t>(c));
        std::fill(p.values.begin(), p.values.end(), 0.0);
        const auto batch = blob_batch(11, 7, 5, c);
        CHECK(std::abs(forward_loss(p, batch) - std::log(static_cast<double>(c))) < 1e-12);
    }
}

TEST_CASE("loss decreases toward zero as the correct logit grows") {
    auto p = init_model(1, 1, 2);
    std::fill(p.values.begin(), p.values.end(), 0.0);
    const std::vector<Sample> one{{{1.0}, 1}};
    double prev = forward_loss(p, one);
    for (double b : {1.0, 5.0, 20.0, 100.0}) {
        p.values[3] = b;   // bias of class 1
        const double l = forward_loss(p, one);
        CHECK(l < prev);
        CHECK(l >= 0.0);
        prev = l;
    }
    CHECK(prev < 1e-40);
}

TEST_CASE("forward_loss matches scalar reimplementation") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto c = oracle::random_gradient_case(seed);
        const double got = forward_loss(c.params, c.batch);
        const double want = reference_loss(c.params, c.batch);
        CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("forward_loss rejects mismatched input") {
    const auto p = init_model(1, 3, 2);
    const std::vector<Sample> wrong_dim{{{1.0, 2.0}, 0}};
    const std::vector<Sample> wrong_label{{{1.0, 2.0, 3.0}, 2}};
    CHECK_THROWS_AS(forward_loss(p, wrong_dim), InvalidInput);
    CHECK_THROWS_AS(forward_loss(p, wrong_label), InvalidInput);
    CHECK_THROWS_AS(gradient(p, wrong_dim), InvalidInput);
}

TEST_CASE("gradient agrees with central finite differences") {
    const auto r = oracle::check_gradient(50, 2024);
    CHECK(r.passed == 50);
    CHECK(r.worst < 1e-4);
}

TEST_CASE("duplicated batch gives the same gradient") {
    const auto c = oracle::random_gradient_case(9);
    auto twice = c.batch;
    twice.insert(twice.end(), c.batch.begin(), c.batch.end());
    const auto g1 = gradient(c.params, c.batch);
    const auto g2 = gradient(c.params, twice);
    REQUIRE(g1.values.size() == g2.values.size());
    for (std::size_t i = 0; i < g1.values.size(); ++i) CHECK(g2.values[i] == doctest::Approx(g1.values[i]).epsilon(1e-12));
    CHECK(g1.layout == c.params.layout);
}

TEST_CASE("bias gradient of zero softmax equals 1/C minus class frequency") {
    const std::size_t classes = 4;
    auto p = init_model(1, 3, classes);
    std::fill(p.values.begin(), p.values.end(), 0.0);
    // labels 0,0,0,1,1,2 : class 3 absent
    std::vector<Sample> batch;
    for (int l : {0, 0, 0, 1, 1, 2}) batch.push_back({{1.0, 1.0, 1.0}, l});
    const auto g = gradient(p, batch);
    const double freq[] = {0.5, 1.0 / 3.0, 1.0 / 6.0, 0.0};
    for (std::size_t k = 0; k < classes; ++k) CHECK(g.values[12 + k] == doctest::Approx(0.25 - freq[k]).epsilon(1e-12));
    CHECK(g.values[12] < 0.0);
    CHECK(g.values[15] > 0.0);
}

TEST_CASE("sgd with zero learning rate is the identity") {
    const auto p = init_model(5, 4, 3);
    const auto shard = blob_batch(3, 23, 4, 3);
    const auto out = sgd_local_train(p, shard, Hyperparams{0.0, 5, 3}, 17);
    CHECK(out.values == p.values);
}

TEST_CASE("one full-shard batch equals a single gradient step") {
    const auto p = init_model(5, 4, 3);
    const auto shard = blob_batch(3, 12, 4, 3);
    const Hyperparams h{0.1, 12, 1};
    const auto out = sgd_local_train(p, shard, h, 17);
    const auto g = gradient(p, shard);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(out.values[i] - (p.values[i] - 0.1 * g.values[i])) < 1e-12);
}

TEST_CASE("sgd keeps the short final batch and is deterministic") {
    const auto p = init_model(5, 4, 3, 6);
    const auto shard = blob_batch(4, 23, 4, 3);
    const Hyperparams h{0.05, 10, 2};
    const auto a = sgd_local_train(p, shard, h, 99);
    const auto b = sgd_local_train(p, shard, h, 99);
    CHECK(a.values == b.values);
    CHECK(sgd_local_train(p, shard, h, 100).values != a.values);
    CHECK_THROWS_AS(sgd_local_train(p, std::span<const Sample>{}, h, 1), InvalidInput);
}

TEST_CASE("sgd lowers the loss on separable data") {
    const auto data = gen_synthetic(21, 200, 2, 2, 4.0);
    const auto p = init_model(2, 2, 2);
    const auto out = sgd_local_train(p, data, Hyperparams{0.01, 10, 5}, 3);
    CHECK(forward_loss(out, data) < forward_loss(p, data));
}

TEST_CASE("param_size_bytes") {
    const auto small = init_model(1, 4, 3);
    CHECK(param_size_bytes(small) == 60);
    CHECK(param_size_bytes(init_model(1, 784, 10, 32)) == 101800);
    CHECK(megabytes_to_bytes(0.606) == 635437);
    CHECK(param_size_bytes(small, megabytes_to_bytes(0.606)) == 635437);
}

TEST_CASE("weighted_average") {
    const auto a = init_model(1, 4, 3);
    const auto b = init_model(2, 4, 3);
    const auto c = init_model(3, 4, 3);

    SUBCASE("identical models are a fixed point") {
        const std::vector<ParamVector> same{a, a, a};
        const std::vector<double> w{0.3, 5.0, 1.7};
        const auto out = weighted_average(same, w);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(out.values[i] - a.values[i]) <= 1e-12);
    }
    SUBCASE("degenerate weight returns the first model") {
        const std::vector<ParamVector> two{a, b};
        const std::vector<double> w{1.0, 0.0};
        CHECK(weighted_average(two, w).values == a.values);
    }
    SUBCASE("per-coordinate oracle and convex hull") {
        const std::vector<ParamVector> three{a, b, c};
        const std::vector<double> w{1.0, 2.0, 3.0};
        const auto out = weighted_average(three, w);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double want = (a.values[i] + 2.0 * b.values[i] + 3.0 * c.values[i]) / 6.0;
            CHECK(std::abs(out.values[i] - want) <= 1e-12);
            const double lo = std::min({a.values[i], b.values[i], c.values[i]});
            const double hi = std::max({a.values[i], b.values[i], c.values[i]});
            CHECK(out.values[i] >= lo - 1e-15);
            CHECK(out.values[i] <= hi + 1e-15);
        }
    }
    SUBCASE("errors") {
        const std::vector<ParamVector> mixed{a, init_model(1, 5, 3)};
        const std::vector<double> w{1.0, 1.0};
        CHECK_THROWS_AS(weighted_average(mixed, w), InvalidInput);
        const std::vector<ParamVector> two{a, b};
        const std::vector<double> zero{0.0, 0.0};
        CHECK_THROWS_AS(weighted_average(two, zero), InvalidInput);
    }
}

TEST_CASE("predict breaks ties toward the lowest class") {
    auto p = init_model(1, 2, 3);
    std::fill(p.values.begin(), p.values.end(), 0.0);
    const std::vector<double> x{1.0, -1.0};
    CHECK(predict(p, x) == 0);
    p.values[6 + 2] = 1.0;
    CHECK(predict(p, x) == 2);
}
