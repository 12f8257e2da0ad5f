#include "cncfl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl::oracle {

CostMatrix random_cost_matrix(std::uint64_t seed, std::size_t n, double lo, double hi) {
    CostMatrix m(n, n);
    Rng rng = make_rng(seed, Stream::Oracle);
    for (double& v : m.cost) v = uniform(rng, lo, hi);
    return m;
}

std::vector<double> finite_difference_gradient(const ParamVector& params, std::span<const Sample> batch, double step) {
    std::vector<double> out(params.values.size());
    ParamVector probe = params;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double x = params.values[i];
        probe.values[i] = x + step;
        const double up = forward_loss(probe, batch);
        probe.values[i] = x - step;
        const double down = forward_loss(probe, batch);
        probe.values[i] = x;
        out[i] = (up - down) / (2.0 * step);
    }
    return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) throw InvalidInput("relative error of vectors with different lengths");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

GradientCase random_gradient_case(std::uint64_t seed) {
    Rng rng = make_rng(seed, Stream::Oracle, 1);
    std::uniform_int_distribution<std::size_t> dim_d(1, 6), cls_d(2, 5), batch_d(1, 8), hid_d(0, 4);
    const std::size_t dim = dim_d(rng);
    const std::size_t classes = cls_d(rng);
    const std::size_t hidden = hid_d(rng);
    GradientCase c;
    c.params = init_model(rng(), dim, classes, hidden ? std::optional<std::size_t>(hidden) : std::nullopt);
    // Non-zero biases so every coordinate is exercised.
    std::normal_distribution<double> nd(0.0, 0.5);
    for (double& v : c.params.values) v += nd(rng);
    std::uniform_int_distribution<int> label_d(0, static_cast<int>(classes) - 1);
    const std::size_t bsz = batch_d(rng);
    for (std::size_t k = 0; k < bsz; ++k) {
        Sample s;
        s.label = label_d(rng);
        for (std::size_t j = 0; j < dim; ++j) s.features.push_back(nd(rng) * 2.0);
        c.batch.push_back(std::move(s));
    }
    return c;
}

SweepResult check_hungarian(std::size_t n, std::size_t trials, std::uint64_t seed, double corrupt) {
    SweepResult r{"hungarian", 0, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        const CostMatrix m = random_cost_matrix(derive_seed(seed, {n, t, 1}), n);
        const double got = hungarian_assign(m).cost + corrupt;
        const double want = brute_force_assign(m, Objective::Sum).cost;
        r.worst = std::max(r.worst, std::abs(got - want));
        if (got == want) ++r.passed;
    }
    return r;
}

SweepResult check_bottleneck(std::size_t n, std::size_t trials, std::uint64_t seed) {
    SweepResult r{"bottleneck", 0, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        const CostMatrix m = random_cost_matrix(derive_seed(seed, {n, t, 2}), n);
        const double got = bottleneck_assign(m).cost;
        const double want = brute_force_assign(m, Objective::Max).cost;
        r.worst = std::max(r.worst, std::abs(got - want));
        if (got == want) ++r.passed;
    }
    return r;
}

SweepResult check_binary_3x3_sweep() {
    SweepResult r{"binary-3x3", 0, 512, 0.0};
    for (unsigned bits = 0; bits < 512; ++bits) {
        CostMatrix m(3, 3);
        for (std::size_t k = 0; k < 9; ++k) m.cost[k] = (bits >> k) & 1u;
        const auto hs = hungarian_assign(m);
        const auto bs = brute_force_assign(m, Objective::Sum);
        const auto hb = bottleneck_assign(m);
        const auto bb = brute_force_assign(m, Objective::Max);
        const bool ok = hs.cost == bs.cost && hb.cost == bb.cost && hs.col_of_row == bs.col_of_row &&
                        hb.col_of_row == bb.col_of_row;
        r.worst = std::max({r.worst, std::abs(hs.cost - bs.cost), std::abs(hb.cost - bb.cost)});
        if (ok) ++r.passed;
    }
    return r;
}

SweepResult check_greedy_vs_held_karp(std::size_t n, std::size_t trials, std::uint64_t seed) {
    SweepResult r{"greedy-vs-held-karp", 0, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto g = gen_consumption_matrix(derive_seed(seed, {n, t, 3}), n, 1.0, 10.0, 0.0);
        const auto greedy = greedy_backtrack_path(g);
        const auto exact = held_karp_path(g);
        bool ok = false;
        try {
            ok = path_cost(g, greedy.path) == greedy.cost && greedy.cost >= exact.cost;
        } catch (const InvalidPath&) {
            ok = false;
        }
        r.worst = std::max(r.worst, exact.cost - greedy.cost);
        if (ok) ++r.passed;
    }
    return r;
}

PathResult brute_force_path(const ConsumptionMatrix& g) {
    if (g.n > 9) throw InvalidInput("brute-force path search refused for n > 9");
    std::vector<int> perm(g.n);
    std::iota(perm.begin(), perm.end(), 0);
    PathResult best{{}, std::numeric_limits<double>::infinity()};
    do {
        double total = 0.0;
        bool feasible = true;
        for (std::size_t k = 1; k < perm.size() && feasible; ++k) {
            const auto i = static_cast<std::size_t>(perm[k - 1]);
            const auto j = static_cast<std::size_t>(perm[k]);
            feasible = g.reachable(i, j);
            total += feasible ? g.at(i, j) : 0.0;
        }
        if (feasible && total < best.cost) best = {perm, total};
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

SweepResult check_held_karp_exhaustive(std::size_t n, std::size_t trials, std::uint64_t seed) {
    SweepResult r{"held-karp-exhaustive", 0, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto g = gen_consumption_matrix(derive_seed(seed, {n, t, 4}), n, 1.0, 10.0, 0.0);
        const auto exact = held_karp_path(g);
        const auto brute = brute_force_path(g);
        r.worst = std::max(r.worst, std::abs(exact.cost - brute.cost));
        if (std::abs(exact.cost - brute.cost) <= 1e-12 * (1.0 + brute.cost)) ++r.passed;
    }
    return r;
}

SweepResult check_gradient(std::size_t trials, std::uint64_t seed, double tolerance) {
    SweepResult r{"gradient", 0, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto c = random_gradient_case(derive_seed(seed, {t, 5}));
        const auto analytic = gradient(c.params, c.batch);
        const auto numeric = finite_difference_gradient(c.params, c.batch);
        const double err = max_relative_error(analytic.values, numeric);
        r.worst = std::max(r.worst, err);
        if (err < tolerance) ++r.passed;
    }
    return r;
}

} // namespace cncfl::oracle
