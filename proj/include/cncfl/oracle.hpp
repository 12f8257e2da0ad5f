#pragma once

// Independent reference computations used to cross-check the solvers and the
// analytic gradient: random instance generators, central finite differences,
// and solver-vs-oracle sweeps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cncfl/model.hpp"
#include "cncfl/p2p.hpp"
#include "cncfl/scheduler.hpp"

namespace cncfl::oracle {

CostMatrix random_cost_matrix(std::uint64_t seed, std::size_t n, double lo = 0.0, double hi = 1.0);

/// Central differences of forward_loss, one coordinate at a time.
std::vector<double> finite_difference_gradient(const ParamVector& params, std::span<const Sample> batch,
                                               double step = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6);

struct GradientCase {
    ParamVector params;
    std::vector<Sample> batch;
};
/// Random model (with or without a hidden layer) and a random labelled batch.
GradientCase random_gradient_case(std::uint64_t seed);

struct SweepResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t trials = 0;
    double worst = 0.0;   // largest observed discrepancy

    bool ok() const noexcept { return passed == trials; }
};

/// Hungarian total vs exhaustive search on random n x n matrices. A non-zero
/// `corrupt` is added to every solver total (negative control).
SweepResult check_hungarian(std::size_t n, std::size_t trials, std::uint64_t seed, double corrupt = 0.0);
SweepResult check_bottleneck(std::size_t n, std::size_t trials, std::uint64_t seed);
/// Every 3x3 0/1 matrix, Hungarian and bottleneck vs exhaustive search.
SweepResult check_binary_3x3_sweep();
/// Greedy path is a valid Hamiltonian path costing no less than Held-Karp, on
/// random complete matrices with costs in [1, 10).
SweepResult check_greedy_vs_held_karp(std::size_t n, std::size_t trials, std::uint64_t seed);
/// Held-Karp vs enumeration of all n! orders.
SweepResult check_held_karp_exhaustive(std::size_t n, std::size_t trials, std::uint64_t seed);
SweepResult check_gradient(std::size_t trials, std::uint64_t seed, double tolerance = 1e-4);

/// Minimum path cost over all permutations (n <= 9).
PathResult brute_force_path(const ConsumptionMatrix& g);

} // namespace cncfl::oracle
