#pragma once

// Serverless (chain) training: balanced subset partitioning, transmission-path
// search over a consumption matrix, chain training and sub-model aggregation.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cncfl/data.hpp"
#include "cncfl/model.hpp"
#include "cncfl/scheduler.hpp"

namespace cncfl {

enum class CostUnit { Delay, Energy };

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Pairwise client-to-client transmission cost; possibly asymmetric.
/// Unreachable pairs hold kUnreachable, as does the diagonal.
struct ConsumptionMatrix {
    std::size_t n = 0;
    std::vector<double> cost;
    CostUnit unit = CostUnit::Delay;

    ConsumptionMatrix() = default;
    explicit ConsumptionMatrix(std::size_t size, double fill = kUnreachable, CostUnit u = CostUnit::Delay);

    double at(std::size_t i, std::size_t j) const { return cost[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return cost[i * n + j]; }
    bool reachable(std::size_t i, std::size_t j) const { return i != j && at(i, j) != kUnreachable; }

    /// Restriction to `members` (indices into this matrix), in the given order.
    ConsumptionMatrix submatrix(std::span<const int> members) const;
};

/// Uniform costs in [lo, hi); each off-diagonal pair independently unreachable with
/// probability `unreachable_prob`.
ConsumptionMatrix gen_consumption_matrix(std::uint64_t seed, std::size_t n, double lo, double hi,
                                         double unreachable_prob, CostUnit unit = CostUnit::Delay);

/// Text format: first line n, then n rows of n whitespace-separated values; `inf`
/// marks an unreachable pair.
ConsumptionMatrix parse_consumption_matrix(std::istream& in, CostUnit unit = CostUnit::Delay);
ConsumptionMatrix load_consumption_matrix(const std::string& path, CostUnit unit = CostUnit::Delay);
void write_consumption_matrix(std::ostream& out, const ConsumptionMatrix& g);

/// Longest-processing-time split into E subsets with similar local-delay sums.
/// Returns client ids per subset in assignment order.
std::vector<std::vector<int>> partition_balanced(std::span<const ComputeProfile> profiles, const DelayModel& dm,
                                                 std::size_t subsets);

struct PathResult {
    std::vector<int> path;   // indices into the matrix
    double cost = 0.0;
};

/// Sum of hop costs along `path`. Throws InvalidPath on a repeated, missing or
/// out-of-range node or an unreachable hop.
double path_cost(const ConsumptionMatrix& g, std::span<const int> path);

/// Depth-first greedy search from every start: extend to the cheapest unvisited
/// reachable neighbour (ties by index), back off on dead ends, keep the first
/// complete path per start, and return the cheapest over all starts.
/// `max_expansions` bounds the work per start.
PathResult greedy_backtrack_path(const ConsumptionMatrix& g, std::size_t max_expansions = 2'000'000);

/// Exact minimum-cost Hamiltonian path over all endpoints (bitmask DP). n <= 15.
PathResult held_karp_path(const ConsumptionMatrix& g);

inline constexpr std::size_t kHeldKarpMaxNodes = 15;

/// Sequential training along a chain: each client starts from its predecessor's
/// output. `shards` are given in path order; client i trains with
/// client_seed(seed, shards[i].client_id).
ParamVector chain_train(const ParamVector& model, std::span<const Shard> shards, const Hyperparams& hyper,
                        std::uint64_t seed);

/// Weighted average of sub-models by subset data volume N_te.
ParamVector aggregate_subsets(std::span<const ParamVector> submodels, std::span<const double> subset_data);

} // namespace cncfl
