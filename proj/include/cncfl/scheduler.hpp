#pragma once

// Traditional-architecture planning: local training delay, power-tiered
// client sampling, and resource-block assignment solvers.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <vector>

#include "cncfl/channel.hpp"

namespace cncfl {

struct ComputeProfile {
    int client_id = 0;
    double capacity = 1.0;        // work units per second
    std::size_t shard_size = 1;   // |D_i|

    void validate() const;
};

struct DelayModel {
    double alpha = 4.0 / 600.0;   // seconds * capacity per sample per epoch
    std::size_t local_epochs = 1;

    void validate() const;
};

/// t_i = alpha * local_epochs * |D_i| / c_i
double local_delay(const ComputeProfile& profile, const DelayModel& dm);

/// t_max - t_min over a non-empty selection.
double delay_spread(std::span<const ComputeProfile> selected, const DelayModel& dm);

/// Sorts clients by local delay (descending, ties by client id) and splits them
/// into m contiguous tiers; earlier tiers take the remainder. Returns indices
/// into `profiles`.
std::vector<std::vector<std::size_t>> split_tiers(std::span<const ComputeProfile> profiles, const DelayModel& dm,
                                                  std::size_t m);

struct RoundPlan {
    std::vector<int> selected;   // client ids, in draw order
    std::map<int, int> rb_of;    // client id -> RB index
    int tier_index = -1;
};

/// Picks tier k with probability N_k / sum N, then draws n distinct clients
/// from it, each draw proportional to |D_i| among those remaining.
/// Throws TierTooSmall when the drawn tier has fewer than n clients.
RoundPlan power_tiered_sample(std::span<const ComputeProfile> profiles, const DelayModel& dm, std::size_t m,
                              std::size_t n, std::uint64_t seed);

/// Dense row-major cost matrix. Entries equal to kPadSentinel mark dummy
/// pairs introduced by padding; solvers never count them in reported costs.
inline constexpr double kPadSentinel = 1e12;

struct CostMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> cost;

    CostMatrix() = default;
    CostMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), cost(r * c, fill) {}
    CostMatrix(std::initializer_list<std::initializer_list<double>> init);

    double& at(std::size_t i, std::size_t j) { return cost[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return cost[i * cols + j]; }
    bool square() const noexcept { return rows == cols; }
};

/// Pads with sentinel rows or columns up to a square matrix.
CostMatrix pad_square(const CostMatrix& m);

struct Assignment {
    std::vector<int> col_of_row;
    double cost = 0.0;   // sum or max over non-sentinel pairs, depending on the solver
};

/// Minimum-sum perfect matching (Hungarian / Kuhn-Munkres). Among optimal
/// matchings the lexicographically smallest col_of_row is returned.
Assignment hungarian_assign(const CostMatrix& costs);

/// Minimum-bottleneck perfect matching: binary search over distinct costs with a
/// bipartite-matching feasibility test. Lexicographically smallest among optima.
Assignment bottleneck_assign(const CostMatrix& costs);

enum class Objective { Sum, Max };

/// Exhaustive search over all permutations, n <= 9. First optimum in
/// lexicographic order wins.
Assignment brute_force_assign(const CostMatrix& costs, Objective objective);

inline constexpr std::size_t kBruteForceMaxDim = 9;

enum class CostKind { Energy, Delay };

struct ChannelConfig {
    double payload_bytes = 0.0;
    FadingModel fading{};
    std::uint64_t seed = 0;
};

/// cost[i][k] = energy (or delay) of client i sending the payload on RB k.
CostMatrix build_cost_matrix(std::span<const LinkState> links, std::span<const RBlock> rbs,
                             const ChannelConfig& cfg, CostKind kind = CostKind::Energy);

inline CostMatrix build_energy_cost_matrix(std::span<const LinkState> links, std::span<const RBlock> rbs,
                                           const ChannelConfig& cfg) {
    return build_cost_matrix(links, rbs, cfg, CostKind::Energy);
}

} // namespace cncfl
