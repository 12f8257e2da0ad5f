#include "cncfl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

namespace {

bool is_pad(double v) { return v >= kPadSentinel; }

void require_square(const CostMatrix& m) {
    if (!m.square()) throw InvalidInput("assignment needs a square cost matrix, got " + std::to_string(m.rows) + "x" +
                                        std::to_string(m.cols));
    if (m.cost.size() != m.rows * m.cols) throw InvalidInput("cost matrix storage does not match its shape");
    for (double v : m.cost)
        if (!(v >= 0.0) || std::isnan(v) || std::isinf(v)) throw InvalidInput("cost entries must be finite and non-negative");
}

double sum_cost(const CostMatrix& m, std::span<const int> col_of_row) {
    double total = 0.0;
    for (std::size_t i = 0; i < col_of_row.size(); ++i) {
        const double v = m.at(i, static_cast<std::size_t>(col_of_row[i]));
        if (!is_pad(v)) total += v;
    }
    return total;
}

double max_cost(const CostMatrix& m, std::span<const int> col_of_row) {
    double worst = 0.0;
    for (std::size_t i = 0; i < col_of_row.size(); ++i) {
        const double v = m.at(i, static_cast<std::size_t>(col_of_row[i]));
        if (!is_pad(v)) worst = std::max(worst, v);
    }
    return worst;
}

// Potential-based O(n^3) Hungarian method on a dense n x n matrix.
// Returns the column chosen for each row.
std::vector<int> hungarian_core(const std::vector<double>& a, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j] != 0) col_of_row[p[j] - 1] = static_cast<int>(j - 1);
    return col_of_row;
}

// Optimal sum over the sub-problem rows [first, n) x `cols`.
double sub_optimum(const std::vector<double>& a, std::size_t n, std::size_t first, std::span<const std::size_t> cols) {
    const std::size_t k = cols.size();
    if (k == 0) return 0.0;
    std::vector<double> sub(k * k);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < k; ++c) sub[r * k + c] = a[(first + r) * n + cols[c]];
    const auto pick = hungarian_core(sub, k);
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) total += sub[r * k + static_cast<std::size_t>(pick[r])];
    return total;
}

// Kuhn's augmenting-path matching restricted to allowed edges.
class Matcher {
public:
    Matcher(std::size_t n, std::vector<char> allowed) : n_(n), allowed_(std::move(allowed)) {}

    // Perfect matching over rows [first, n) and the columns flagged free?
    bool perfect(std::size_t first, const std::vector<char>& col_free) {
        match_.assign(n_, -1);
        for (std::size_t r = first; r < n_; ++r) {
            seen_.assign(n_, 0);
            if (!augment(r, col_free)) return false;
        }
        return true;
    }

private:
    bool augment(std::size_t r, const std::vector<char>& col_free) {
        for (std::size_t c = 0; c < n_; ++c) {
            if (!col_free[c] || !allowed_[r * n_ + c] || seen_[c]) continue;
            seen_[c] = 1;
            if (match_[c] < 0 || augment(static_cast<std::size_t>(match_[c]), col_free)) {
                match_[c] = static_cast<int>(r);
                return true;
            }
        }
        return false;
    }

    std::size_t n_;
    std::vector<char> allowed_;
    std::vector<int> match_;
    std::vector<char> seen_;
};

std::vector<char> allowed_under(const CostMatrix& m, double threshold) {
    std::vector<char> allowed(m.cost.size());
    for (std::size_t k = 0; k < m.cost.size(); ++k) allowed[k] = (is_pad(m.cost[k]) || m.cost[k] <= threshold) ? 1 : 0;
    return allowed;
}

} // namespace

void ComputeProfile::validate() const {
    if (!(capacity > 0.0) || !std::isfinite(capacity)) throw InvalidInput("client capacity must be positive");
    if (shard_size < 1) throw InvalidInput("shard size must be at least 1");
}

void DelayModel::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be positive");
    if (local_epochs < 1) throw InvalidInput("local_epochs must be at least 1");
}

double local_delay(const ComputeProfile& profile, const DelayModel& dm) {
    profile.validate();
    dm.validate();
    return dm.alpha * static_cast<double>(dm.local_epochs) * static_cast<double>(profile.shard_size) / profile.capacity;
}

double delay_spread(std::span<const ComputeProfile> selected, const DelayModel& dm) {
    if (selected.empty()) throw InvalidInput("delay spread of an empty selection");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : selected) {
        const double t = local_delay(p, dm);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return hi - lo;
}

std::vector<std::vector<std::size_t>> split_tiers(std::span<const ComputeProfile> profiles, const DelayModel& dm,
                                                  std::size_t m) {
    if (m < 1) throw InvalidInput("tier count m must be at least 1");
    if (m > profiles.size()) throw InvalidInput("more tiers than clients");
    std::vector<double> t(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) t[i] = local_delay(profiles[i], dm);
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (t[a] != t[b]) return t[a] > t[b];
        return profiles[a].client_id < profiles[b].client_id;
    });

    std::vector<std::vector<std::size_t>> tiers(m);
    const std::size_t base = profiles.size() / m;
    const std::size_t extra = profiles.size() % m;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t len = base + (k < extra ? 1 : 0);
        tiers[k].assign(order.begin() + static_cast<std::ptrdiff_t>(pos), order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return tiers;
}

RoundPlan power_tiered_sample(std::span<const ComputeProfile> profiles, const DelayModel& dm, std::size_t m,
                              std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("must sample at least one client");
    const auto tiers = split_tiers(profiles, dm, m);
    if (n > tiers.front().size())
        throw InvalidInput("n = " + std::to_string(n) + " exceeds the largest tier (" + std::to_string(tiers.front().size()) + ")");

    std::vector<double> tier_weight(m);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t i : tiers[k]) tier_weight[k] += static_cast<double>(profiles[i].shard_size);

    Rng rng = make_rng(seed, Stream::Selection);
    std::discrete_distribution<std::size_t> pick_tier(tier_weight.begin(), tier_weight.end());
    const std::size_t k = pick_tier(rng);
    if (n > tiers[k].size())
        throw TierTooSmall("tier " + std::to_string(k) + " holds " + std::to_string(tiers[k].size()) +
                           " clients, fewer than n = " + std::to_string(n));

    RoundPlan plan;
    plan.tier_index = static_cast<int>(k);
    std::vector<std::size_t> pool = tiers[k];
    for (std::size_t draw = 0; draw < n; ++draw) {
        std::vector<double> w(pool.size());
        for (std::size_t j = 0; j < pool.size(); ++j) w[j] = static_cast<double>(profiles[pool[j]].shard_size);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        const std::size_t j = pick(rng);
        plan.selected.push_back(profiles[pool[j]].client_id);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return plan;
}

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    for (const auto& row : init) {
        if (row.size() != cols) throw InvalidInput("ragged cost matrix literal");
        cost.insert(cost.end(), row.begin(), row.end());
    }
}

CostMatrix pad_square(const CostMatrix& m) {
    const std::size_t n = std::max(m.rows, m.cols);
    CostMatrix out(n, n, kPadSentinel);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j);
    return out;
}

Assignment hungarian_assign(const CostMatrix& costs) {
    require_square(costs);
    const std::size_t n = costs.rows;
    if (n == 0) return {};

    // Row reduction keeps the optimum and flattens all-sentinel padding rows to
    // zero, so potentials stay at the scale of the real costs.
    std::vector<double> a = costs.cost;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = *std::min_element(a.begin() + static_cast<std::ptrdiff_t>(i * n),
                                            a.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] -= lo;
    }

    // Fix rows in order, taking the smallest column that still admits an optimum.
    std::vector<std::size_t> free_cols(n);
    std::iota(free_cols.begin(), free_cols.end(), std::size_t{0});
    std::vector<int> col_of_row(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const double best = sub_optimum(a, n, i, free_cols);
        const double tol = 1e-9 * (1.0 + std::abs(best));
        std::vector<std::size_t> rest;
        for (std::size_t idx = 0; idx < free_cols.size(); ++idx) {
            const std::size_t c = free_cols[idx];
            rest.assign(free_cols.begin(), free_cols.end());
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(idx));
            const double value = a[i * n + c] + sub_optimum(a, n, i + 1, rest);
            if (value <= best + tol) {
                col_of_row[i] = static_cast<int>(c);
                free_cols = std::move(rest);
                break;
            }
        }
        if (col_of_row[i] < 0) throw std::logic_error("hungarian: no column reproduces the optimum");
    }
    return {col_of_row, sum_cost(costs, col_of_row)};
}

Assignment bottleneck_assign(const CostMatrix& costs) {
    require_square(costs);
    const std::size_t n = costs.rows;
    if (n == 0) return {};

    std::vector<double> levels;
    for (double v : costs.cost)
        if (!is_pad(v)) levels.push_back(v);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    const std::vector<char> all_free(n, 1);
    double threshold = 0.0;
    if (!levels.empty()) {
        std::size_t lo = 0;
        std::size_t hi = levels.size() - 1;
        if (!Matcher(n, allowed_under(costs, levels[hi])).perfect(0, all_free))
            throw std::logic_error("bottleneck: full matrix admits no perfect matching");
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (Matcher(n, allowed_under(costs, levels[mid])).perfect(0, all_free))
                hi = mid;
            else
                lo = mid + 1;
        }
        threshold = levels[lo];
    }

    const auto allowed = allowed_under(costs, threshold);
    std::vector<char> col_free(n, 1);
    std::vector<int> col_of_row(n, -1);
    // Rows above the current one are fixed: model that by marking their columns taken
    // and asking for a perfect matching of the remaining rows only.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n; ++c) {
            if (!col_free[c] || !allowed[i * n + c]) continue;
            col_free[c] = 0;
            if (Matcher(n, allowed).perfect(i + 1, col_free)) {
                col_of_row[i] = static_cast<int>(c);
                break;
            }
            col_free[c] = 1;
        }
        if (col_of_row[i] < 0) throw std::logic_error("bottleneck: lexicographic completion failed");
    }
    return {col_of_row, max_cost(costs, col_of_row)};
}

Assignment brute_force_assign(const CostMatrix& costs, Objective objective) {
    require_square(costs);
    const std::size_t n = costs.rows;
    if (n > kBruteForceMaxDim)
        throw InvalidInput("brute-force assignment refused for n = " + std::to_string(n) + " (limit " +
                           std::to_string(kBruteForceMaxDim) + ")");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best{perm, std::numeric_limits<double>::infinity()};
    do {
        const double v = objective == Objective::Sum ? sum_cost(costs, perm) : max_cost(costs, perm);
        if (v < best.cost) best = {perm, v};
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (n == 0) best.cost = 0.0;
    return best;
}

CostMatrix build_cost_matrix(std::span<const LinkState> links, std::span<const RBlock> rbs, const ChannelConfig& cfg,
                             CostKind kind) {
    CostMatrix m(links.size(), rbs.size());
    for (std::size_t i = 0; i < links.size(); ++i) {
        for (std::size_t k = 0; k < rbs.size(); ++k) {
            const double rate = uplink_rate(links[i], rbs[k], cfg.fading, derive_seed(cfg.seed, {i, k}));
            const double delay = tx_delay(cfg.payload_bytes, rate);
            m.at(i, k) = kind == CostKind::Energy ? tx_energy(links[i], delay) : delay;
        }
    }
    return m;
}

} // namespace cncfl
