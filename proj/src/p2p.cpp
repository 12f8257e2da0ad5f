#include "cncfl/p2p.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

ConsumptionMatrix::ConsumptionMatrix(std::size_t size, double fill, CostUnit u) : n(size), cost(size * size, fill), unit(u) {
    for (std::size_t i = 0; i < n; ++i) at(i, i) = kUnreachable;
}

ConsumptionMatrix ConsumptionMatrix::submatrix(std::span<const int> members) const {
    ConsumptionMatrix out(members.size(), kUnreachable, unit);
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = 0; b < members.size(); ++b) {
            const auto i = static_cast<std::size_t>(members[a]);
            const auto j = static_cast<std::size_t>(members[b]);
            if (i >= n || j >= n) throw InvalidInput("submatrix member out of range");
            if (a != b) out.at(a, b) = at(i, j);
        }
    }
    return out;
}

ConsumptionMatrix gen_consumption_matrix(std::uint64_t seed, std::size_t n, double lo, double hi,
                                         double unreachable_prob, CostUnit unit) {
    if (!(lo >= 0.0) || !(hi > lo)) throw InvalidInput("consumption cost range must satisfy 0 <= lo < hi");
    if (!(unreachable_prob >= 0.0 && unreachable_prob < 1.0))
        throw InvalidInput("unreachable probability must lie in [0, 1)");
    ConsumptionMatrix g(n, kUnreachable, unit);
    Rng rng = make_rng(seed, Stream::P2pMatrix);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double c = uniform(rng, lo, hi);
            const bool cut = uniform(rng, 0.0, 1.0) < unreachable_prob;
            g.at(i, j) = cut ? kUnreachable : c;
        }
    }
    return g;
}

ConsumptionMatrix parse_consumption_matrix(std::istream& in, CostUnit unit) {
    std::size_t n = 0;
    if (!(in >> n)) throw ParseError("consumption matrix: missing size on first line");
    ConsumptionMatrix g(n, kUnreachable, unit);
    std::string tok;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(in >> tok))
                throw ParseError("consumption matrix: expected " + std::to_string(n * n) + " values, file ended at row " +
                                 std::to_string(i) + " column " + std::to_string(j));
            double v = 0.0;
            if (tok == "inf" || tok == "INF" || tok == "Inf") {
                v = kUnreachable;
            } else {
                const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || ptr != tok.data() + tok.size() || !(v >= 0.0))
                    throw ParseError("consumption matrix: bad value '" + tok + "' at row " + std::to_string(i) +
                                     " column " + std::to_string(j));
            }
            if (i != j) g.at(i, j) = v;
        }
    }
    if (in >> tok) throw ParseError("consumption matrix: trailing data after " + std::to_string(n) + " rows");
    return g;
}

ConsumptionMatrix load_consumption_matrix(const std::string& path, CostUnit unit) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open consumption matrix " + path);
    return parse_consumption_matrix(in, unit);
}

void write_consumption_matrix(std::ostream& out, const ConsumptionMatrix& g) {
    out << g.n << '\n';
    char buf[32];
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t j = 0; j < g.n; ++j) {
            if (j) out << ' ';
            if (g.at(i, j) == kUnreachable) {
                out << "inf";
            } else {
                const auto r = std::to_chars(buf, buf + sizeof buf, g.at(i, j));
                out.write(buf, r.ptr - buf);
            }
        }
        out << '\n';
    }
}

std::vector<std::vector<int>> partition_balanced(std::span<const ComputeProfile> profiles, const DelayModel& dm,
                                                 std::size_t subsets) {
    if (subsets < 1) throw InvalidInput("subset count E must be at least 1");
    if (subsets > profiles.size())
        throw InvalidInput("subset count E = " + std::to_string(subsets) + " exceeds client count " +
                           std::to_string(profiles.size()));
    std::vector<double> t(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) t[i] = local_delay(profiles[i], dm);
    std::vector<std::size_t> order(profiles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (t[a] != t[b]) return t[a] > t[b];
        return profiles[a].client_id < profiles[b].client_id;
    });

    std::vector<std::vector<int>> out(subsets);
    std::vector<double> load(subsets, 0.0);
    for (std::size_t i : order) {
        const auto e = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
        out[e].push_back(profiles[i].client_id);
        load[e] += t[i];
    }
    return out;
}

double path_cost(const ConsumptionMatrix& g, std::span<const int> path) {
    if (path.size() != g.n) throw InvalidPath("path length " + std::to_string(path.size()) + " != matrix size " + std::to_string(g.n));
    std::vector<char> seen(g.n, 0);
    for (int v : path) {
        if (v < 0 || static_cast<std::size_t>(v) >= g.n) throw InvalidPath("path node " + std::to_string(v) + " out of range");
        if (seen[static_cast<std::size_t>(v)]++) throw InvalidPath("path visits node " + std::to_string(v) + " twice");
    }
    double total = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const auto i = static_cast<std::size_t>(path[k - 1]);
        const auto j = static_cast<std::size_t>(path[k]);
        if (!g.reachable(i, j)) throw InvalidPath("hop " + std::to_string(i) + "->" + std::to_string(j) + " is unreachable");
        total += g.at(i, j);
    }
    return total;
}

PathResult greedy_backtrack_path(const ConsumptionMatrix& g, std::size_t max_expansions) {
    if (g.n == 0) throw InvalidInput("path search needs at least one client");
    if (g.n == 1) return {{0}, 0.0};

    // One frame per node on the current partial path: its neighbours ordered by
    // (cost, index) and the position of the next one to try.
    struct Frame {
        int node;
        std::vector<int> options;
        std::size_t next = 0;
    };
    auto options_from = [&](int node, const std::vector<char>& visited) {
        std::vector<int> opts;
        for (std::size_t j = 0; j < g.n; ++j)
            if (!visited[j] && g.reachable(static_cast<std::size_t>(node), j)) opts.push_back(static_cast<int>(j));
        std::stable_sort(opts.begin(), opts.end(), [&](int a, int b) {
            return g.at(static_cast<std::size_t>(node), static_cast<std::size_t>(a)) <
                   g.at(static_cast<std::size_t>(node), static_cast<std::size_t>(b));
        });
        return opts;
    };

    PathResult best{{}, std::numeric_limits<double>::infinity()};
    bool gave_up = false;
    for (std::size_t start = 0; start < g.n; ++start) {
        std::vector<char> visited(g.n, 0);
        visited[start] = 1;
        std::vector<Frame> stack;
        stack.push_back({static_cast<int>(start), options_from(static_cast<int>(start), visited)});
        std::size_t expansions = 0;
        bool found = false;
        while (!stack.empty()) {
            Frame& top = stack.back();
            if (top.next == top.options.size()) {
                visited[static_cast<std::size_t>(top.node)] = 0;
                stack.pop_back();
                continue;
            }
            if (++expansions > max_expansions) {
                gave_up = true;
                break;
            }
            const int nxt = top.options[top.next++];
            visited[static_cast<std::size_t>(nxt)] = 1;
            stack.push_back({nxt, options_from(nxt, visited)});
            if (stack.size() == g.n) {
                found = true;
                break;
            }
        }
        if (!found) continue;
        std::vector<int> path;
        path.reserve(g.n);
        for (const auto& f : stack) path.push_back(f.node);
        const double c = path_cost(g, path);
        if (c < best.cost) best = {std::move(path), c};
    }
    if (best.path.empty()) {
        if (gave_up) throw NoFeasiblePath("no feasible path found within the search budget");
        throw NoFeasiblePath("no feasible path: the reachability graph has no Hamiltonian path");
    }
    return best;
}

PathResult held_karp_path(const ConsumptionMatrix& g) {
    const std::size_t n = g.n;
    if (n == 0) throw InvalidInput("path search needs at least one client");
    if (n > kHeldKarpMaxNodes)
        throw InvalidInput("Held-Karp refused for n = " + std::to_string(n) + " (limit " + std::to_string(kHeldKarpMaxNodes) + ")");
    if (n == 1) return {{0}, 0.0};

    // rest[mask * n + j]: cheapest way to visit every node outside `mask`,
    // starting at j, when `mask` (which contains j) is already visited.
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t full = (std::size_t{1} << n) - 1;
    std::vector<double> rest((full + 1) * n, inf);
    for (std::size_t j = 0; j < n; ++j) rest[full * n + j] = 0.0;
    for (std::size_t mask = full; mask-- > 1;) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!(mask >> j & 1)) continue;
            double best = inf;
            for (std::size_t k = 0; k < n; ++k) {
                if ((mask >> k & 1) || !g.reachable(j, k)) continue;
                best = std::min(best, g.at(j, k) + rest[(mask | (std::size_t{1} << k)) * n + k]);
            }
            rest[mask * n + j] = best;
        }
    }

    double optimum = inf;
    for (std::size_t j = 0; j < n; ++j) optimum = std::min(optimum, rest[(std::size_t{1} << j) * n + j]);
    if (optimum == inf) throw NoFeasiblePath("no feasible path: the reachability graph has no Hamiltonian path");
    const double tol = 1e-12 * (1.0 + std::abs(optimum));

    // Reconstruct the lexicographically smallest optimal path.
    std::vector<int> path;
    std::size_t cur = 0;
    for (; cur < n; ++cur)
        if (rest[(std::size_t{1} << cur) * n + cur] <= optimum + tol) break;
    std::size_t mask = std::size_t{1} << cur;
    path.push_back(static_cast<int>(cur));
    while (mask != full) {
        const double target = rest[mask * n + cur];
        std::size_t pick = n;
        for (std::size_t k = 0; k < n; ++k) {
            if ((mask >> k & 1) || !g.reachable(cur, k)) continue;
            if (g.at(cur, k) + rest[(mask | (std::size_t{1} << k)) * n + k] <= target + tol) {
                pick = k;
                break;
            }
        }
        if (pick == n) throw std::logic_error("held-karp: reconstruction lost the optimum");
        mask |= std::size_t{1} << pick;
        cur = pick;
        path.push_back(static_cast<int>(cur));
    }
    const double c = path_cost(g, path);
    return {std::move(path), c};
}

ParamVector chain_train(const ParamVector& model, std::span<const Shard> shards, const Hyperparams& hyper,
                        std::uint64_t seed) {
    if (shards.empty()) throw InvalidInput("chain has no clients");
    ParamVector w = model;
    for (const auto& shard : shards) w = sgd_local_train(w, shard.samples, hyper, client_seed(seed, shard.client_id));
    return w;
}

ParamVector aggregate_subsets(std::span<const ParamVector> submodels, std::span<const double> subset_data) {
    if (submodels.size() != subset_data.size()) throw InvalidInput("one data volume per sub-model is required");
    return weighted_average(submodels, subset_data);
}

} // namespace cncfl
