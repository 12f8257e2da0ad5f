#include "cncfl/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<std::string_view, Enum>, N>& table, std::string_view what) {
    for (const auto& [name, value] : table)
        if (name == s) return value;
    std::string msg = "unknown " + std::string(what) + " '" + std::string(s) + "' (expected one of:";
    for (const auto& [name, value] : table) msg += " " + std::string(name);
    throw ConfigError(msg + ")");
}

template <typename Enum, std::size_t N>
std::string_view name_of(Enum e, const std::array<std::pair<std::string_view, Enum>, N>& table) {
    for (const auto& [name, value] : table)
        if (value == e) return name;
    return "?";
}

constexpr std::array<std::pair<std::string_view, Architecture>, 2> kArchitectures{{
    {"traditional", Architecture::Traditional},
    {"p2p", Architecture::P2p},
}};
constexpr std::array<std::pair<std::string_view, Strategy>, 5> kStrategies{{
    {"cnc_optimized", Strategy::CncOptimized},
    {"fedavg_baseline", Strategy::FedavgBaseline},
    {"p2p_random_k", Strategy::P2pRandomK},
    {"p2p_full_chain", Strategy::P2pFullChain},
    {"p2p_tsp", Strategy::P2pTsp},
}};
constexpr std::array<std::pair<std::string_view, PartitionKind>, 2> kPartitions{{
    {"iid", PartitionKind::Iid},
    {"label_skew", PartitionKind::LabelSkew},
}};
constexpr std::array<std::pair<std::string_view, DatasetKind>, 2> kDatasets{{
    {"synthetic", DatasetKind::Synthetic},
    {"idx", DatasetKind::Idx},
}};
constexpr std::array<std::pair<std::string_view, RbObjective>, 2> kObjectives{{
    {"sum_energy", RbObjective::SumEnergy},
    {"max_delay", RbObjective::MaxDelay},
}};
constexpr std::array<std::pair<std::string_view, FadingKind>, 2> kFading{{
    {"deterministic", FadingKind::Deterministic},
    {"rayleigh", FadingKind::Rayleigh},
}};
constexpr std::array<std::pair<std::string_view, CostUnit>, 2> kUnits{{
    {"delay", CostUnit::Delay},
    {"energy", CostUnit::Energy},
}};

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index writes
// only its own output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Hyperparams hyper_of(const ExperimentConfig& cfg) { return {cfg.lr, cfg.batch_size, cfg.local_epoch}; }

void accumulate(MetricsRecord& rec, const MetricsRecord* prev) {
    rec.cum_sum_tx_energy_j = rec.sum_tx_energy_j + (prev ? prev->cum_sum_tx_energy_j : 0.0);
    rec.cum_max_tx_delay_s = rec.max_tx_delay_s + (prev ? prev->cum_max_tx_delay_s : 0.0);
    rec.cum_max_local_delay_s = rec.max_local_delay_s + (prev ? prev->cum_max_local_delay_s : 0.0);
    rec.cum_round_wallclock_s = rec.round_wallclock_s + (prev ? prev->cum_round_wallclock_s : 0.0);
}

std::vector<int> uniform_selection(std::size_t num_clients, std::size_t n, std::uint64_t seed, std::size_t round) {
    std::vector<int> ids(num_clients);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng = make_rng(seed, Stream::Selection, round, 0xFEDA);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(n);
    return ids;
}

std::vector<int> tiered_selection(const Population& pop, const ExperimentConfig& cfg, std::size_t n, std::size_t round,
                                  int& tier) {
    constexpr std::uint64_t kMaxAttempts = 256;
    for (std::uint64_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
        try {
            auto plan = power_tiered_sample(pop.profiles, pop.delay, cfg.m, n,
                                            derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::Selection), round, attempt}));
            tier = plan.tier_index;
            return plan.selected;
        } catch (const TierTooSmall&) {
        }
    }
    throw TierTooSmall("round " + std::to_string(round) + ": no tier with enough clients after repeated draws");
}

double mean_shard_size(const std::vector<Shard>& shards) {
    double total = 0.0;
    for (const auto& s : shards) total += static_cast<double>(s.size());
    return total / static_cast<double>(shards.size());
}

} // namespace

std::string_view to_string(Architecture a) { return name_of(a, kArchitectures); }
std::string_view to_string(Strategy s) { return name_of(s, kStrategies); }
std::string_view to_string(PartitionKind p) { return name_of(p, kPartitions); }
std::string_view to_string(DatasetKind d) { return name_of(d, kDatasets); }
std::string_view to_string(RbObjective o) { return name_of(o, kObjectives); }
std::string_view to_string(FadingKind f) { return name_of(f, kFading); }
std::string_view to_string(CostUnit u) { return name_of(u, kUnits); }

Architecture parse_architecture(std::string_view s) { return parse_enum(s, kArchitectures, "architecture"); }
Strategy parse_strategy(std::string_view s) { return parse_enum(s, kStrategies, "strategy"); }
PartitionKind parse_partition(std::string_view s) { return parse_enum(s, kPartitions, "partition"); }
DatasetKind parse_dataset_kind(std::string_view s) { return parse_enum(s, kDatasets, "dataset"); }
RbObjective parse_rb_objective(std::string_view s) { return parse_enum(s, kObjectives, "rb objective"); }
FadingKind parse_fading(std::string_view s) { return parse_enum(s, kFading, "fading"); }
CostUnit parse_cost_unit(std::string_view s) { return parse_enum(s, kUnits, "cost unit"); }

bool is_p2p_strategy(Strategy s) {
    return s == Strategy::P2pRandomK || s == Strategy::P2pFullChain || s == Strategy::P2pTsp;
}

std::size_t ExperimentConfig::clients_per_round() const {
    return static_cast<std::size_t>(std::floor(cfraction * static_cast<double>(num_clients) + 1e-9));
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (num_clients < 1) fail("num_clients must be at least 1");
    if (!(cfraction > 0.0 && cfraction <= 1.0)) fail("cfraction must lie in (0, 1]");
    if (global_epoch < 1) fail("global_epoch must be at least 1");
    if (local_epoch < 1) fail("local_epoch must be at least 1");
    if (batch_size < 1) fail("batch_size must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
    if (threads < 1) fail("threads must be at least 1");

    if (architecture == Architecture::Traditional) {
        if (is_p2p_strategy(strategy)) fail("strategy " + std::string(to_string(strategy)) + " requires architecture=p2p");
        const std::size_t n = clients_per_round();
        if (n < 1) fail("cfraction * num_clients < 1: no client would be selected");
        if (m < 1 || m > num_clients) fail("tier count m must lie in [1, num_clients]");
        const std::size_t largest_tier = (num_clients + m - 1) / m;
        if (strategy == Strategy::CncOptimized && n > largest_tier)
            fail("clients per round (" + std::to_string(n) + ") exceeds the largest tier (" + std::to_string(largest_tier) + ")");
        if (channel.num_rbs != 0 && channel.num_rbs < n)
            fail("num_rbs (" + std::to_string(channel.num_rbs) + ") is smaller than clients per round (" + std::to_string(n) + ")");
    } else {
        if (strategy == Strategy::FedavgBaseline) fail("fedavg_baseline requires architecture=traditional");
        if (strategy == Strategy::CncOptimized && (p2p.subsets < 1 || p2p.subsets > num_clients))
            fail("subsets E must lie in [1, num_clients]");
        if (strategy == Strategy::P2pRandomK && (p2p.chain_k < 1 || p2p.chain_k > num_clients))
            fail("chain_k must lie in [1, num_clients]");
        if (strategy == Strategy::P2pTsp && num_clients > kHeldKarpMaxNodes)
            fail("p2p_tsp supports at most " + std::to_string(kHeldKarpMaxNodes) + " clients");
        if (p2p.matrix_file.empty() && (!(p2p.cost_low >= 0.0) || !(p2p.cost_high > p2p.cost_low)))
            fail("p2p cost range must satisfy 0 <= cost_low < cost_high");
        if (!(p2p.unreachable_prob >= 0.0 && p2p.unreachable_prob < 1.0)) fail("p2p unreachable_prob must lie in [0, 1)");
        if (p2p.subset_divisor < 1) fail("subset_divisor must be at least 1");
    }

    if (!(channel.bandwidth_hz > 0.0)) fail("bandwidth_hz must be positive");
    if (!(channel.tx_power_w > 0.0)) fail("tx_power_w must be positive");
    if (!(channel.interference_low_w >= 0.0) || channel.interference_high_w < channel.interference_low_w)
        fail("interference bounds must satisfy 0 <= low <= high");
    if (!(channel.distance_max_m > 0.0)) fail("distance_max_m must be positive");
    if (!(channel.rayleigh_param > 0.0)) fail("rayleigh_param must be positive");
    if (!(channel.payload_mb >= 0.0)) fail("payload_mb must be non-negative");
    if (channel.fading == FadingKind::Rayleigh && channel.mc_samples < 1) fail("mc_samples must be at least 1");

    if (dataset.kind == DatasetKind::Synthetic) {
        if (dataset.dim < 1) fail("dataset dim must be at least 1");
        if (dataset.classes < 2) fail("dataset classes must be at least 2");
        if (!(dataset.separation >= 0.0)) fail("separation must be non-negative");
        const auto train = static_cast<double>(dataset.samples) * (1.0 - dataset.test_fraction);
        if (train < static_cast<double>(num_clients)) fail("too few training samples for the number of clients");
    } else if (dataset.idx_images.empty() || dataset.idx_labels.empty()) {
        fail("dataset=idx requires idx_images and idx_labels");
    }
    if (!(dataset.test_fraction >= 0.0 && dataset.test_fraction < 1.0)) fail("test_fraction must lie in [0, 1)");
    if (compute.capacity_levels.empty()) fail("capacity_levels must not be empty");
    for (double c : compute.capacity_levels)
        if (!(c > 0.0)) fail("capacity levels must be positive");
    if (compute.alpha < 0.0) fail("alpha must be non-negative (0 derives it)");
    if (!(compute.reference_local_delay_s > 0.0)) fail("reference_local_delay_s must be positive");
}

std::vector<std::string> preset_names() { return {"Pr1", "Pr2", "Pr3", "Pr4", "Pr5", "Pr6"}; }

ExperimentConfig make_preset(std::string_view name) {
    struct Row {
        std::string_view name;
        std::size_t clients;
        double cfraction;
        std::size_t local_epoch;
    };
    static constexpr std::array<Row, 6> kRows{{
        {"Pr1", 100, 0.1, 1},
        {"Pr2", 100, 0.1, 5},
        {"Pr3", 100, 0.2, 1},
        {"Pr4", 100, 0.2, 5},
        {"Pr5", 60, 0.1, 1},
        {"Pr6", 60, 0.1, 5},
    }};
    for (const auto& r : kRows) {
        if (r.name != name) continue;
        ExperimentConfig cfg;
        cfg.preset = std::string(name);
        cfg.num_clients = r.clients;
        cfg.cfraction = r.cfraction;
        cfg.local_epoch = r.local_epoch;
        cfg.global_epoch = r.clients == 100 ? 300 : 250;
        return cfg;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected Pr1..Pr6)");
}

Population build_population(const ExperimentConfig& cfg) {
    cfg.validate();
    Population pop;
    const auto& ds = cfg.dataset;

    std::vector<Sample> train;
    if (ds.kind == DatasetKind::Synthetic) {
        auto all = gen_synthetic(cfg.seed, ds.samples, ds.dim, ds.classes, ds.separation);
        auto split = split_holdout(all, ds.test_fraction, cfg.seed);
        train = std::move(split.train);
        pop.test = std::move(split.test);
    } else {
        train = load_idx(ds.idx_images, ds.idx_labels);
        if (!ds.idx_test_images.empty()) {
            pop.test = load_idx(ds.idx_test_images, ds.idx_test_labels);
        } else {
            auto split = split_holdout(train, ds.test_fraction, cfg.seed);
            train = std::move(split.train);
            pop.test = std::move(split.test);
        }
    }
    if (train.size() < cfg.num_clients) throw ConfigError("too few training samples for the number of clients");

    if (ds.partition == PartitionKind::LabelSkew)
        pop.shards = partition_label_skew(train, cfg.num_clients, ds.labels_per_client, cfg.seed);
    else
        pop.shards = partition_weighted(train, cfg.num_clients, ds.shard_multipliers, cfg.seed);
    for (const auto& s : pop.shards)
        if (s.samples.empty()) throw ConfigError("client " + std::to_string(s.client_id) + " received an empty shard");

    const auto& levels = cfg.compute.capacity_levels;
    for (std::size_t i = 0; i < cfg.num_clients; ++i) {
        const std::size_t level = i * levels.size() / cfg.num_clients;
        pop.profiles.push_back({static_cast<int>(i), levels[level], pop.shards[i].size()});
    }
    pop.delay.local_epochs = cfg.local_epoch;
    pop.delay.alpha = cfg.compute.alpha > 0.0 ? cfg.compute.alpha
                                              : cfg.compute.reference_local_delay_s / mean_shard_size(pop.shards);

    const std::size_t input_dim = train.front().features.size();
    const std::size_t classes = std::max(count_classes(train), std::size_t{2});
    pop.initial_model = init_model(cfg.seed, input_dim, classes,
                                   ds.hidden ? std::optional<std::size_t>(ds.hidden) : std::nullopt);

    if (cfg.architecture == Architecture::P2p) {
        if (!cfg.p2p.matrix_file.empty()) {
            pop.consumption = load_consumption_matrix(cfg.p2p.matrix_file, cfg.p2p.unit);
            if (pop.consumption.n != cfg.num_clients)
                throw ConfigError("consumption matrix has " + std::to_string(pop.consumption.n) + " clients, expected " +
                                  std::to_string(cfg.num_clients));
        } else {
            pop.consumption = gen_consumption_matrix(cfg.seed, cfg.num_clients, cfg.p2p.cost_low, cfg.p2p.cost_high,
                                                     cfg.p2p.unreachable_prob, cfg.p2p.unit);
        }
    }
    return pop;
}

std::vector<MetricsRecord> run_traditional(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.architecture != Architecture::Traditional) throw ConfigError("run_traditional needs architecture=traditional");
    const Population pop = build_population(cfg);
    const std::size_t n = cfg.clients_per_round();
    const Hyperparams hyper = hyper_of(cfg);
    const auto& ch = cfg.channel;
    const double noise = dbm_per_hz_to_w_per_hz(ch.noise_psd_dbm_hz);
    const auto payload = static_cast<double>(param_size_bytes(
        pop.initial_model, ch.payload_mb > 0.0 ? std::optional(megabytes_to_bytes(ch.payload_mb)) : std::nullopt));
    const FadingModel fading{ch.fading, ch.mc_samples};

    ParamVector global = pop.initial_model;
    std::vector<MetricsRecord> out;
    for (std::size_t round = 1; round <= cfg.global_epoch; ++round) {
        MetricsRecord rec;
        rec.round = round;
        rec.strategy = cfg.strategy;

        // Client selection.
        std::optional<std::vector<int>> forced;
        if (opts.forced_selection) forced = opts.forced_selection(round);
        if (forced) {
            rec.plan.selected = *forced;
            if (rec.plan.selected.empty()) throw InvalidInput("forced selection is empty");
        } else if (cfg.strategy == Strategy::CncOptimized) {
            rec.plan.selected = tiered_selection(pop, cfg, n, round, rec.plan.tier_index);
        } else {
            rec.plan.selected = uniform_selection(cfg.num_clients, n, cfg.seed, round);
        }
        const auto& sel = rec.plan.selected;
        const std::size_t rb_count = ch.num_rbs ? ch.num_rbs : sel.size();
        if (rb_count < sel.size()) throw ConfigError("fewer RBs than selected clients");

        // Channel state for this round: per-RB interference, per-client distance.
        std::vector<RBlock> rbs(rb_count);
        {
            Rng rng = make_rng(cfg.seed, Stream::Interference, round);
            for (std::size_t k = 0; k < rb_count; ++k)
                rbs[k] = {static_cast<int>(k), ch.bandwidth_hz,
                          ch.interference_low_w == ch.interference_high_w
                              ? ch.interference_low_w
                              : uniform(rng, ch.interference_low_w, ch.interference_high_w)};
        }
        std::vector<double> distance(cfg.num_clients);
        {
            Rng rng = make_rng(cfg.seed, Stream::Distance, round);
            for (double& d : distance) {
                do d = uniform(rng, 0.0, ch.distance_max_m);
                while (d <= 0.0);
            }
        }
        std::vector<LinkState> links;
        for (int id : sel)
            links.push_back({distance.at(static_cast<std::size_t>(id)), ch.rayleigh_param, ch.tx_power_w, noise});

        const ChannelConfig chcfg{payload, fading, derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::Fading), round})};
        const CostMatrix energy = build_cost_matrix(links, rbs, chcfg, CostKind::Energy);
        const CostMatrix delay = build_cost_matrix(links, rbs, chcfg, CostKind::Delay);

        // RB assignment.
        std::vector<int> rb_of_row(sel.size());
        if (cfg.strategy == Strategy::CncOptimized) {
            const CostMatrix padded = pad_square(cfg.objective == RbObjective::SumEnergy ? energy : delay);
            const Assignment a = cfg.objective == RbObjective::SumEnergy ? hungarian_assign(padded) : bottleneck_assign(padded);
            if (opts.oracle_check && padded.rows <= 7) {
                const Assignment ref = brute_force_assign(
                    padded, cfg.objective == RbObjective::SumEnergy ? Objective::Sum : Objective::Max);
                if (std::abs(ref.cost - a.cost) > 1e-12 * (1.0 + std::abs(ref.cost)))
                    throw std::logic_error("round " + std::to_string(round) + ": RB assignment disagrees with exhaustive search");
            }
            std::copy_n(a.col_of_row.begin(), sel.size(), rb_of_row.begin());
        } else {
            std::vector<int> perm(rb_count);
            std::iota(perm.begin(), perm.end(), 0);
            Rng rng = make_rng(cfg.seed, Stream::BaselineRb, round);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::copy_n(perm.begin(), sel.size(), rb_of_row.begin());
        }

        std::vector<ComputeProfile> chosen;
        for (std::size_t i = 0; i < sel.size(); ++i) {
            const auto id = static_cast<std::size_t>(sel[i]);
            const auto k = static_cast<std::size_t>(rb_of_row[i]);
            rec.plan.rb_of[sel[i]] = rb_of_row[i];
            rec.sum_tx_energy_j += energy.at(i, k);
            rec.max_tx_delay_s = std::max(rec.max_tx_delay_s, delay.at(i, k));
            chosen.push_back(pop.profiles.at(id));
            rec.max_local_delay_s = std::max(rec.max_local_delay_s, local_delay(pop.profiles[id], pop.delay));
        }
        rec.delay_spread_s = delay_spread(chosen, pop.delay);
        rec.round_wallclock_s = rec.max_local_delay_s + rec.max_tx_delay_s;

        // Local training and data-weighted aggregation.
        if (!cfg.metrics_only) {
            const std::uint64_t round_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::LocalTrain), round});
            std::vector<ParamVector> locals(sel.size());
            std::vector<double> weights(sel.size());
            parallel_for(sel.size(), cfg.threads, [&](std::size_t i) {
                const auto& shard = pop.shards.at(static_cast<std::size_t>(sel[i]));
                locals[i] = sgd_local_train(global, shard.samples, hyper, client_seed(round_seed, shard.client_id));
                weights[i] = static_cast<double>(shard.size());
            });
            global = weighted_average(locals, weights);
            rec.test_accuracy = evaluate(global, pop.test);
            if (opts.on_model) opts.on_model(round, global);
        }

        accumulate(rec, out.empty() ? nullptr : &out.back());
        if (opts.on_round) opts.on_round(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<MetricsRecord> run_p2p(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.architecture != Architecture::P2p) throw ConfigError("run_p2p needs architecture=p2p");
    const Population pop = build_population(cfg);
    const Hyperparams hyper = hyper_of(cfg);

    ParamVector global = pop.initial_model;
    std::vector<MetricsRecord> out;
    for (std::size_t round = 1; round <= cfg.global_epoch; ++round) {
        MetricsRecord rec;
        rec.round = round;
        rec.strategy = cfg.strategy;

        std::vector<std::vector<int>> subsets;
        switch (cfg.strategy) {
        case Strategy::CncOptimized:
            subsets = partition_balanced(pop.profiles, pop.delay, cfg.p2p.subsets);
            break;
        case Strategy::P2pRandomK: {
            std::vector<int> ids(cfg.num_clients);
            std::iota(ids.begin(), ids.end(), 0);
            Rng rng = make_rng(cfg.seed, Stream::P2pRandom, round);
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(cfg.p2p.chain_k);
            std::sort(ids.begin(), ids.end());
            subsets.push_back(std::move(ids));
            break;
        }
        case Strategy::P2pFullChain:
        case Strategy::P2pTsp: {
            std::vector<int> ids(cfg.num_clients);
            std::iota(ids.begin(), ids.end(), 0);
            subsets.push_back(std::move(ids));
            break;
        }
        case Strategy::FedavgBaseline:
            throw ConfigError("fedavg_baseline is not a p2p strategy");
        }

        // Path planning per subset, then chain cost accounting.
        std::vector<double> local_sum(subsets.size(), 0.0), hop_sum(subsets.size(), 0.0);
        for (std::size_t e = 0; e < subsets.size(); ++e) {
            const ConsumptionMatrix sub = pop.consumption.submatrix(subsets[e]);
            PathResult pr;
            try {
                pr = cfg.strategy == Strategy::P2pTsp ? held_karp_path(sub) : greedy_backtrack_path(sub);
            } catch (const NoFeasiblePath& err) {
                throw NoFeasiblePath("round " + std::to_string(round) + ", subset " + std::to_string(e) + ": " + err.what());
            }
            std::vector<int> chain;
            for (int local : pr.path) chain.push_back(subsets[e][static_cast<std::size_t>(local)]);
            for (int id : chain) local_sum[e] += local_delay(pop.profiles.at(static_cast<std::size_t>(id)), pop.delay);
            hop_sum[e] = pr.cost;
            rec.chains.push_back(std::move(chain));
        }

        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < subsets.size(); ++e) {
            const bool hops_are_time = cfg.p2p.unit == CostUnit::Delay;
            if (hops_are_time)
                rec.max_tx_delay_s = std::max(rec.max_tx_delay_s, hop_sum[e]);
            else
                rec.sum_tx_energy_j += hop_sum[e];
            rec.max_local_delay_s = std::max(rec.max_local_delay_s, local_sum[e]);
            lo = std::min(lo, local_sum[e]);
            rec.round_wallclock_s = std::max(rec.round_wallclock_s, local_sum[e] + (hops_are_time ? hop_sum[e] : 0.0));
        }
        rec.delay_spread_s = rec.max_local_delay_s - lo;

        if (!cfg.metrics_only) {
            const std::uint64_t round_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::LocalTrain), round});
            std::vector<ParamVector> submodels(rec.chains.size());
            std::vector<double> volume(rec.chains.size(), 0.0);
            parallel_for(rec.chains.size(), cfg.threads, [&](std::size_t e) {
                std::vector<Shard> shards;
                for (int id : rec.chains[e]) {
                    shards.push_back(pop.shards.at(static_cast<std::size_t>(id)));
                    volume[e] += static_cast<double>(shards.back().size());
                }
                submodels[e] = chain_train(global, shards, hyper, round_seed);
            });
            global = aggregate_subsets(submodels, volume);
            rec.test_accuracy = evaluate(global, pop.test);
            if (opts.on_model) opts.on_model(round, global);
        }

        accumulate(rec, out.empty() ? nullptr : &out.back());
        if (opts.on_round) opts.on_round(rec);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    return cfg.architecture == Architecture::Traditional ? run_traditional(cfg, opts) : run_p2p(cfg, opts);
}

std::vector<SweepRow> sweep_clients(const ExperimentConfig& cfg, std::span<const std::size_t> client_counts,
                                    std::span<const Strategy> strategies) {
    if (cfg.architecture != Architecture::P2p) throw ConfigError("sweep_clients needs architecture=p2p");
    std::vector<SweepRow> rows;
    for (std::size_t count : client_counts) {
        for (Strategy s : strategies) {
            ExperimentConfig c = cfg;
            c.num_clients = count;
            c.strategy = s;
            c.p2p.subsets = std::max<std::size_t>(1, count / cfg.p2p.subset_divisor);
            c.p2p.chain_k = std::min(cfg.p2p.chain_k, count);
            const auto records = run_p2p(c);
            double total = 0.0;
            for (const auto& r : records) total += r.round_wallclock_s;
            rows.push_back({count, s, total / static_cast<double>(records.size())});
        }
    }
    return rows;
}

double evaluate(const ParamVector& model, std::span<const Sample> test) {
    if (test.empty()) throw InvalidInput("cannot evaluate on an empty test set");
    std::size_t hits = 0;
    for (const auto& s : test)
        if (predict(model, s.features) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

} // namespace cncfl
