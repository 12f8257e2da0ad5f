#pragma once

// End-to-end experiment loops for the server-centric (traditional) and the
// chain (peer-to-peer) architectures, plus the FedAvg and chain baselines.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cncfl/channel.hpp"
#include "cncfl/data.hpp"
#include "cncfl/model.hpp"
#include "cncfl/p2p.hpp"
#include "cncfl/scheduler.hpp"

namespace cncfl {

enum class Architecture { Traditional, P2p };

enum class Strategy { CncOptimized, FedavgBaseline, P2pRandomK, P2pFullChain, P2pTsp };

enum class PartitionKind { Iid, LabelSkew };

enum class DatasetKind { Synthetic, Idx };

// Which RB objective the optimized scheduler solves: minimum total energy
// (Hungarian) or minimum worst-case transmission delay (bottleneck).
enum class RbObjective { SumEnergy, MaxDelay };

std::string_view to_string(Architecture a);
std::string_view to_string(Strategy s);
std::string_view to_string(PartitionKind p);
std::string_view to_string(DatasetKind d);
std::string_view to_string(RbObjective o);
std::string_view to_string(FadingKind f);
std::string_view to_string(CostUnit u);

Architecture parse_architecture(std::string_view s);
Strategy parse_strategy(std::string_view s);
PartitionKind parse_partition(std::string_view s);
DatasetKind parse_dataset_kind(std::string_view s);
RbObjective parse_rb_objective(std::string_view s);
FadingKind parse_fading(std::string_view s);
CostUnit parse_cost_unit(std::string_view s);

bool is_p2p_strategy(Strategy s);

struct ChannelParams {
    double noise_psd_dbm_hz = -174.0;
    double bandwidth_hz = 1e6;
    double tx_power_w = 0.01;
    double interference_low_w = 1e-8;
    double interference_high_w = 1.1e-8;
    double distance_max_m = 500.0;
    double rayleigh_param = 1.0;
    double payload_mb = 0.606;
    FadingKind fading = FadingKind::Deterministic;
    int mc_samples = 1000;
    std::size_t num_rbs = 0;   // 0: one RB per selected client
};

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Synthetic;
    std::size_t samples = 6000;
    std::size_t dim = 10;
    std::size_t classes = 10;
    double separation = 6.0;
    double test_fraction = 0.2;
    PartitionKind partition = PartitionKind::Iid;
    std::size_t labels_per_client = 2;
    std::vector<double> shard_multipliers;   // empty: equal shards
    std::size_t hidden = 0;                  // 0: softmax regression
    std::string idx_images, idx_labels, idx_test_images, idx_test_labels;
};

struct ComputeSpec {
    std::vector<double> capacity_levels{1.0, 2.0, 3.0, 4.0};
    double alpha = 0.0;                      // 0: derive from reference_local_delay_s
    double reference_local_delay_s = 4.0;    // 1 epoch, average shard, capacity 1
};

struct P2pSpec {
    std::size_t subsets = 4;                 // E
    std::size_t chain_k = 15;                // p2p_random_k chain length
    std::size_t subset_divisor = 4;          // sweeps: E = count / divisor
    double cost_low = 1.0;
    double cost_high = 10.0;
    double unreachable_prob = 0.0;
    CostUnit unit = CostUnit::Delay;
    std::string matrix_file;
};

struct ExperimentConfig {
    std::string preset;
    Architecture architecture = Architecture::Traditional;
    Strategy strategy = Strategy::CncOptimized;
    std::size_t num_clients = 100;
    double cfraction = 0.1;
    std::size_t local_epoch = 1;
    std::size_t global_epoch = 300;
    std::size_t batch_size = 10;
    double lr = 0.01;
    std::size_t m = 4;
    RbObjective objective = RbObjective::SumEnergy;
    ChannelParams channel;
    DatasetSpec dataset;
    ComputeSpec compute;
    P2pSpec p2p;
    std::uint64_t seed = 1;
    bool metrics_only = false;
    std::size_t threads = 1;

    /// Clients drawn per traditional round.
    std::size_t clients_per_round() const;

    /// Throws ConfigError on contradictions.
    void validate() const;
};

/// Table-2 cases Pr1..Pr6 on top of the default configuration.
ExperimentConfig make_preset(std::string_view name);
std::vector<std::string> preset_names();

struct MetricsRecord {
    std::size_t round = 0;   // 1-based
    Strategy strategy = Strategy::CncOptimized;
    double test_accuracy = 0.0;
    double sum_tx_energy_j = 0.0;
    double max_tx_delay_s = 0.0;
    double max_local_delay_s = 0.0;
    double delay_spread_s = 0.0;
    double round_wallclock_s = 0.0;
    double cum_sum_tx_energy_j = 0.0;
    double cum_max_tx_delay_s = 0.0;
    double cum_max_local_delay_s = 0.0;
    double cum_round_wallclock_s = 0.0;

    RoundPlan plan;                          // traditional rounds
    std::vector<std::vector<int>> chains;    // p2p rounds: client ids in path order
};

struct RunOptions {
    // Overrides S_t for a round when it returns a value (traditional only).
    std::function<std::optional<std::vector<int>>(std::size_t round)> forced_selection;
    // Cross-check each optimized RB assignment against exhaustive search.
    bool oracle_check = false;
    std::function<void(const MetricsRecord&)> on_round;
    // Sees the aggregated global model after every trained round.
    std::function<void(std::size_t round, const ParamVector&)> on_model;
};

/// Materialized experiment inputs: data, shards, compute profiles and the
/// peer-to-peer consumption matrix.
struct Population {
    std::vector<Sample> test;
    std::vector<Shard> shards;
    std::vector<ComputeProfile> profiles;
    DelayModel delay;
    ParamVector initial_model;
    ConsumptionMatrix consumption;   // p2p only
};

Population build_population(const ExperimentConfig& cfg);

std::vector<MetricsRecord> run_traditional(const ExperimentConfig& cfg, const RunOptions& opts = {});
std::vector<MetricsRecord> run_p2p(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Dispatches on cfg.architecture.
std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct SweepRow {
    std::size_t clients = 0;
    Strategy strategy = Strategy::CncOptimized;
    double mean_round_wallclock_s = 0.0;
};

/// Short p2p runs per client count and strategy. Under cnc_optimized the
/// subset count scales as max(1, count / p2p.subset_divisor).
std::vector<SweepRow> sweep_clients(const ExperimentConfig& cfg, std::span<const std::size_t> client_counts,
                                    std::span<const Strategy> strategies);

/// Argmax accuracy over a non-empty test set.
double evaluate(const ParamVector& model, std::span<const Sample> test);

} // namespace cncfl
