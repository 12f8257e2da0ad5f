#pragma once

// Datasets and client shards: Gaussian-blob synthetic data, IID and
// label-skew partitioning, and MNIST IDX ingestion.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cncfl/sample.hpp"

namespace cncfl {

struct Shard {
    int client_id = 0;
    std::vector<Sample> samples;

    std::size_t size() const noexcept { return samples.size(); }
};

/// Class-conditional Gaussian blobs (unit variance) whose means are pairwise
/// `separation` apart when classes <= dim. Labels are balanced within one.
std::vector<Sample> gen_synthetic(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                                  double separation);

/// Shuffle by seed, then split into near-equal shards (sizes differ by at most one;
/// the first `n % num_clients` shards take the extra sample).
std::vector<Shard> partition_iid(std::span<const Sample> dataset, std::size_t num_clients, std::uint64_t seed);

/// Shuffle by seed, then split with shard sizes proportional to `multipliers`
/// (largest-remainder rounding, every shard gets at least one sample). The list
/// is cycled when shorter than num_clients.
std::vector<Shard> partition_weighted(std::span<const Sample> dataset, std::size_t num_clients,
                                      std::span<const double> multipliers, std::uint64_t seed);

/// Label-skew Non-IID split: sort by label, cut into num_clients * labels_per_client
/// contiguous blocks and deal block j to client j mod num_clients. The client order is
/// permuted by seed.
std::vector<Shard> partition_label_skew(std::span<const Sample> dataset, std::size_t num_clients,
                                        std::size_t labels_per_client, std::uint64_t seed);

/// Splits off the last `fraction` of a seeded shuffle as a held-out set.
struct TrainTest {
    std::vector<Sample> train;
    std::vector<Sample> test;
};
TrainTest split_holdout(std::span<const Sample> dataset, double fraction, std::uint64_t seed);

// IDX (big-endian) readers and writers. Images: magic 0x00000803, n, rows, cols,
// u8 pixels. Labels: magic 0x00000801, n, u8 labels. Pixels scale to [0,1].
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<Sample> parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);
std::vector<Sample> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct IdxBytes {
    std::vector<std::uint8_t> images;
    std::vector<std::uint8_t> labels;
};
/// Inverse of parse_idx; features are mapped back with round(x * 255).
IdxBytes encode_idx(std::span<const Sample> samples, std::uint32_t rows, std::uint32_t cols);

std::size_t count_classes(std::span<const Sample> samples);

} // namespace cncfl
