#include "cncfl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

namespace {

std::vector<Sample> shuffled(std::span<const Sample> dataset, std::uint64_t seed) {
    std::vector<Sample> out(dataset.begin(), dataset.end());
    Rng rng = make_rng(seed, Stream::Partition);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::vector<Shard> cut(std::vector<Sample>&& pool, std::span<const std::size_t> sizes) {
    std::vector<Shard> shards(sizes.size());
    std::size_t pos = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        shards[k].client_id = static_cast<int>(k);
        shards[k].samples.assign(std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(pos)),
                                 std::make_move_iterator(pool.begin() + static_cast<std::ptrdiff_t>(pos + sizes[k])));
        pos += sizes[k];
    }
    return shards;
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open IDX file " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::vector<Sample> gen_synthetic(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t classes,
                                  double separation) {
    if (dim < 1) throw InvalidInput("dim must be at least 1");
    if (classes < 2) throw InvalidInput("classes must be at least 2");
    if (n < classes) throw InvalidInput("n must be at least the number of classes");
    if (!(separation >= 0.0) || !std::isfinite(separation)) throw InvalidInput("separation must be non-negative");

    Rng rng = make_rng(seed, Stream::Dataset);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Orthogonal axes scaled by s/sqrt(2) are pairwise s apart. With more classes
    // than dimensions, fall back to random unit directions at the same radius.
    const double radius = separation / std::sqrt(2.0);
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
    for (std::size_t c = 0; c < classes; ++c) {
        if (classes <= dim) {
            means[c][c] = radius;
            continue;
        }
        double norm = 0.0;
        for (double& v : means[c]) {
            v = unit(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : means[c]) v = norm > 0.0 ? radius * v / norm : 0.0;
    }

    std::vector<Sample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % classes;
        out[i].label = static_cast<int>(c);
        out[i].features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) out[i].features[j] = means[c][j] + unit(rng);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::vector<Shard> partition_iid(std::span<const Sample> dataset, std::size_t num_clients, std::uint64_t seed) {
    if (num_clients < 1) throw InvalidInput("num_clients must be at least 1");
    if (dataset.size() < num_clients) throw InvalidInput("dataset smaller than the number of clients");
    std::vector<std::size_t> sizes(num_clients, dataset.size() / num_clients);
    for (std::size_t k = 0; k < dataset.size() % num_clients; ++k) ++sizes[k];
    return cut(shuffled(dataset, seed), sizes);
}

std::vector<Shard> partition_weighted(std::span<const Sample> dataset, std::size_t num_clients,
                                      std::span<const double> multipliers, std::uint64_t seed) {
    if (num_clients < 1) throw InvalidInput("num_clients must be at least 1");
    if (multipliers.empty()) return partition_iid(dataset, num_clients, seed);
    if (dataset.size() < num_clients) throw InvalidInput("dataset smaller than the number of clients");
    std::vector<double> w(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) {
        w[k] = multipliers[k % multipliers.size()];
        if (!(w[k] > 0.0) || !std::isfinite(w[k])) throw InvalidInput("shard size multipliers must be positive");
    }
    const double total_w = std::accumulate(w.begin(), w.end(), 0.0);

    // One guaranteed sample each, the rest by largest remainder.
    const std::size_t spare = dataset.size() - num_clients;
    std::vector<std::size_t> sizes(num_clients, 1);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
        const double exact = static_cast<double>(spare) * w[k] / total_w;
        const auto whole = static_cast<std::size_t>(std::floor(exact));
        sizes[k] += whole;
        assigned += whole;
        remainders.emplace_back(exact - static_cast<double>(whole), k);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < spare; ++r, ++assigned) ++sizes[remainders[r % num_clients].second];
    return cut(shuffled(dataset, seed), sizes);
}

std::vector<Shard> partition_label_skew(std::span<const Sample> dataset, std::size_t num_clients,
                                        std::size_t labels_per_client, std::uint64_t seed) {
    if (num_clients < 1) throw InvalidInput("num_clients must be at least 1");
    const std::size_t classes = count_classes(dataset);
    if (labels_per_client < 1 || labels_per_client > classes)
        throw InvalidInput("labels_per_client must lie in [1, " + std::to_string(classes) + "]");
    const std::size_t blocks = num_clients * labels_per_client;
    if (blocks > dataset.size())
        throw InvalidInput("infeasible label-skew split: " + std::to_string(blocks) + " blocks for " +
                           std::to_string(dataset.size()) + " samples");

    std::vector<Sample> pool = shuffled(dataset, seed);
    std::stable_sort(pool.begin(), pool.end(), [](const Sample& a, const Sample& b) { return a.label < b.label; });

    std::vector<std::size_t> client_of(num_clients);
    std::iota(client_of.begin(), client_of.end(), std::size_t{0});
    Rng rng = make_rng(seed, Stream::Partition, 1);
    std::shuffle(client_of.begin(), client_of.end(), rng);

    std::vector<Shard> shards(num_clients);
    for (std::size_t k = 0; k < num_clients; ++k) shards[k].client_id = static_cast<int>(k);
    const std::size_t base = pool.size() / blocks;
    const std::size_t extra = pool.size() % blocks;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < blocks; ++j) {
        const std::size_t len = base + (j < extra ? 1 : 0);
        auto& dest = shards[client_of[j % num_clients]].samples;
        for (std::size_t k = pos; k < pos + len; ++k) dest.push_back(std::move(pool[k]));
        pos += len;
    }
    return shards;
}

TrainTest split_holdout(std::span<const Sample> dataset, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidInput("holdout fraction must lie in [0, 1)");
    std::vector<Sample> pool = shuffled(dataset, derive_seed(seed, {0x7e57}));
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
    TrainTest out;
    const auto cut_at = pool.begin() + static_cast<std::ptrdiff_t>(pool.size() - n_test);
    out.train.assign(std::make_move_iterator(pool.begin()), std::make_move_iterator(cut_at));
    out.test.assign(std::make_move_iterator(cut_at), std::make_move_iterator(pool.end()));
    return out;
}

std::vector<Sample> parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
    if (images.size() < 4) throw ParseError("truncated images file: missing magic");
    if (labels.size() < 4) throw ParseError("truncated labels file: missing magic");
    if (const auto m = read_be32(images, 0); m != kIdxImagesMagic)
        throw ParseError("unexpected magic " + hex32(m) + " in images file (expected " + hex32(kIdxImagesMagic) + ")");
    if (const auto m = read_be32(labels, 0); m != kIdxLabelsMagic)
        throw ParseError("unexpected magic " + hex32(m) + " in labels file (expected " + hex32(kIdxLabelsMagic) + ")");
    if (images.size() < 16) throw ParseError("truncated images file: incomplete header (count/rows/cols)");
    if (labels.size() < 8) throw ParseError("truncated labels file: incomplete header (count)");

    const std::uint64_t n_images = read_be32(images, 4);
    const std::uint64_t rows = read_be32(images, 8);
    const std::uint64_t cols = read_be32(images, 12);
    const std::uint64_t n_labels = read_be32(labels, 4);
    if (n_images != n_labels)
        throw ParseError("count mismatch: images file declares " + std::to_string(n_images) +
                         " items, labels file declares " + std::to_string(n_labels));
    const std::uint64_t pixels = rows * cols;
    if (images.size() - 16 < n_images * pixels) throw ParseError("truncated images file: pixel payload too short");
    if (labels.size() - 8 < n_labels) throw ParseError("truncated labels file: label payload too short");

    std::vector<Sample> out(n_images);
    for (std::size_t i = 0; i < n_images; ++i) {
        out[i].label = labels[8 + i];
        out[i].features.resize(pixels);
        const std::size_t base = 16 + i * pixels;
        for (std::size_t p = 0; p < pixels; ++p) out[i].features[p] = images[base + p] / 255.0;
    }
    return out;
}

std::vector<Sample> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = slurp(images_path);
    const auto labels = slurp(labels_path);
    return parse_idx(images, labels);
}

IdxBytes encode_idx(std::span<const Sample> samples, std::uint32_t rows, std::uint32_t cols) {
    IdxBytes out;
    write_be32(out.images, kIdxImagesMagic);
    write_be32(out.images, static_cast<std::uint32_t>(samples.size()));
    write_be32(out.images, rows);
    write_be32(out.images, cols);
    write_be32(out.labels, kIdxLabelsMagic);
    write_be32(out.labels, static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
        if (s.features.size() != std::size_t{rows} * cols) throw InvalidInput("sample size does not match rows*cols");
        if (s.label < 0 || s.label > 255) throw InvalidInput("IDX labels must fit in one byte");
        for (double v : s.features)
            out.images.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)));
        out.labels.push_back(static_cast<std::uint8_t>(s.label));
    }
    return out;
}

std::size_t count_classes(std::span<const Sample> samples) {
    int top = -1;
    for (const auto& s : samples) top = std::max(top, s.label);
    return static_cast<std::size_t>(top + 1);
}

} // namespace cncfl
