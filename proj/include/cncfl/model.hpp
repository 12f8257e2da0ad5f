#pragma once

// Softmax-regression classifier with an optional tanh hidden layer.
//
// Parameters live in one flat vector. The layout records each tensor as
// (name, rows, cols), row-major, in the order
//   no hidden layer:  W(C,D) b(C,1)
//   hidden layer H:   W1(H,D) b1(H,1) W2(C,H) b2(C,1)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cncfl/sample.hpp"

namespace cncfl {

struct LayerShape {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;

    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

struct ParamVector {
    std::vector<double> values;
    std::vector<LayerShape> layout;
    std::size_t dtype_bytes = 4;

    std::size_t input_dim() const;
    std::size_t num_classes() const;
    std::optional<std::size_t> hidden() const;
    std::size_t size() const noexcept { return values.size(); }

    // Throws InvalidInput when the layout does not describe `values` or an entry is non-finite.
    void validate() const;
};

struct GradVector {
    std::vector<double> values;
    std::vector<LayerShape> layout;
};

struct Hyperparams {
    double lr = 0.01;
    std::size_t batch_size = 10;
    std::size_t local_epochs = 1;

    void validate() const;
};

ParamVector init_model(std::uint64_t seed, std::size_t input_dim, std::size_t num_classes,
                       std::optional<std::size_t> hidden = std::nullopt);

/// Mean cross-entropy of the batch.
double forward_loss(const ParamVector& params, std::span<const Sample> batch);

/// Analytic gradient of forward_loss.
GradVector gradient(const ParamVector& params, std::span<const Sample> batch);

/// `local_epochs` passes of minibatch SGD. Each pass reshuffles the shard;
/// the final batch may be short. Deterministic in (params, shard, hyper, seed).
ParamVector sgd_local_train(const ParamVector& params, std::span<const Sample> shard,
                            const Hyperparams& hyper, std::uint64_t seed);

/// Output-layer scores for one feature vector.
std::vector<double> logits(const ParamVector& params, std::span<const double> features);

/// Argmax of logits; ties resolve to the lowest class id.
int predict(const ParamVector& params, std::span<const double> features);

/// Payload size Z(w). A set override pins the size independent of the model.
std::uint64_t param_size_bytes(const ParamVector& params,
                               std::optional<std::uint64_t> override_bytes = std::nullopt);

/// 1 MB = 2^20 bytes, rounded to the nearest byte.
std::uint64_t megabytes_to_bytes(double mb);

/// Convex combination with weights normalized to sum 1, accumulated in input order.
ParamVector weighted_average(std::span<const ParamVector> models, std::span<const double> weights);

} // namespace cncfl
