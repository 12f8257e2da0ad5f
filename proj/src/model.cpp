#include "cncfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

namespace {

// Non-owning view of the tensors inside a flat parameter vector.
struct Layers {
    const double* w1 = nullptr;  // (H or C) x D
    const double* b1 = nullptr;
    const double* w2 = nullptr;  // C x H, only with a hidden layer
    const double* b2 = nullptr;
    std::size_t in = 0;
    std::size_t hid = 0;  // 0 means no hidden layer
    std::size_t out = 0;
};

Layers view(const std::vector<double>& v, const std::vector<LayerShape>& layout) {
    Layers l;
    if (layout.size() == 2) {
        l.in = layout[0].cols;
        l.out = layout[0].rows;
        l.w1 = v.data();
        l.b1 = l.w1 + l.out * l.in;
    } else {
        l.in = layout[0].cols;
        l.hid = layout[0].rows;
        l.out = layout[2].rows;
        l.w1 = v.data();
        l.b1 = l.w1 + l.hid * l.in;
        l.w2 = l.b1 + l.hid;
        l.b2 = l.w2 + l.out * l.hid;
    }
    return l;
}

void check_batch(const ParamVector& params, std::span<const Sample> batch) {
    if (batch.empty()) throw InvalidInput("batch is empty");
    const std::size_t d = params.input_dim();
    const auto c = static_cast<int>(params.num_classes());
    for (const auto& s : batch) {
        if (s.features.size() != d)
            throw InvalidInput("feature dimension " + std::to_string(s.features.size()) +
                               " does not match model input dimension " + std::to_string(d));
        if (s.label < 0 || s.label >= c)
            throw InvalidInput("label " + std::to_string(s.label) + " outside [0, " + std::to_string(c) + ")");
    }
}

// Forward pass for one sample. `hidden` receives tanh activations when the
// model has a hidden layer; `z` receives output logits.
void forward(const Layers& l, const double* x, std::vector<double>& hidden, std::vector<double>& z) {
    z.assign(l.out, 0.0);
    if (l.hid == 0) {
        for (std::size_t c = 0; c < l.out; ++c) {
            double acc = l.b1[c];
            const double* row = l.w1 + c * l.in;
            for (std::size_t j = 0; j < l.in; ++j) acc += row[j] * x[j];
            z[c] = acc;
        }
        return;
    }
    hidden.assign(l.hid, 0.0);
    for (std::size_t h = 0; h < l.hid; ++h) {
        double acc = l.b1[h];
        const double* row = l.w1 + h * l.in;
        for (std::size_t j = 0; j < l.in; ++j) acc += row[j] * x[j];
        hidden[h] = std::tanh(acc);
    }
    for (std::size_t c = 0; c < l.out; ++c) {
        double acc = l.b2[c];
        const double* row = l.w2 + c * l.hid;
        for (std::size_t h = 0; h < l.hid; ++h) acc += row[h] * hidden[h];
        z[c] = acc;
    }
}

// Converts logits to probabilities in place and returns log-sum-exp.
double softmax_inplace(std::vector<double>& z) {
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : z) v /= total;
    return peak + std::log(total);
}

std::vector<LayerShape> make_layout(std::size_t input_dim, std::size_t num_classes,
                                    std::optional<std::size_t> hidden) {
    if (!hidden) return {{"W", num_classes, input_dim}, {"b", num_classes, 1}};
    return {{"W1", *hidden, input_dim}, {"b1", *hidden, 1}, {"W2", num_classes, *hidden}, {"b2", num_classes, 1}};
}

} // namespace

std::size_t ParamVector::input_dim() const { return layout.empty() ? 0 : layout.front().cols; }

std::size_t ParamVector::num_classes() const {
    if (layout.size() == 2) return layout[0].rows;
    if (layout.size() == 4) return layout[2].rows;
    return 0;
}

std::optional<std::size_t> ParamVector::hidden() const {
    if (layout.size() == 4) return layout[0].rows;
    return std::nullopt;
}

void ParamVector::validate() const {
    if (layout.size() != 2 && layout.size() != 4) throw InvalidInput("layout must have 2 or 4 tensors");
    std::size_t expected = 0;
    for (const auto& s : layout) expected += s.rows * s.cols;
    if (expected != values.size())
        throw InvalidInput("layout describes " + std::to_string(expected) + " scalars but vector holds " +
                           std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidInput("parameter vector contains a non-finite entry");
}

void Hyperparams::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidInput("learning rate must be finite and non-negative");
    if (batch_size < 1) throw InvalidInput("batch_size must be at least 1");
    if (local_epochs < 1) throw InvalidInput("local_epochs must be at least 1");
}

ParamVector init_model(std::uint64_t seed, std::size_t input_dim, std::size_t num_classes,
                       std::optional<std::size_t> hidden) {
    if (input_dim < 1) throw InvalidInput("input_dim must be at least 1");
    if (num_classes < 2) throw InvalidInput("num_classes must be at least 2");
    if (hidden && *hidden == 0) throw InvalidInput("hidden layer width 0 is not allowed; omit the hidden layer instead");

    ParamVector p;
    p.layout = make_layout(input_dim, num_classes, hidden);
    Rng rng = make_rng(seed, Stream::Init);
    for (const auto& shape : p.layout) {
        const bool is_bias = shape.cols == 1 && shape.name.front() == 'b';
        if (is_bias) {
            p.values.insert(p.values.end(), shape.rows, 0.0);
            continue;
        }
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(shape.cols)));
        for (std::size_t i = 0; i < shape.rows * shape.cols; ++i) p.values.push_back(dist(rng));
    }
    return p;
}

double forward_loss(const ParamVector& params, std::span<const Sample> batch) {
    params.validate();
    check_batch(params, batch);
    const Layers l = view(params.values, params.layout);
    std::vector<double> hidden, z;
    double total = 0.0;
    for (const auto& s : batch) {
        forward(l, s.features.data(), hidden, z);
        const double peak = *std::max_element(z.begin(), z.end());
        double acc = 0.0;
        for (double v : z) acc += std::exp(v - peak);
        total += peak + std::log(acc) - z[static_cast<std::size_t>(s.label)];
    }
    return total / static_cast<double>(batch.size());
}

GradVector gradient(const ParamVector& params, std::span<const Sample> batch) {
    params.validate();
    check_batch(params, batch);
    const Layers l = view(params.values, params.layout);

    GradVector g{std::vector<double>(params.values.size(), 0.0), params.layout};
    double* gw1 = g.values.data();
    double* gb1 = gw1 + (l.hid ? l.hid : l.out) * l.in;
    double* gw2 = l.hid ? gb1 + l.hid : nullptr;
    double* gb2 = l.hid ? gw2 + l.out * l.hid : nullptr;

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> hidden, z, dh;
    for (const auto& s : batch) {
        const double* x = s.features.data();
        forward(l, x, hidden, z);
        softmax_inplace(z);
        z[static_cast<std::size_t>(s.label)] -= 1.0;
        for (double& v : z) v *= inv_n;

        if (l.hid == 0) {
            for (std::size_t c = 0; c < l.out; ++c) {
                double* row = gw1 + c * l.in;
                for (std::size_t j = 0; j < l.in; ++j) row[j] += z[c] * x[j];
                gb1[c] += z[c];
            }
            continue;
        }
        dh.assign(l.hid, 0.0);
        for (std::size_t c = 0; c < l.out; ++c) {
            double* grow = gw2 + c * l.hid;
            const double* wrow = l.w2 + c * l.hid;
            for (std::size_t h = 0; h < l.hid; ++h) {
                grow[h] += z[c] * hidden[h];
                dh[h] += wrow[h] * z[c];
            }
            gb2[c] += z[c];
        }
        for (std::size_t h = 0; h < l.hid; ++h) {
            const double da = dh[h] * (1.0 - hidden[h] * hidden[h]);
            double* row = gw1 + h * l.in;
            for (std::size_t j = 0; j < l.in; ++j) row[j] += da * x[j];
            gb1[h] += da;
        }
    }
    return g;
}

ParamVector sgd_local_train(const ParamVector& params, std::span<const Sample> shard,
                            const Hyperparams& hyper, std::uint64_t seed) {
    if (shard.empty()) throw InvalidInput("cannot train on an empty shard");
    hyper.validate();
    params.validate();
    check_batch(params, shard);

    ParamVector w = params;
    Rng rng = make_rng(seed, Stream::LocalTrain);
    std::vector<std::size_t> order(shard.size());
    std::vector<Sample> batch;
    batch.reserve(hyper.batch_size);
    for (std::size_t epoch = 0; epoch < hyper.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
            const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k) batch.push_back(shard[order[k]]);
            const GradVector g = gradient(w, batch);
            for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] -= hyper.lr * g.values[i];
        }
    }
    w.validate();
    return w;
}

std::vector<double> logits(const ParamVector& params, std::span<const double> features) {
    if (features.size() != params.input_dim())
        throw InvalidInput("feature dimension does not match model input dimension");
    std::vector<double> hidden, z;
    forward(view(params.values, params.layout), features.data(), hidden, z);
    return z;
}

int predict(const ParamVector& params, std::span<const double> features) {
    const auto z = logits(params, features);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::uint64_t param_size_bytes(const ParamVector& params, std::optional<std::uint64_t> override_bytes) {
    if (override_bytes) return *override_bytes;
    return static_cast<std::uint64_t>(params.values.size()) * params.dtype_bytes;
}

std::uint64_t megabytes_to_bytes(double mb) {
    if (!(mb >= 0.0) || !std::isfinite(mb)) throw InvalidInput("payload size must be finite and non-negative");
    return static_cast<std::uint64_t>(std::llround(mb * 1048576.0));
}

ParamVector weighted_average(std::span<const ParamVector> models, std::span<const double> weights) {
    if (models.empty()) throw InvalidInput("no models to average");
    if (models.size() != weights.size()) throw InvalidInput("one weight per model is required");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("weights must be finite and non-negative");
        total += w;
    }
    if (total <= 0.0) throw InvalidInput("at least one weight must be positive");
    for (const auto& m : models)
        if (m.layout != models.front().layout || m.values.size() != models.front().values.size())
            throw InvalidInput("models have mismatched layouts");

    ParamVector out = models.front();
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (std::size_t e = 0; e < models.size(); ++e) {
        const double share = weights[e] / total;
        if (share == 0.0) continue;
        const auto& v = models[e].values;
        for (std::size_t i = 0; i < v.size(); ++i) out.values[i] += share * v[i];
    }
    out.validate();
    return out;
}

} // namespace cncfl
