#include "cncfl/channel.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "cncfl/error.hpp"
#include "cncfl/rng.hpp"

namespace cncfl {

namespace {

double shannon(const LinkState& link, const RBlock& rb, double gain) {
    const double snr = link.tx_power_w * gain / (rb.interference_w + rb.bandwidth_hz * link.noise_psd_w_per_hz);
    return rb.bandwidth_hz * std::log2(1.0 + snr);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

} // namespace

void RBlock::validate() const {
    if (!positive(bandwidth_hz)) throw InvalidInput("RB bandwidth must be positive");
    if (!(interference_w >= 0.0) || !std::isfinite(interference_w)) throw InvalidInput("RB interference must be non-negative");
}

void LinkState::validate() const {
    if (!positive(distance_m)) throw InvalidInput("distance must be positive");
    if (!positive(rayleigh_param)) throw InvalidInput("rayleigh parameter must be positive");
    if (!positive(tx_power_w)) throw InvalidInput("transmit power must be positive");
    if (!positive(noise_psd_w_per_hz)) throw InvalidInput("noise PSD must be positive");
}

void FadingModel::validate() const {
    if (kind == FadingKind::Rayleigh && mc_samples < 1) throw InvalidInput("rayleigh fading needs mc_samples >= 1");
}

double dbm_per_hz_to_w_per_hz(double dbm_per_hz) { return std::pow(10.0, dbm_per_hz / 10.0) * 1e-3; }

double channel_gain(const LinkState& link) {
    link.validate();
    return link.rayleigh_param / (link.distance_m * link.distance_m);
}

double uplink_rate(const LinkState& link, const RBlock& rb, const FadingModel& fading, std::uint64_t seed) {
    rb.validate();
    fading.validate();
    if (fading.kind == FadingKind::Deterministic) return shannon(link, rb, channel_gain(link));

    Rng rng = make_rng(seed, Stream::Fading);
    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> draws(static_cast<std::size_t>(fading.mc_samples));
    for (double& g : draws) g = exp1(rng);
    return uplink_rate_with_draws(link, rb, draws);
}

double uplink_rate_with_draws(const LinkState& link, const RBlock& rb, std::span<const double> draws) {
    rb.validate();
    if (draws.empty()) throw InvalidInput("at least one fading draw is required");
    const double mean_gain = channel_gain(link);
    double total = 0.0;
    for (double g : draws) total += shannon(link, rb, g * mean_gain);
    return total / static_cast<double>(draws.size());
}

double tx_delay(double payload_bytes, double rate_bps) {
    if (!(payload_bytes >= 0.0)) throw InvalidInput("payload must be non-negative");
    if (!(rate_bps > 0.0)) throw InvalidInput("transmission rate must be positive");
    return 8.0 * payload_bytes / rate_bps;
}

double tx_energy(const LinkState& link, double delay_s) {
    if (!(delay_s >= 0.0)) throw InvalidInput("delay must be non-negative");
    return link.tx_power_w * delay_s;
}

} // namespace cncfl
