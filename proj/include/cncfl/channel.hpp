#pragma once

// Uplink model for one client transmitting on one resource block:
//   h = o * d^-2
//   r = B * log2(1 + P h / (I_k + B N0))       (bits/s)
//   l = 8 Z / r                                (s)
//   e = P l                                    (J)
// The rayleigh mode averages r over M exponential fading draws.

#include <cstdint>
#include <span>

namespace cncfl {

struct RBlock {
    int index = 0;
    double bandwidth_hz = 1e6;
    double interference_w = 1e-8;

    void validate() const;
};

struct LinkState {
    double distance_m = 1.0;
    double rayleigh_param = 1.0;
    double tx_power_w = 0.01;
    double noise_psd_w_per_hz = 3.981071705534972e-21;

    void validate() const;
};

enum class FadingKind { Deterministic, Rayleigh };

struct FadingModel {
    FadingKind kind = FadingKind::Deterministic;
    int mc_samples = 1;

    void validate() const;
};

double dbm_per_hz_to_w_per_hz(double dbm_per_hz);

double channel_gain(const LinkState& link);

double uplink_rate(const LinkState& link, const RBlock& rb, const FadingModel& fading, std::uint64_t seed);

/// Rate averaged over caller-supplied fading draws g (h = g * o * d^-2).
double uplink_rate_with_draws(const LinkState& link, const RBlock& rb, std::span<const double> draws);

double tx_delay(double payload_bytes, double rate_bps);

double tx_energy(const LinkState& link, double delay_s);

} // namespace cncfl
