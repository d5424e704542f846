#pragma once

#include <cstddef>
#include <utility>

namespace pfl {

// Per-round wireless link state, SI units throughout (conversions from dBm
// happen at config load).
struct ChannelState {
    double gain = 0.0;          // linear channel power gain
    double power_w = 0.0;       // uplink transmit power (W)
    double bandwidth_hz = 0.0;  // total uplink bandwidth (Hz)
    double noise_psd = 0.0;     // AWGN power spectral density (W/Hz)
};

struct DeviceProfile {
    double cpu_hz = 0.0;             // CPU frequency (cycles/s)
    double energy_coeff = 0.0;       // CPU energy coefficient (J*s^2)
    double cycles_per_sample = 0.0;  // cycles to process one sample
    std::size_t batch = 0;           // mini-batch size (samples)
};

struct CostReport {
    double tau_comm = 0.0;
    double tau_comp = 0.0;
    double tau_all = 0.0;
    double e_comm = 0.0;
    double e_comp = 0.0;
    double bits = 0.0;
};

// 10^(-(128.1 + 37.6 log10 d) / 10), d in km
double path_loss_gain(double distance_km);

// FDMA uplink rate l*W*log2(1 + h p / (N0 l W)) in bit/s, l in (0, 1]
double uplink_rate(const ChannelState& ch, double l);

// (tau_comm, e_comm) = (bits/rate, p * tau_comm)
std::pair<double, double> comm_costs(double bits, double rate, double power_w);

// (tau_comp, e_comp) for one local step on a model of d parameters with
// d_base shared and pruning rate r on the rest
std::pair<double, double> comp_costs(const DeviceProfile& dev, std::size_t d,
                                     std::size_t d_base, double r);

CostReport price_round(const ChannelState& ch, const DeviceProfile& dev,
                       double bits, double l, std::size_t d, std::size_t d_base,
                       double r);

}  // namespace pfl
