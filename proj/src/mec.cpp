#include "pfl/mec.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace pfl {

double path_loss_gain(double distance_km) {
    if (distance_km <= 0.0) {
        throw std::invalid_argument("distance must be positive");
    }
    const double loss_db = 128.1 + 37.6 * std::log10(distance_km);
    return std::pow(10.0, -loss_db / 10.0);
}

double uplink_rate(const ChannelState& ch, double l) {
    if (l <= 0.0 || l > 1.0) {
        throw std::invalid_argument("bandwidth fraction outside (0, 1]");
    }
    const double band = l * ch.bandwidth_hz;
    const double snr = ch.gain * ch.power_w / (ch.noise_psd * band);
    return band * std::log2(1.0 + snr);
}

std::pair<double, double> comm_costs(double bits, double rate, double power_w) {
    if (bits == 0.0) return {0.0, 0.0};
    const double tau = bits / rate;
    return {tau, power_w * tau};
}

std::pair<double, double> comp_costs(const DeviceProfile& dev, std::size_t d,
                                     std::size_t d_base, double r) {
    const double d_pers = static_cast<double>(d - d_base);
    const double effective = static_cast<double>(d_base) + r * d_pers;
    const double tau = static_cast<double>(dev.batch) * dev.cycles_per_sample *
                       effective / (dev.cpu_hz * static_cast<double>(d));
    const double energy = dev.energy_coeff * dev.cpu_hz * dev.cpu_hz *
                          dev.cpu_hz * tau;
    return {tau, energy};
}

CostReport price_round(const ChannelState& ch, const DeviceProfile& dev,
                       double bits, double l, std::size_t d, std::size_t d_base,
                       double r) {
    CostReport report;
    report.bits = bits;
    const double rate = uplink_rate(ch, l);
    std::tie(report.tau_comm, report.e_comm) = comm_costs(bits, rate, ch.power_w);
    std::tie(report.tau_comp, report.e_comp) = comp_costs(dev, d, d_base, r);
    report.tau_all = report.tau_comm + report.tau_comp;
    return report;
}

}  // namespace pfl
