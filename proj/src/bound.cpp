#include "pfl/bound.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pfl {

double psi1(double r, const BoundConstants& c) {
    if (r < 0.0 || r > 1.0) throw std::domain_error("pruning rate outside [0, 1]");
    const double g2 = c.g * c.g;
    return c.l1 * c.m * std::sqrt(1.0 - r) +
           0.5 * (c.l2 * c.eta * c.eta - c.eta) * g2 +
           1.5 * c.eta * c.sigma * c.sigma;
}

double psi2(std::span<const double> k, std::span<const double> gamma,
            const BoundConstants& c) {
    if (k.size() != gamma.size()) {
        throw std::invalid_argument("rate and weight lengths differ");
    }
    double weighted = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) weighted += gamma[i] * k[i];
    const double g2 = c.g * c.g;
    return 0.5 * (c.l2 * c.eta * c.eta - 3.0 * c.eta) * g2 * weighted +
           c.eta * g2;
}

ObjectiveCoeffs objective_coeffs(const BoundConstants& c) {
    ObjectiveCoeffs coeffs;
    const double t = static_cast<double>(c.rounds);
    coeffs.theta1 = 2.0 * c.l1 * c.m / (c.eta * t);
    coeffs.theta2 = (3.0 - c.l2 * c.eta) * c.g * c.g / t;
    return coeffs;
}

double convergence_bound(
    const std::vector<std::vector<std::pair<double, double>>>& rk_schedule,
    std::span<const double> gamma, const BoundConstants& c,
    std::span<const double> initial_losses,
    std::span<const double> optimal_lower_bounds) {
    if (!c.eta_admissible()) {
        throw std::invalid_argument("learning rate violates eta <= 3/L2");
    }
    const std::size_t n = gamma.size();
    if (initial_losses.size() != n || optimal_lower_bounds.size() != n) {
        throw std::invalid_argument("per-client input lengths differ");
    }
    const double t_count = static_cast<double>(rk_schedule.size());
    const double lead = 2.0 / (c.eta * t_count);

    double init_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        init_gap += gamma[i] * (initial_losses[i] - optimal_lower_bounds[i]);
    }

    double penalty = 0.0;
    std::vector<double> round_k(n);
    for (const auto& round : rk_schedule) {
        if (round.size() != n) {
            throw std::invalid_argument("schedule round has wrong client count");
        }
        for (std::size_t i = 0; i < n; ++i) round_k[i] = round[i].second;
        const double p2 = psi2(round_k, gamma, c);
        for (std::size_t i = 0; i < n; ++i) {
            penalty += gamma[i] * (psi1(round[i].first, c) + p2);
        }
    }
    return lead * init_gap + lead * penalty;
}

std::vector<std::string> breached_assumptions(const AssumptionAudit& audit,
                                              const BoundConstants& c) {
    std::vector<std::string> breached;
    if (audit.max_l1_ratio > c.l1) breached.push_back("L1 (risk Lipschitz)");
    if (audit.max_l2_ratio > c.l2) breached.push_back("L2 (gradient Lipschitz)");
    if (audit.max_grad_variance > c.sigma * c.sigma) {
        breached.push_back("sigma (gradient variance)");
    }
    if (audit.max_stoch_grad_sq > c.g * c.g) breached.push_back("G (gradient norm)");
    if (audit.max_weight_sq > c.m * c.m) breached.push_back("M (weight norm)");
    return breached;
}

}  // namespace pfl
