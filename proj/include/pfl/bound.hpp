#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pfl {

// Smoothness/boundedness constants plus the training hyperparameters they
// are tied to. The convergence bound and the optimizer's objective
// coefficients are derived from these; they are frozen once estimated.
struct BoundConstants {
    double l1 = 0.0;     // Lipschitz constant of the risk itself
    double l2 = 0.0;     // Lipschitz constant of its gradient
    double g = 0.0;      // bound on E||g||
    double m = 0.0;      // bound on ||w||
    double sigma = 0.0;  // mini-batch gradient noise bound
    double eta = 0.0;    // learning rate
    int rounds = 0;      // round budget T

    bool eta_admissible() const { return l2 > 0.0 && eta <= 3.0 / l2; }
};

// Pruning penalty: L1*M*sqrt(1-r) + (L2 eta^2 - eta)/2 * G^2 + 3 eta sigma^2 / 2
double psi1(double r, const BoundConstants& c);

// Sparsification penalty: (L2 eta^2 - 3 eta) G^2 / 2 * sum_i gamma_i k_i + eta G^2.
// The value couples all clients' rates; it is shared by every client in the
// round.
double psi2(std::span<const double> k, std::span<const double> gamma,
            const BoundConstants& c);

struct ObjectiveCoeffs {
    double theta1 = 0.0;  // 2 L1 M / (eta T)
    double theta2 = 0.0;  // (3 - L2 eta) G^2 / T
};

ObjectiveCoeffs objective_coeffs(const BoundConstants& c);

// Right-hand side of the convergence guarantee for a completed schedule of
// per-round per-client (r, k) rates. `initial_losses` holds F_n at the first
// iterate; `optimal_lower_bounds` a valid lower bound on each client's
// optimal risk (zero for cross-entropy).
double convergence_bound(
    const std::vector<std::vector<std::pair<double, double>>>& rk_schedule,
    std::span<const double> gamma, const BoundConstants& c,
    std::span<const double> initial_losses,
    std::span<const double> optimal_lower_bounds);

// Per-client per-round trajectory measurements used to audit the assumptions
// behind the bound when the asserted inequality fails.
struct AssumptionAudit {
    double max_stoch_grad_sq = 0.0;  // against G^2
    double max_weight_sq = 0.0;      // against M^2
    double max_grad_variance = 0.0;  // against sigma^2
    double max_l1_ratio = 0.0;       // |F(x)-F(y)| / ||x-y||
    double max_l2_ratio = 0.0;       // ||grad F(x)-grad F(y)|| / ||x-y||
};

// Names of the assumption bounds the audit found breached, empty if none.
std::vector<std::string> breached_assumptions(const AssumptionAudit& audit,
                                              const BoundConstants& c);

}  // namespace pfl
