#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfl/mec.hpp"

namespace pfl {

// One round's joint selection of sparsification rate k, pruning rate r, and
// bandwidth fraction l per client. The non-convex program couples k and l
// through the payload/rate ratio; it is solved as a difference-of-convex
// problem: linearize the concave parts at the current iterate and solve the
// resulting convex subproblem with a log-barrier interior-point method.

struct ClientLink {
    ChannelState ch;
    DeviceProfile dev;
    double gamma = 0.0;
    double energy_cap = 0.0;  // per-round amortized cap (J)
};

struct OptimizationInstance {
    std::vector<ClientLink> clients;
    double theta1 = 0.0;
    double theta2 = 0.0;
    std::size_t d = 0;
    std::size_t d_base = 0;
    int fpp = 32;
    double tau_max = 0.0;
    double k_min = 1e-3;
    double r_max = 0.999;

    std::size_t size() const { return clients.size(); }
};

// Interior iterate of the transformed program. z bounds the communication
// latency, u = l*z is the bandwidth-latency product, and v^2 >= u carries
// the fractional bandwidth constraint.
struct DcaIterate {
    std::vector<double> k, r, z, u, v;
};

struct SolverSettings {
    double eps_inner = 1e-6;  // interior-point KKT residual target
    double eps_outer = 1e-4;  // DCA variable-delta stop
    int max_outer = 50;
};

struct RoundPlan {
    std::vector<double> k, r, l;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    double max_violation = 0.0;
    std::vector<double> objective_trace;
    DcaIterate iterate;  // final interior point, reusable as a warm start
};

struct FeasibilityReport {
    double max_violation = 0.0;
    std::string worst_constraint;
    bool feasible(double tol = 1e-6) const { return max_violation <= tol; }
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, std::string binding)
        : std::runtime_error(what), binding_(std::move(binding)) {}
    const std::string& binding() const { return binding_; }

private:
    std::string binding_;
};

// ---- convex pieces of the reformulation (exposed for tests) ----

// -k*d*(log2(1/k) + FPP + 1), the negated payload surrogate; convex on (0, 1]
double phi1(double k, std::size_t d_base, int fpp);
double phi1_grad(double k, std::size_t d_base, int fpp);

// -theta1*gamma*sqrt(1-r); convex on [0, 1)
double phi2(double r, double theta1_gamma);
double phi2_grad(double r, double theta1_gamma);

// perspective of the negated rate: -u*W*log2(1 + z h p / (u N0 W)); convex,
// extended by continuity to 0 at u = 0
double lambda1(double u, double z, const ChannelState& ch);

// -theta2*gamma*k (linear)
double lambda2(double k, double theta2_gamma);

// ---- solver entry points ----

struct BoundConstants;

// Assembles a validated instance from one round's links and the frozen
// constants; per-round energy caps arrive inside the ClientLinks. Runs the
// feasibility probe and throws InfeasibleError when budgets cannot be met.
OptimizationInstance build_instance(std::vector<ClientLink> clients,
                                    const BoundConstants& constants,
                                    std::size_t d, std::size_t d_base, int fpp,
                                    double tau_max, double k_min = 1e-3,
                                    double r_max = 0.999);

// Validates budgets at the cheapest operating point (k = k_min, r = 0,
// equal bandwidth) and throws InfeasibleError naming the binding constraint.
void feasibility_probe(const OptimizationInstance& inst);

// Strictly interior starting iterate; runs the probe first.
DcaIterate initial_iterate(const OptimizationInstance& inst);

// Whether an iterate is strictly inside the original feasible set (margin on
// normalized slacks); used to validate warm starts.
bool strictly_feasible(const OptimizationInstance& inst, const DcaIterate& it,
                       double margin = 1e-7);

// Original minimization objective sum_n gamma_n (theta1 sqrt(1-r) - theta2 k).
double plan_objective(const OptimizationInstance& inst,
                      std::span<const double> k, std::span<const double> r);

RoundPlan dca_solve(const OptimizationInstance& inst,
                    const std::optional<DcaIterate>& warm_start,
                    const SolverSettings& settings);

// Convex subproblem at a linearization point; exposed for oracle tests.
DcaIterate solve_subproblem(const OptimizationInstance& inst,
                            const DcaIterate& linearization_point,
                            double eps_ip);

FeasibilityReport feasibility_check(const OptimizationInstance& inst,
                                    std::span<const double> k,
                                    std::span<const double> r,
                                    std::span<const double> l);

}  // namespace pfl
