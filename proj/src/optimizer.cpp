#include "pfl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pfl/bound.hpp"
#include "pfl/compression.hpp"

namespace pfl {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// variable layout: x[5n + {0..4}] = (k, r, z, u, v) for client n
enum Slot { slot_k = 0, slot_r = 1, slot_z = 2, slot_u = 3, slot_v = 4 };

std::size_t var(std::size_t n, Slot s) { return 5 * n + s; }

struct Lambda1Derivs {
    double value, du, dz, duu, duz, dzz;
};

Lambda1Derivs lambda1_derivs(double u, double z, double w, double snr_coef) {
    Lambda1Derivs d{};
    const double s = snr_coef * z / u;
    const double log_term = std::log1p(s);
    const double wl = w / kLn2;
    d.value = -wl * u * log_term;
    d.du = -wl * (log_term - s / (1.0 + s));
    d.dz = -wl * snr_coef / (1.0 + s);
    const double shared = wl / (u * (1.0 + s) * (1.0 + s));
    d.duu = shared * s * s;
    d.duz = -shared * snr_coef * s;
    d.dzz = shared * snr_coef * snr_coef;
    return d;
}

// Per-client constants of one convex subproblem plus the linearization data.
struct Subproblem {
    const OptimizationInstance* inst = nullptr;
    std::size_t n = 0;
    std::size_t dim = 0;  // 5n

    // cost vector of the linearized objective (zero on frozen variables)
    std::vector<double> cost;
    std::vector<bool> frozen;

    // per client
    std::vector<double> tau0, tau_slope;  // comp latency a + b r
    std::vector<double> e0, e_slope;      // comp energy
    std::vector<double> power, energy_cap;
    std::vector<double> band, snr_coef;   // W and h p / (N0 W)
    std::vector<double> phi1_at, phi1_slope, k_at, v_at;

    double tau_max = 0.0;
    double bits_scale = 0.0;

    std::size_t constraint_count() const { return 10 * n + 1; }
};

Subproblem build_subproblem(const OptimizationInstance& inst,
                            const DcaIterate& at) {
    Subproblem sub;
    sub.inst = &inst;
    sub.n = inst.size();
    sub.dim = 5 * sub.n;
    sub.tau_max = inst.tau_max;
    sub.bits_scale = static_cast<double>(inst.d_base) * (inst.fpp + 1);
    sub.cost.assign(sub.dim, 0.0);
    sub.frozen.assign(sub.dim, false);

    for (std::size_t i = 0; i < sub.n; ++i) {
        const ClientLink& link = inst.clients[i];
        auto [tau_r0, e_r0] = comp_costs(link.dev, inst.d, inst.d_base, 0.0);
        auto [tau_r1, e_r1] = comp_costs(link.dev, inst.d, inst.d_base, 1.0);
        sub.tau0.push_back(tau_r0);
        sub.tau_slope.push_back(tau_r1 - tau_r0);
        sub.e0.push_back(e_r0);
        sub.e_slope.push_back(e_r1 - e_r0);
        sub.power.push_back(link.ch.power_w);
        sub.energy_cap.push_back(link.energy_cap);
        sub.band.push_back(link.ch.bandwidth_hz);
        sub.snr_coef.push_back(link.ch.gain * link.ch.power_w /
                               (link.ch.noise_psd * link.ch.bandwidth_hz));
        sub.phi1_at.push_back(phi1(at.k[i], inst.d_base, inst.fpp));
        sub.phi1_slope.push_back(phi1_grad(at.k[i], inst.d_base, inst.fpp));
        sub.k_at.push_back(at.k[i]);
        sub.v_at.push_back(at.v[i]);

        const double tg1 = inst.theta1 * link.gamma;
        const double tg2 = inst.theta2 * link.gamma;
        if (tg2 > 0.0) {
            sub.cost[var(i, slot_k)] = -tg2;
        } else {
            sub.frozen[var(i, slot_k)] = true;  // objective silent on k: hold it
        }
        if (tg1 > 0.0) {
            sub.cost[var(i, slot_r)] = -phi2_grad(at.r[i], tg1);
        } else {
            sub.frozen[var(i, slot_r)] = true;
        }
    }
    return sub;
}

std::vector<double> pack(const DcaIterate& it) {
    std::vector<double> x(5 * it.k.size());
    for (std::size_t i = 0; i < it.k.size(); ++i) {
        x[var(i, slot_k)] = it.k[i];
        x[var(i, slot_r)] = it.r[i];
        x[var(i, slot_z)] = it.z[i];
        x[var(i, slot_u)] = it.u[i];
        x[var(i, slot_v)] = it.v[i];
    }
    return x;
}

DcaIterate unpack(const std::vector<double>& x) {
    DcaIterate it;
    const std::size_t n = x.size() / 5;
    it.k.resize(n);
    it.r.resize(n);
    it.z.resize(n);
    it.u.resize(n);
    it.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        it.k[i] = x[var(i, slot_k)];
        it.r[i] = x[var(i, slot_r)];
        it.z[i] = x[var(i, slot_z)];
        it.u[i] = x[var(i, slot_u)];
        it.v[i] = x[var(i, slot_v)];
    }
    return it;
}

// Normalized slacks of the subproblem constraints; false if any is outside
// the barrier domain. Order per client: k lo/hi, r lo/hi, latency, energy,
// capacity-vs-payload, u lo, u <= z, v-linearized; then the global
// sum v^2/z <= 1.
bool eval_slacks(const Subproblem& sub, const std::vector<double>& x,
                 std::vector<double>& slacks) {
    const OptimizationInstance& inst = *sub.inst;
    slacks.resize(sub.constraint_count());
    std::size_t j = 0;
    double sum_frac = 0.0;
    for (std::size_t i = 0; i < sub.n; ++i) {
        const double k = x[var(i, slot_k)];
        const double r = x[var(i, slot_r)];
        const double z = x[var(i, slot_z)];
        const double u = x[var(i, slot_u)];
        const double v = x[var(i, slot_v)];
        if (u <= 0.0 || z <= u) {
            // u and z - u guard the divisions below; bail out before them
            return false;
        }
        slacks[j++] = k - inst.k_min;
        slacks[j++] = 1.0 - k;
        slacks[j++] = r;
        slacks[j++] = inst.r_max - r;
        slacks[j++] =
            (inst.tau_max - sub.tau0[i] - sub.tau_slope[i] * r - z) / sub.tau_max;
        slacks[j++] = (sub.energy_cap[i] - sub.e0[i] - sub.e_slope[i] * r -
                       sub.power[i] * z) /
                      sub.energy_cap[i];
        const double lam =
            lambda1_derivs(u, z, sub.band[i], sub.snr_coef[i]).value;
        const double phi_lin =
            sub.phi1_at[i] + sub.phi1_slope[i] * (k - sub.k_at[i]);
        slacks[j++] = (phi_lin - lam) / sub.bits_scale;
        slacks[j++] = u / sub.tau_max;
        slacks[j++] = (z - u) / sub.tau_max;
        const double v_lin = sub.v_at[i] * sub.v_at[i] +
                             2.0 * sub.v_at[i] * (v - sub.v_at[i]);
        slacks[j++] = (v_lin - u) / sub.tau_max;
        sum_frac += v * v / z;
    }
    slacks[j++] = 1.0 - sum_frac;
    for (const double s : slacks) {
        if (!(s > 0.0)) return false;
    }
    return true;
}

// Dense symmetric Cholesky solve with jitter retries; matrices stay small
// (5N x 5N over the free variables).
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b,
                    std::size_t n) {
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<double> l = a;
        bool ok = true;
        for (std::size_t c = 0; c < n && ok; ++c) {
            double diag = l[c * n + c];
            for (std::size_t k2 = 0; k2 < c; ++k2) {
                diag -= l[c * n + k2] * l[c * n + k2];
            }
            if (diag <= 0.0) {
                ok = false;
                break;
            }
            l[c * n + c] = std::sqrt(diag);
            for (std::size_t row = c + 1; row < n; ++row) {
                double acc = l[row * n + c];
                for (std::size_t k2 = 0; k2 < c; ++k2) {
                    acc -= l[row * n + k2] * l[c * n + k2];
                }
                l[row * n + c] = acc / l[c * n + c];
            }
        }
        if (!ok) {
            double max_diag = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                max_diag = std::max(max_diag, std::abs(a[i * n + i]));
            }
            const double jitter = std::max(max_diag, 1.0) * 1e-10 *
                                  std::pow(10.0, attempt);
            for (std::size_t i = 0; i < n; ++i) a[i * n + i] += jitter;
            continue;
        }
        // forward then backward substitution in place
        for (std::size_t row = 0; row < n; ++row) {
            double acc = b[row];
            for (std::size_t c = 0; c < row; ++c) acc -= l[row * n + c] * b[c];
            b[row] = acc / l[row * n + row];
        }
        for (std::size_t row = n; row-- > 0;) {
            double acc = b[row];
            for (std::size_t c = row + 1; c < n; ++c) acc -= l[c * n + row] * b[c];
            b[row] = acc / l[row * n + row];
        }
        return true;
    }
    return false;
}

struct BarrierEval {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;  // dense dim x dim
};

double barrier_value(const Subproblem& sub, const std::vector<double>& x,
                     const std::vector<double>& cost_scaled, double mu,
                     std::vector<double>& slacks, bool& feasible) {
    feasible = eval_slacks(sub, x, slacks);
    if (!feasible) return 0.0;
    double value = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) value += cost_scaled[i] * x[i];
    for (const double s : slacks) value -= mu * std::log(s);
    return value;
}

// gradient and Hessian of the barrier at a strictly feasible x
void barrier_derivs(const Subproblem& sub, const std::vector<double>& x,
                    const std::vector<double>& cost_scaled, double mu,
                    const std::vector<double>& slacks, BarrierEval& out) {
    const std::size_t dim = sub.dim;
    out.grad.assign(dim, 0.0);
    out.hess.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) out.grad[i] = cost_scaled[i];

    // small sparse constraint gradients: index/value pairs
    std::size_t idx[4];
    double val[4];

    auto add_constraint = [&](double slack, std::size_t nnz) {
        const double inv_s = 1.0 / slack;
        const double w1 = mu * inv_s;
        const double w2 = mu * inv_s * inv_s;
        for (std::size_t a = 0; a < nnz; ++a) {
            out.grad[idx[a]] += w1 * val[a];
            for (std::size_t b = 0; b < nnz; ++b) {
                out.hess[idx[a] * dim + idx[b]] += w2 * val[a] * val[b];
            }
        }
    };

    std::size_t j = 0;
    for (std::size_t i = 0; i < sub.n; ++i) {
        const double z = x[var(i, slot_z)];
        const double u = x[var(i, slot_u)];
        const double v = x[var(i, slot_v)];

        // k >= k_min: g = k_min - k, grad -e_k
        idx[0] = var(i, slot_k);
        val[0] = -1.0;
        add_constraint(slacks[j++], 1);
        // k <= 1
        idx[0] = var(i, slot_k);
        val[0] = 1.0;
        add_constraint(slacks[j++], 1);
        // r >= 0
        idx[0] = var(i, slot_r);
        val[0] = -1.0;
        add_constraint(slacks[j++], 1);
        // r <= r_max
        idx[0] = var(i, slot_r);
        val[0] = 1.0;
        add_constraint(slacks[j++], 1);
        // latency
        idx[0] = var(i, slot_r);
        val[0] = sub.tau_slope[i] / sub.tau_max;
        idx[1] = var(i, slot_z);
        val[1] = 1.0 / sub.tau_max;
        add_constraint(slacks[j++], 2);
        // energy
        idx[0] = var(i, slot_r);
        val[0] = sub.e_slope[i] / sub.energy_cap[i];
        idx[1] = var(i, slot_z);
        val[1] = sub.power[i] / sub.energy_cap[i];
        add_constraint(slacks[j++], 2);
        // capacity >= linearized payload: g = (lambda1 - phi_lin)/scale
        {
            const Lambda1Derivs lam =
                lambda1_derivs(u, z, sub.band[i], sub.snr_coef[i]);
            const double inv_scale = 1.0 / sub.bits_scale;
            idx[0] = var(i, slot_k);
            val[0] = -sub.phi1_slope[i] * inv_scale;
            idx[1] = var(i, slot_u);
            val[1] = lam.du * inv_scale;
            idx[2] = var(i, slot_z);
            val[2] = lam.dz * inv_scale;
            const double slack = slacks[j++];
            add_constraint(slack, 3);
            // curvature of lambda1 enters through mu/s * hess(g)
            const double w1 = mu / slack;
            const std::size_t iu = var(i, slot_u);
            const std::size_t iz = var(i, slot_z);
            out.hess[iu * dim + iu] += w1 * lam.duu * inv_scale;
            out.hess[iu * dim + iz] += w1 * lam.duz * inv_scale;
            out.hess[iz * dim + iu] += w1 * lam.duz * inv_scale;
            out.hess[iz * dim + iz] += w1 * lam.dzz * inv_scale;
        }
        // u >= 0
        idx[0] = var(i, slot_u);
        val[0] = -1.0 / sub.tau_max;
        add_constraint(slacks[j++], 1);
        // u <= z
        idx[0] = var(i, slot_u);
        val[0] = 1.0 / sub.tau_max;
        idx[1] = var(i, slot_z);
        val[1] = -1.0 / sub.tau_max;
        add_constraint(slacks[j++], 2);
        // u <= linearized v^2
        idx[0] = var(i, slot_u);
        val[0] = 1.0 / sub.tau_max;
        idx[1] = var(i, slot_v);
        val[1] = -2.0 * sub.v_at[i] / sub.tau_max;
        add_constraint(slacks[j++], 2);
    }
    // global sum v^2/z <= 1
    {
        const double slack = slacks[j++];
        const double inv_s = 1.0 / slack;
        const double w1 = mu * inv_s;
        const double w2 = mu * inv_s * inv_s;
        std::vector<double> cgrad(dim, 0.0);
        for (std::size_t i = 0; i < sub.n; ++i) {
            const double z = x[var(i, slot_z)];
            const double v = x[var(i, slot_v)];
            cgrad[var(i, slot_v)] = 2.0 * v / z;
            cgrad[var(i, slot_z)] = -v * v / (z * z);
            const std::size_t iv = var(i, slot_v);
            const std::size_t iz = var(i, slot_z);
            out.hess[iv * dim + iv] += w1 * 2.0 / z;
            out.hess[iv * dim + iz] += w1 * (-2.0 * v / (z * z));
            out.hess[iz * dim + iv] += w1 * (-2.0 * v / (z * z));
            out.hess[iz * dim + iz] += w1 * 2.0 * v * v / (z * z * z);
        }
        for (std::size_t a = 0; a < dim; ++a) {
            if (cgrad[a] == 0.0) continue;
            out.grad[a] += w1 * cgrad[a];
            for (std::size_t b = 0; b < dim; ++b) {
                if (cgrad[b] == 0.0) continue;
                out.hess[a * dim + b] += w2 * cgrad[a] * cgrad[b];
            }
        }
    }
}

// Damped-Newton log-barrier method over the free variables. Starts from a
// strictly feasible point and returns a strictly feasible near-optimum with
// scaled duality gap <= eps_ip.
std::vector<double> ip_solve(const Subproblem& sub, std::vector<double> x,
                             double eps_ip) {
    const std::size_t dim = sub.dim;
    std::vector<double> cost_scaled = sub.cost;
    double cscale = 0.0;
    for (const double c : cost_scaled) cscale = std::max(cscale, std::abs(c));
    if (cscale < 1e-300) cscale = 1.0;
    for (double& c : cost_scaled) c /= cscale;

    std::vector<std::size_t> free_vars;
    for (std::size_t i = 0; i < dim; ++i) {
        if (!sub.frozen[i]) free_vars.push_back(i);
    }
    const std::size_t nfree = free_vars.size();

    std::vector<double> slacks;
    bool feasible = false;
    barrier_value(sub, x, cost_scaled, 1.0, slacks, feasible);
    if (!feasible) {
        throw std::logic_error("interior-point start is not strictly feasible");
    }

    const double m = static_cast<double>(sub.constraint_count());
    BarrierEval eval;
    std::vector<double> reduced_h(nfree * nfree);
    std::vector<double> reduced_g(nfree);
    std::vector<double> candidate(dim);

    double mu = 1.0;
    for (;;) {
        for (int newton = 0; newton < 80; ++newton) {
            const double f0 = barrier_value(sub, x, cost_scaled, mu, slacks,
                                            feasible);
            barrier_derivs(sub, x, cost_scaled, mu, slacks, eval);

            for (std::size_t a = 0; a < nfree; ++a) {
                reduced_g[a] = eval.grad[free_vars[a]];
                for (std::size_t b = 0; b < nfree; ++b) {
                    reduced_h[a * nfree + b] =
                        eval.hess[free_vars[a] * dim + free_vars[b]];
                }
            }
            double max_diag = 0.0;
            for (std::size_t a = 0; a < nfree; ++a) {
                max_diag = std::max(max_diag, reduced_h[a * nfree + a]);
            }
            for (std::size_t a = 0; a < nfree; ++a) {
                reduced_h[a * nfree + a] += 1e-12 * std::max(max_diag, 1.0);
            }
            std::vector<double> step = reduced_g;
            for (double& s : step) s = -s;
            if (!cholesky_solve(reduced_h, step, nfree)) break;

            double decrement = 0.0;
            for (std::size_t a = 0; a < nfree; ++a) {
                decrement -= reduced_g[a] * step[a];
            }
            if (decrement * 0.5 <= 1e-11) break;

            double dir_deriv = -decrement;
            double t = 1.0;
            bool moved = false;
            for (int back = 0; back < 60; ++back) {
                candidate = x;
                for (std::size_t a = 0; a < nfree; ++a) {
                    candidate[free_vars[a]] += t * step[a];
                }
                bool cand_ok = false;
                const double f1 = barrier_value(sub, candidate, cost_scaled, mu,
                                                slacks, cand_ok);
                if (cand_ok && f1 <= f0 + 0.25 * t * dir_deriv) {
                    x = candidate;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        if (m * mu <= eps_ip) break;
        mu = std::max(mu * 0.15, eps_ip / (2.0 * m));
    }
    // leave x's slack state consistent for callers that reuse `slacks`
    barrier_value(sub, x, cost_scaled, mu, slacks, feasible);
    if (!feasible) {
        throw std::logic_error("interior-point iterate left the feasible set");
    }
    return x;
}

std::string client_tag(const char* what, std::size_t i) {
    return std::string(what) + "[" + std::to_string(i) + "]";
}

}  // namespace

double phi1(double k, std::size_t d_base, int fpp) {
    if (k <= 0.0 || k > 1.0) throw std::domain_error("k outside (0, 1]");
    const double d = static_cast<double>(d_base);
    return -k * d * (std::log2(1.0 / k) + fpp + 1);
}

double phi1_grad(double k, std::size_t d_base, int fpp) {
    if (k <= 0.0 || k > 1.0) throw std::domain_error("k outside (0, 1]");
    const double d = static_cast<double>(d_base);
    return d * (std::log2(k) + 1.0 / kLn2) - d * (fpp + 1);
}

double phi2(double r, double theta1_gamma) {
    if (r < 0.0 || r >= 1.0) throw std::domain_error("r outside [0, 1)");
    return -theta1_gamma * std::sqrt(1.0 - r);
}

double phi2_grad(double r, double theta1_gamma) {
    if (r < 0.0 || r >= 1.0) throw std::domain_error("r outside [0, 1)");
    return theta1_gamma / (2.0 * std::sqrt(1.0 - r));
}

double lambda1(double u, double z, const ChannelState& ch) {
    if (u < 0.0) throw std::domain_error("u must be nonnegative");
    if (u == 0.0) return 0.0;  // continuous extension
    const double snr_coef =
        ch.gain * ch.power_w / (ch.noise_psd * ch.bandwidth_hz);
    return lambda1_derivs(u, z, ch.bandwidth_hz, snr_coef).value;
}

double lambda2(double k, double theta2_gamma) { return -theta2_gamma * k; }

OptimizationInstance build_instance(std::vector<ClientLink> clients,
                                    const BoundConstants& constants,
                                    std::size_t d, std::size_t d_base, int fpp,
                                    double tau_max, double k_min, double r_max) {
    if (clients.empty()) {
        throw std::invalid_argument("instance needs at least one client");
    }
    if (tau_max <= 0.0) throw std::invalid_argument("tau_max must be positive");
    for (const ClientLink& link : clients) {
        if (link.energy_cap <= 0.0) {
            throw std::invalid_argument("per-round energy cap must be positive");
        }
        if (link.gamma <= 0.0) {
            throw std::invalid_argument("client weight must be positive");
        }
    }
    OptimizationInstance inst;
    inst.clients = std::move(clients);
    const ObjectiveCoeffs coeffs = objective_coeffs(constants);
    inst.theta1 = coeffs.theta1;
    inst.theta2 = coeffs.theta2;
    inst.d = d;
    inst.d_base = d_base;
    inst.fpp = fpp;
    inst.tau_max = tau_max;
    inst.k_min = k_min;
    inst.r_max = r_max;
    feasibility_probe(inst);
    return inst;
}

void feasibility_probe(const OptimizationInstance& inst) {
    if (inst.size() == 0) {
        throw std::invalid_argument("instance needs at least one client");
    }
    const double l_eq = 1.0 / static_cast<double>(inst.size());
    const BitsConfig bits_cfg{inst.fpp, inst.d_base};
    const double min_payload = approx_bits(inst.k_min, bits_cfg);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const ClientLink& link = inst.clients[i];
        auto [tau_c, e_c] = comp_costs(link.dev, inst.d, inst.d_base, 0.0);
        if (tau_c >= inst.tau_max) {
            throw InfeasibleError(
                "compute-bound: latency at r=0 exceeds tau_max for client " +
                    std::to_string(i),
                client_tag("tau_comp", i));
        }
        if (e_c >= link.energy_cap) {
            throw InfeasibleError(
                "compute-bound: energy at r=0 exceeds the round cap for client " +
                    std::to_string(i),
                client_tag("e_comp", i));
        }
        const double z_budget = std::min(
            inst.tau_max - tau_c, (link.energy_cap - e_c) / link.ch.power_w);
        const double rate = uplink_rate(link.ch, l_eq);
        if (min_payload / rate > z_budget) {
            throw InfeasibleError(
                "communication-bound: minimum payload does not fit the round "
                "budget for client " +
                    std::to_string(i),
                client_tag("tau_comm", i));
        }
    }
}

double plan_objective(const OptimizationInstance& inst,
                      std::span<const double> k, std::span<const double> r) {
    double total = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        total += inst.clients[i].gamma *
                 (inst.theta1 * std::sqrt(1.0 - r[i]) - inst.theta2 * k[i]);
    }
    return total;
}

bool strictly_feasible(const OptimizationInstance& inst, const DcaIterate& it,
                       double margin) {
    const std::size_t n = inst.size();
    if (it.k.size() != n || it.r.size() != n || it.z.size() != n ||
        it.u.size() != n || it.v.size() != n) {
        return false;
    }
    const BitsConfig bits_cfg{inst.fpp, inst.d_base};
    const double bits_scale = static_cast<double>(inst.d_base) * (inst.fpp + 1);
    double sum_frac = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const ClientLink& link = inst.clients[i];
        if (it.k[i] < inst.k_min + margin || it.k[i] > 1.0 - margin) return false;
        if (it.r[i] < margin || it.r[i] > inst.r_max - margin) return false;
        if (it.u[i] <= 0.0 || it.z[i] <= it.u[i]) return false;
        if (it.u[i] / inst.tau_max < margin) return false;
        if ((it.z[i] - it.u[i]) / inst.tau_max < margin) return false;
        auto [tau_c, e_c] = comp_costs(link.dev, inst.d, inst.d_base, it.r[i]);
        if ((inst.tau_max - tau_c - it.z[i]) / inst.tau_max < margin) return false;
        if ((link.energy_cap - e_c - link.ch.power_w * it.z[i]) /
                link.energy_cap <
            margin) {
            return false;
        }
        const double payload = approx_bits(it.k[i], bits_cfg);
        const double capacity = -lambda1(it.u[i], it.z[i], link.ch);
        if ((capacity - payload) / bits_scale < margin) return false;
        if ((it.v[i] * it.v[i] - it.u[i]) / inst.tau_max < margin) return false;
        sum_frac += it.v[i] * it.v[i] / it.z[i];
    }
    return 1.0 - sum_frac >= margin;
}

DcaIterate initial_iterate(const OptimizationInstance& inst) {
    feasibility_probe(inst);
    const std::size_t n = inst.size();
    const double l0 = 0.97 / static_cast<double>(n);
    const BitsConfig bits_cfg{inst.fpp, inst.d_base};

    for (const double fraction : {0.6, 0.85, 0.97}) {
        DcaIterate it;
        it.k.resize(n);
        it.r.resize(n);
        it.z.resize(n);
        it.u.resize(n);
        it.v.resize(n);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const ClientLink& link = inst.clients[i];
            auto [tau_r0, e_r0] = comp_costs(link.dev, inst.d, inst.d_base, 0.0);
            auto [tau_r1, e_r1] = comp_costs(link.dev, inst.d, inst.d_base, 1.0);
            const double tau_slope = tau_r1 - tau_r0;
            const double e_slope = e_r1 - e_r0;

            double r_cap = 0.5;
            if (tau_slope > 0.0) {
                r_cap = std::min(r_cap,
                                 (fraction * inst.tau_max - tau_r0) / tau_slope);
            }
            if (e_slope > 0.0) {
                r_cap = std::min(
                    r_cap, (fraction * link.energy_cap - e_r0) / e_slope);
            }
            const double r0 =
                std::clamp(r_cap, 1e-6, inst.r_max * (1.0 - 1e-9));
            it.r[i] = r0;

            auto [tau_c, e_c] = comp_costs(link.dev, inst.d, inst.d_base, r0);
            const double z_budget =
                std::min(inst.tau_max - tau_c,
                         (link.energy_cap - e_c) / link.ch.power_w);
            if (z_budget <= 0.0) {
                ok = false;
                break;
            }
            const double rate = uplink_rate(link.ch, l0);
            const double bits_budget = 0.9 * fraction * z_budget * rate;
            if (approx_bits(inst.k_min, bits_cfg) > bits_budget) {
                ok = false;
                break;
            }
            double k0;
            if (approx_bits(0.9, bits_cfg) <= bits_budget) {
                k0 = 0.9;
            } else {
                double lo = inst.k_min, hi = 0.9;
                for (int step = 0; step < 60; ++step) {
                    const double mid = 0.5 * (lo + hi);
                    (approx_bits(mid, bits_cfg) <= bits_budget ? lo : hi) = mid;
                }
                k0 = lo;
            }
            if (k0 <= inst.k_min * (1.0 + 1e-6)) {
                ok = false;
                break;
            }
            it.k[i] = k0;
            const double payload = approx_bits(k0, bits_cfg);
            double z0 = 1.02 * payload / rate;
            z0 = std::max(z0, std::min(1e-3 * inst.tau_max,
                                       0.95 * fraction * z_budget));
            it.z[i] = z0;
            it.u[i] = l0 * z0;
            it.v[i] = std::sqrt(1.02 * it.u[i]);
        }
        if (ok && strictly_feasible(inst, it, 1e-9)) return it;
    }
    throw InfeasibleError(
        "budgets admit no strictly interior start (feasible only degenerately)",
        "interior");
}

DcaIterate solve_subproblem(const OptimizationInstance& inst,
                            const DcaIterate& linearization_point,
                            double eps_ip) {
    const Subproblem sub = build_subproblem(inst, linearization_point);
    return unpack(ip_solve(sub, pack(linearization_point), eps_ip));
}

RoundPlan dca_solve(const OptimizationInstance& inst,
                    const std::optional<DcaIterate>& warm_start,
                    const SolverSettings& settings) {
    DcaIterate iterate;
    if (warm_start.has_value() && strictly_feasible(inst, *warm_start)) {
        iterate = *warm_start;
    } else {
        iterate = initial_iterate(inst);
    }

    RoundPlan plan;
    plan.objective_trace.push_back(plan_objective(inst, iterate.k, iterate.r));

    for (int outer = 0; outer < settings.max_outer; ++outer) {
        const DcaIterate next =
            solve_subproblem(inst, iterate, settings.eps_inner);
        const double obj_next = plan_objective(inst, next.k, next.r);
        const double obj_prev = plan.objective_trace.back();
        // the inner solver can be off by its duality gap, eps_inner in scaled
        // objective units (with a centering-quality factor); anything beyond
        // that is a real descent violation
        double cost_scale = 0.0;
        for (std::size_t i = 0; i < inst.size(); ++i) {
            const double gamma = inst.clients[i].gamma;
            cost_scale = std::max(cost_scale, inst.theta2 * gamma);
            if (inst.theta1 > 0.0) {
                cost_scale = std::max(
                    cost_scale, phi2_grad(iterate.r[i], inst.theta1 * gamma));
            }
        }
        if (obj_next > obj_prev + 1e-8 + 10.0 * settings.eps_inner * cost_scale) {
            throw std::logic_error("DCA step increased the objective");
        }
        plan.iterations = outer + 1;
        if (obj_next > obj_prev) {
            // within inner-solver noise of the fixed point; keep the
            // previous point so the recorded trace stays non-increasing
            plan.converged = true;
            break;
        }
        double delta = 0.0;
        const auto acc = [&delta](double a, double b) {
            delta = std::max(delta, std::abs(a - b));
        };
        for (std::size_t i = 0; i < inst.size(); ++i) {
            acc(next.k[i], iterate.k[i]);
            acc(next.r[i], iterate.r[i]);
            acc(next.z[i], iterate.z[i]);
            acc(next.u[i], iterate.u[i]);
            acc(next.v[i], iterate.v[i]);
        }
        iterate = next;
        plan.objective_trace.push_back(obj_next);
        if (delta <= settings.eps_outer) {
            plan.converged = true;
            break;
        }
    }

    plan.k = iterate.k;
    plan.r = iterate.r;
    plan.l.resize(inst.size());
    double sum_l = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        plan.l[i] = iterate.u[i] / iterate.z[i];
        sum_l += plan.l[i];
    }
    // the bandwidth budget is fully allocated; scaling fractions up only
    // raises rates, so feasibility is preserved
    if (sum_l > 0.0) {
        for (double& l : plan.l) l = std::min(1.0, l / sum_l);
    }
    plan.objective = plan.objective_trace.back();
    plan.iterate = std::move(iterate);
    plan.max_violation =
        feasibility_check(inst, plan.k, plan.r, plan.l).max_violation;
    return plan;
}

FeasibilityReport feasibility_check(const OptimizationInstance& inst,
                                    std::span<const double> k,
                                    std::span<const double> r,
                                    std::span<const double> l) {
    FeasibilityReport report;
    report.max_violation = -std::numeric_limits<double>::infinity();
    const BitsConfig bits_cfg{inst.fpp, inst.d_base};
    const auto consider = [&report](double violation, std::string name) {
        if (violation > report.max_violation) {
            report.max_violation = violation;
            report.worst_constraint = std::move(name);
        }
    };
    double sum_l = 0.0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const ClientLink& link = inst.clients[i];
        consider(inst.k_min - k[i], client_tag("k_lo", i));
        consider(k[i] - 1.0, client_tag("k_hi", i));
        consider(-r[i], client_tag("r_lo", i));
        consider(r[i] - inst.r_max, client_tag("r_hi", i));
        consider(-l[i], client_tag("l_lo", i));
        consider(l[i] - 1.0, client_tag("l_hi", i));
        sum_l += l[i];

        auto [tau_c, e_c] = comp_costs(link.dev, inst.d, inst.d_base, r[i]);
        double tau_comm = std::numeric_limits<double>::infinity();
        if (l[i] > 0.0 && k[i] > 0.0) {
            tau_comm =
                approx_bits(k[i], bits_cfg) / uplink_rate(link.ch, l[i]);
        }
        consider((tau_c + tau_comm - inst.tau_max) / inst.tau_max,
                 client_tag("tau", i));
        consider(
            (e_c + link.ch.power_w * tau_comm - link.energy_cap) /
                link.energy_cap,
            client_tag("energy", i));
    }
    consider(sum_l - 1.0, "sum_l");
    return report;
}

}  // namespace pfl
