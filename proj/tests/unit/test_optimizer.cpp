#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <vector>

#include "pfl/bound.hpp"
#include "pfl/compression.hpp"
#include "pfl/mec.hpp"
#include "pfl/optimizer.hpp"
#include "pfl/rng.hpp"

using namespace pfl;

namespace {

ChannelState test_channel(double distance_km, double bandwidth_hz,
                          double power_w = 0.2) {
    ChannelState ch;
    ch.gain = path_loss_gain(distance_km);
    ch.power_w = power_w;
    ch.bandwidth_hz = bandwidth_hz;
    ch.noise_psd = 3.9810717055349565e-21;  // -174 dBm/Hz
    return ch;
}

DeviceProfile test_device(double cpu_hz = 1e9) {
    DeviceProfile dev;
    dev.cpu_hz = cpu_hz;
    dev.energy_coeff = 1e-27;
    dev.cycles_per_sample = 1e6;
    dev.batch = 32;
    return dev;
}

OptimizationInstance uniform_instance(std::size_t n, double bandwidth_hz,
                                      double tau_max, double energy_cap,
                                      double theta1 = 4.0, double theta2 = 1.0) {
    OptimizationInstance inst;
    inst.theta1 = theta1;
    inst.theta2 = theta2;
    inst.d = 2000;
    inst.d_base = 1500;
    inst.fpp = 32;
    inst.tau_max = tau_max;
    for (std::size_t i = 0; i < n; ++i) {
        ClientLink link;
        link.ch = test_channel(0.1, bandwidth_hz);
        link.dev = test_device();
        link.gamma = 1.0 / static_cast<double>(n);
        link.energy_cap = energy_cap;
        inst.clients.push_back(link);
    }
    return inst;
}

// exhaustive oracle over (k, r, l) for N <= 2; objective separates per client
// once the bandwidth split is fixed
double grid_oracle(const OptimizationInstance& inst, double res) {
    const BitsConfig bits_cfg{inst.fpp, inst.d_base};
    std::vector<double> l_grid;
    for (double l = res; l <= 1.0 + 1e-12; l += res) {
        l_grid.push_back(std::min(l, 1.0));
    }

    const auto best_for = [&](std::size_t n, double l) {
        const ClientLink& link = inst.clients[n];
        const double rate = uplink_rate(link.ch, l);
        double best = std::numeric_limits<double>::infinity();
        for (double k = inst.k_min; k <= 1.0 + 1e-12; k += res) {
            const double kk = std::min(k, 1.0);
            const double tau_comm = approx_bits(kk, bits_cfg) / rate;
            for (double r = 0.0; r <= inst.r_max + 1e-12; r += res) {
                const double rr = std::min(r, inst.r_max);
                auto [tau_c, e_c] = comp_costs(link.dev, inst.d, inst.d_base, rr);
                if (tau_c + tau_comm > inst.tau_max) continue;
                if (e_c + link.ch.power_w * tau_comm > link.energy_cap) continue;
                const double obj =
                    link.gamma * (inst.theta1 * std::sqrt(1.0 - rr) -
                                  inst.theta2 * kk);
                best = std::min(best, obj);
            }
        }
        return best;
    };

    if (inst.size() == 1) {
        double best = std::numeric_limits<double>::infinity();
        for (const double l : l_grid) best = std::min(best, best_for(0, l));
        return best;
    }
    REQUIRE(inst.size() == 2);
    std::vector<double> best0, best1;
    for (const double l : l_grid) {
        best0.push_back(best_for(0, l));
        best1.push_back(best_for(1, l));
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < l_grid.size(); ++i) {
        for (std::size_t j = 0; j < l_grid.size(); ++j) {
            if (l_grid[i] + l_grid[j] > 1.0 + 1e-12) continue;
            best = std::min(best, best0[i] + best1[j]);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("convex pieces") {
    SUBCASE("phi1 endpoints and slope") {
        CHECK(phi1(1.0, 1500, 32) == doctest::Approx(-1500.0 * 33));
        // finite-difference check of the gradient
        const double h = 1e-7;
        for (double k : {0.01, 0.2, 0.9}) {
            const double numeric =
                (phi1(k + h, 1500, 32) - phi1(k - h, 1500, 32)) / (2 * h);
            CHECK(phi1_grad(k, 1500, 32) == doctest::Approx(numeric).epsilon(1e-6));
        }
        CHECK_THROWS_AS(phi1(0.0, 1500, 32), std::domain_error);
    }
    SUBCASE("phi2 gradient at the origin") {
        CHECK(phi2_grad(0.0, 1.0) == doctest::Approx(0.5));
        CHECK(phi2(0.0, 2.0) == doctest::Approx(-2.0));
        CHECK_THROWS_AS(phi2(1.0, 1.0), std::domain_error);
    }
    SUBCASE("lambda1 is the perspective of the negated rate") {
        const ChannelState ch = test_channel(0.15, 1e7);
        for (double z : {0.01, 0.1, 1.0}) {
            for (double frac : {0.05, 0.3, 0.7, 1.0}) {
                const double u = frac * z;
                const double direct = lambda1(u, z, ch);
                const double perspective = -z * uplink_rate(ch, frac);
                CHECK(direct == doctest::Approx(perspective).epsilon(1e-9));
            }
        }
        CHECK(lambda1(0.0, 0.5, ch) == 0.0);
        CHECK_THROWS_AS(lambda1(-0.1, 0.5, ch), std::domain_error);
    }
    SUBCASE("lambda2 is linear") {
        CHECK(lambda2(0.4, 2.5) == doctest::Approx(-1.0));
    }
}

TEST_CASE("build_instance wires the objective coefficients and validates") {
    BoundConstants constants;
    constants.l1 = 1.0;
    constants.m = 1.0;
    constants.l2 = 5.0;
    constants.g = 2.0;
    constants.sigma = 0.5;
    constants.eta = 0.01;
    constants.rounds = 100;

    std::vector<ClientLink> links(2);
    for (auto& link : links) {
        link.ch = test_channel(0.1, 1e7);
        link.dev = test_device();
        link.gamma = 0.5;
        link.energy_cap = 5.0;
    }
    const OptimizationInstance inst =
        build_instance(links, constants, 2000, 1500, 32, 1.0);
    CHECK(inst.theta1 == doctest::Approx(2.0));
    CHECK(inst.theta2 ==
          doctest::Approx((3.0 - 0.05) * 4.0 / 100.0));
    CHECK(inst.d_base == 1500);

    CHECK_THROWS_AS(build_instance({}, constants, 2000, 1500, 32, 1.0),
                    std::invalid_argument);
    std::vector<ClientLink> bad = links;
    bad[0].energy_cap = 0.0;
    CHECK_THROWS_AS(build_instance(bad, constants, 2000, 1500, 32, 1.0),
                    std::invalid_argument);
    // the probe runs inside build_instance: sub-floor latency budget rejects
    CHECK_THROWS_AS(build_instance(links, constants, 2000, 1500, 32, 0.02),
                    InfeasibleError);
}

TEST_CASE("feasibility probe diagnoses the binding constraint") {
    SUBCASE("generous budgets pass") {
        const OptimizationInstance inst = uniform_instance(4, 1e7, 10.0, 10.0);
        CHECK_NOTHROW(feasibility_probe(inst));
    }
    SUBCASE("tau_max below the r=0 compute floor is compute-bound") {
        // compute latency at r=0 is b C d_base / (omega d) = 24 ms
        const OptimizationInstance inst = uniform_instance(2, 1e7, 0.02, 10.0);
        try {
            feasibility_probe(inst);
            FAIL("expected infeasibility");
        } catch (const InfeasibleError& e) {
            CHECK(e.binding().find("tau_comp") != std::string::npos);
        }
    }
    SUBCASE("starved uplink is communication-bound") {
        // compute floor is 24 ms; the leftover cannot carry even k_min
        OptimizationInstance inst = uniform_instance(2, 1e3, 0.0245, 10.0);
        try {
            feasibility_probe(inst);
            FAIL("expected infeasibility");
        } catch (const InfeasibleError& e) {
            CHECK(e.binding().find("tau_comm") != std::string::npos);
        }
    }
    SUBCASE("empty instance is rejected") {
        OptimizationInstance inst;
        CHECK_THROWS_AS(feasibility_probe(inst), std::invalid_argument);
    }
}

TEST_CASE("subproblem solutions") {
    SolverSettings settings;

    SUBCASE("inactive constraints push k to its upper box corner") {
        const OptimizationInstance inst = uniform_instance(1, 1e7, 10.0, 10.0);
        const DcaIterate start = initial_iterate(inst);
        const DcaIterate sol = solve_subproblem(inst, start, settings.eps_inner);
        CHECK(sol.k[0] >= 1.0 - 1e-3);
    }
    SUBCASE("theta1 = 0 freezes the pruning rate at its previous value") {
        const OptimizationInstance inst =
            uniform_instance(1, 1e7, 10.0, 10.0, /*theta1=*/0.0);
        const DcaIterate start = initial_iterate(inst);
        const DcaIterate sol = solve_subproblem(inst, start, settings.eps_inner);
        CHECK(sol.r[0] == start.r[0]);
        CHECK(sol.k[0] > start.k[0]);  // k still optimized
    }
    SUBCASE("two-client subproblem matches a dense grid over the "
            "linearized feasible set") {
        // budgets chosen so the latency constraint binds
        OptimizationInstance inst = uniform_instance(2, 2e6, 0.05, 10.0);
        const DcaIterate start = initial_iterate(inst);
        const DcaIterate sol = solve_subproblem(inst, start, settings.eps_inner);

        // grid over (k, r, l); slacks set from the binding relations
        const BitsConfig bits_cfg{inst.fpp, inst.d_base};
        const double res = 0.01;
        const auto sub_cost = [&](std::size_t n, double k, double r) {
            const double tg1 = inst.theta1 * inst.clients[n].gamma;
            const double tg2 = inst.theta2 * inst.clients[n].gamma;
            return -tg2 * k - phi2_grad(start.r[n], tg1) * r;
        };
        const auto best_for = [&](std::size_t n, double l) {
            const ClientLink& link = inst.clients[n];
            const double rate = uplink_rate(link.ch, l);
            double best = std::numeric_limits<double>::infinity();
            for (double k = inst.k_min; k <= 1.0 + 1e-12; k += res) {
                const double kk = std::min(k, 1.0);
                const double payload =
                    -(phi1(start.k[n], inst.d_base, inst.fpp) +
                      phi1_grad(start.k[n], inst.d_base, inst.fpp) *
                          (kk - start.k[n]));
                const double z = payload / rate;
                for (double r = 0.0; r <= inst.r_max + 1e-12; r += res) {
                    const double rr = std::min(r, inst.r_max);
                    auto [tau_c, e_c] =
                        comp_costs(link.dev, inst.d, inst.d_base, rr);
                    if (tau_c + z > inst.tau_max) continue;
                    if (e_c + link.ch.power_w * z > link.energy_cap) continue;
                    best = std::min(best, sub_cost(n, kk, rr));
                }
            }
            return best;
        };
        double grid_best = std::numeric_limits<double>::infinity();
        for (double l1 = res; l1 < 1.0; l1 += res) {
            for (double l2 = res; l1 + l2 <= 1.0 + 1e-12; l2 += res) {
                grid_best =
                    std::min(grid_best, best_for(0, l1) + best_for(1, l2));
            }
        }
        double ip_obj = 0.0;
        for (std::size_t n = 0; n < 2; ++n) {
            ip_obj += sub_cost(n, sol.k[n], sol.r[n]);
        }
        CHECK(std::abs(ip_obj - grid_best) <=
              1.5e-2 * (1.0 + std::abs(grid_best)));
    }
}

TEST_CASE("dca_solve") {
    SolverSettings settings;

    SUBCASE("one client with slack budgets lands on the box corner") {
        const OptimizationInstance inst = uniform_instance(1, 1e7, 10.0, 10.0);
        const RoundPlan plan = dca_solve(inst, std::nullopt, settings);
        CHECK(plan.converged);
        CHECK(plan.k[0] >= 1.0 - 1e-3);
        CHECK(plan.r[0] >= inst.r_max - 1e-3);
        CHECK(plan.l[0] == doctest::Approx(1.0));
    }

    SUBCASE("communication-bound client matches the bisection oracle") {
        // near-instant compute, so tau_max is spent on the uplink; the dense
        // payload needs ~1.7 ms at this rate, above the 1 ms budget
        OptimizationInstance inst = uniform_instance(1, 2e6, 0.001, 100.0);
        inst.clients[0].dev.cycles_per_sample = 1e3;
        const RoundPlan plan = dca_solve(inst, std::nullopt, settings);
        REQUIRE(plan.converged);
        CHECK(plan.k[0] < 1.0);

        const BitsConfig bits_cfg{inst.fpp, inst.d_base};
        const double rate = uplink_rate(inst.clients[0].ch, 1.0);
        auto [tau_c, e_c] =
            comp_costs(inst.clients[0].dev, inst.d, inst.d_base, plan.r[0]);
        const double budget = (inst.tau_max - tau_c) * rate;
        double lo = inst.k_min, hi = 1.0;
        for (int i = 0; i < 80; ++i) {
            const double mid = 0.5 * (lo + hi);
            (approx_bits(mid, bits_cfg) <= budget ? lo : hi) = mid;
        }
        CHECK(plan.k[0] == doctest::Approx(lo).epsilon(2e-3));

        const double tau_comm = approx_bits(plan.k[0], bits_cfg) /
                                uplink_rate(inst.clients[0].ch, plan.l[0]);
        CHECK(tau_comm + tau_c == doctest::Approx(inst.tau_max).epsilon(1e-3));
    }

    SUBCASE("symmetric clients share the bandwidth equally") {
        const OptimizationInstance inst = uniform_instance(3, 2e6, 0.06, 10.0);
        const RoundPlan plan = dca_solve(inst, std::nullopt, settings);
        REQUIRE(plan.converged);
        for (const double l : plan.l) {
            CHECK(l == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
        }
    }

    SUBCASE("descent, feasibility, and slack consistency on random instances") {
        Rng rng(2024);
        for (int trial = 0; trial < 8; ++trial) {
            const std::size_t n = 1 + rng.below(5);
            OptimizationInstance inst;
            inst.theta1 = rng.uniform(0.5, 20.0);
            inst.theta2 = rng.uniform(0.05, 5.0);
            inst.d = 2000;
            inst.d_base = 1500;
            inst.fpp = 32;
            inst.tau_max = rng.uniform(0.04, 0.4);
            double gamma_total = 0.0;
            std::vector<double> gammas(n);
            for (auto& g : gammas) {
                g = rng.uniform(0.5, 2.0);
                gamma_total += g;
            }
            for (std::size_t i = 0; i < n; ++i) {
                ClientLink link;
                link.ch = test_channel(rng.uniform(0.05, 0.2),
                                       rng.uniform(1e6, 1e7),
                                       rng.uniform(0.1, 0.6));
                link.dev = test_device(rng.uniform(5e8, 3e9));
                link.gamma = gammas[i] / gamma_total;
                link.energy_cap = rng.uniform(0.05, 1.0);
                inst.clients.push_back(link);
            }
            RoundPlan plan;
            try {
                plan = dca_solve(inst, std::nullopt, settings);
            } catch (const InfeasibleError&) {
                continue;  // probe rejected the draw; nothing to check
            }
            for (std::size_t i = 1; i < plan.objective_trace.size(); ++i) {
                CHECK(plan.objective_trace[i] <=
                      plan.objective_trace[i - 1] + 1e-8);
            }
            CHECK(plan.max_violation <= 1e-6);
            double sum_l = 0.0;
            for (const double l : plan.l) sum_l += l;
            CHECK(sum_l <= 1.0 + 1e-6);

            // relaxed capacity inequality binds in the right direction
            const BitsConfig bits_cfg{inst.fpp, inst.d_base};
            for (std::size_t i = 0; i < n; ++i) {
                const double capacity =
                    -lambda1(plan.iterate.u[i], plan.iterate.z[i],
                             inst.clients[i].ch);
                CHECK(capacity >=
                      approx_bits(plan.k[i], bits_cfg) * (1.0 - 1e-9));
            }
        }
    }

    SUBCASE("small instances stay within 5% of the exhaustive grid") {
        Rng rng(77);
        for (int trial = 0; trial < 3; ++trial) {
            OptimizationInstance inst =
                uniform_instance(1 + rng.below(2), rng.uniform(1e6, 4e6),
                                 rng.uniform(0.04, 0.1), rng.uniform(0.1, 0.5),
                                 rng.uniform(2.0, 10.0), rng.uniform(0.2, 2.0));
            RoundPlan plan;
            try {
                plan = dca_solve(inst, std::nullopt, settings);
            } catch (const InfeasibleError&) {
                continue;
            }
            const double oracle = grid_oracle(inst, 0.01);
            CHECK(plan.objective <= oracle + 0.05 * std::abs(oracle) + 1e-9);
        }
    }
}

TEST_CASE("feasibility_check") {
    const OptimizationInstance inst = uniform_instance(2, 1e7, 1.0, 10.0);

    SUBCASE("boundary bandwidth sum passes") {
        const std::vector<double> k{0.5, 0.5}, r{0.5, 0.5}, l{0.5, 0.5};
        const FeasibilityReport report = feasibility_check(inst, k, r, l);
        CHECK(report.feasible());
    }
    SUBCASE("violations name the constraint") {
        const std::vector<double> k{0.5, 0.5}, r{0.5, 0.5}, l{0.8, 0.8};
        const FeasibilityReport report = feasibility_check(inst, k, r, l);
        CHECK(!report.feasible());
        CHECK(report.worst_constraint == "sum_l");

        const std::vector<double> bad_r{0.5, 1.2};
        const FeasibilityReport report2 =
            feasibility_check(inst, k, bad_r, std::vector<double>{0.5, 0.5});
        CHECK(!report2.feasible());
        CHECK(report2.worst_constraint == "r_hi[1]");
    }
}
