#include "pfl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pfl/compression.hpp"
#include "pfl/kernels.hpp"
#include "pfl/optimizer.hpp"
#include "pfl/rng.hpp"

namespace pfl {

namespace {

MiniBatch draw_batch(const Dataset& data, ClientState& client,
                     std::size_t batch_size, std::uint64_t run_seed, int round) {
    const std::size_t want = std::min(batch_size, client.train_idx.size());
    if (client.cursor + want > client.epoch_order.size()) {
        Rng rng = derive_stream(run_seed, StreamPurpose::batch,
                                static_cast<std::uint64_t>(client.id),
                                static_cast<std::uint64_t>(round));
        client.epoch_order = client.train_idx;
        rng.shuffle(std::span<std::uint32_t>(client.epoch_order));
        client.cursor = 0;
    }
    MiniBatch batch{&data, {}};
    batch.indices.assign(client.epoch_order.begin() + client.cursor,
                         client.epoch_order.begin() + client.cursor + want);
    client.cursor += want;
    return batch;
}

ParamVector assemble(const ModelSpec& spec, std::span<const double> base,
                     std::span<const double> pers) {
    ParamVector params =
        ParamVector::zeros(spec.param_count(), spec.base_param_count());
    std::copy(base.begin(), base.end(), params.base().begin());
    std::copy(pers.begin(), pers.end(), params.pers().begin());
    return params;
}

struct ChannelDraw {
    ChannelState ch;
    DeviceProfile dev;
};

ChannelDraw draw_channel(const ScenarioConfig& cfg, std::uint64_t client,
                         std::uint64_t round) {
    Rng rng = derive_stream(cfg.seed, StreamPurpose::channel, client, round);
    // uniform over the coverage disc area
    const double distance =
        std::max(1e-6, cfg.phys.radius_km * std::sqrt(rng.uniform()));
    ChannelDraw draw;
    draw.ch.gain = path_loss_gain(distance);
    draw.ch.power_w =
        dbm_to_watt(rng.uniform(cfg.phys.power_dbm_lo, cfg.phys.power_dbm_hi));
    draw.ch.bandwidth_hz = cfg.phys.bandwidth_hz;
    draw.ch.noise_psd = cfg.phys.noise_psd_w_hz;
    draw.dev.cpu_hz = rng.uniform(cfg.phys.cpu_hz_lo, cfg.phys.cpu_hz_hi);
    draw.dev.energy_coeff = cfg.phys.energy_coeff;
    draw.dev.cycles_per_sample = cfg.phys.cycles_per_sample;
    draw.dev.batch = cfg.federation.batch_size;
    return draw;
}

// per-client cross-round state feeding the assumption audit
struct AuditTrack {
    bool has_prev = false;
    std::vector<double> prev_params;
    std::vector<double> prev_grad;
    double prev_loss = 0.0;
};

Dataset build_dataset(const ScenarioConfig& cfg) {
    Dataset data;
    if (cfg.data.source == DataSource::synthetic) {
        data = synth_dataset(cfg.data.synth, cfg.seed);
    } else {
        data = load_idx(cfg.data.idx_images, cfg.data.idx_labels);
    }
    if (cfg.data.limit > 0 && cfg.data.limit < data.size()) {
        data.features.resize(cfg.data.limit * data.dim);
        data.labels.resize(cfg.data.limit);
    }
    if (data.dim != cfg.model.input_dim || data.classes > cfg.model.classes) {
        throw std::invalid_argument(
            "dataset shape does not match the model (dim/classes)");
    }
    return data;
}

}  // namespace

ClientRoundResult client_round(const ModelSpec& spec, const Dataset& data,
                               ClientState& client,
                               std::span<const double> base_weights, double k,
                               double r, double l, double eta,
                               const ChannelState& ch, const DeviceProfile& dev,
                               const PlanConfig& plan, const PhysParams& phys,
                               std::uint64_t run_seed, int round,
                               bool log_bound_terms) {
    const std::size_t d = spec.param_count();
    const std::size_t d_base = spec.base_param_count();

    const MiniBatch batch = draw_batch(data, client, dev.batch, run_seed, round);

    ClientRoundResult result;
    ClientRoundRecord& rec = result.record;
    rec.k = k;
    rec.r = r;
    rec.l = l;

    std::span<const double> importance_grads;
    ParamVector pre_grad;
    if (plan.prune_strategy == PruneStrategy::importance && d > d_base) {
        const ParamVector unpruned = assemble(spec, base_weights, client.pers);
        pre_grad = grad(spec, unpruned, batch);
        importance_grads = pre_grad.pers();
    }
    const Mask prune_mask = make_prune_mask(
        client.pers, r, plan.prune_strategy, importance_grads,
        derive_stream(run_seed, StreamPurpose::prune_mask,
                      static_cast<std::uint64_t>(client.id),
                      static_cast<std::uint64_t>(round))
            .next_u64());
    std::vector<double> pruned_pers = apply_mask(client.pers, prune_mask);

    if (log_bound_terms) {
        const ParamVector unpruned = assemble(spec, base_weights, client.pers);
        rec.weight_sq = kernels::nrm2sq(unpruned.all());
    }

    const ParamVector params = assemble(spec, base_weights, pruned_pers);
    const ParamVector g_hat = grad(spec, params, batch);

    const Mask sparse_mask = make_sparse_mask(
        g_hat.base(), k, plan.sparse_strategy,
        derive_stream(run_seed, StreamPurpose::sparse_mask,
                      static_cast<std::uint64_t>(client.id),
                      static_cast<std::uint64_t>(round))
            .next_u64());

    SparseUpload& upload = result.upload;
    upload.client = client.id;
    for (std::size_t i = 0; i < d_base; ++i) {
        if (sparse_mask.indicator[i]) {
            upload.indices.push_back(static_cast<std::uint32_t>(i));
            upload.values.push_back(g_hat.base()[i]);
        }
    }

    const BitsConfig bits_cfg{phys.fpp, d_base};
    upload.payload_bits = approx_bits(k, bits_cfg);
    rec.bits_exact = exact_bits(k, bits_cfg);
    upload.cost = price_round(ch, dev, upload.payload_bits, l, d, d_base, r);
    rec.cost = upload.cost;
    rec.flops = phys.flops_per_cycle * static_cast<double>(dev.batch) *
                dev.cycles_per_sample *
                (static_cast<double>(d_base) + r * static_cast<double>(d - d_base)) /
                static_cast<double>(d);

    if (log_bound_terms) {
        MiniBatch full{&data, client.train_idx};
        auto [full_loss, full_grad] = loss_and_grad(spec, params, full);
        rec.grad_sq = kernels::nrm2sq(full_grad.all());
        rec.stoch_grad_sq = kernels::nrm2sq(g_hat.all());
        rec.grad_var = kernels::diff_nrm2sq(full_grad.all(), g_hat.all());
        result.full_loss = full_loss;
        result.full_grad = std::move(full_grad.values());
        result.pruned_params = params.values();
    }

    // w^P <- pruned w^P - eta * gradient at the pruned point
    client.pers = std::move(pruned_pers);
    kernels::axpy(-eta, g_hat.pers(), client.pers);
    return result;
}

void server_aggregate(std::span<const SparseUpload> uploads,
                      std::span<const double> gamma, std::span<double> base,
                      double eta) {
    const std::size_t n = gamma.size();
    if (uploads.size() != n) {
        throw std::runtime_error("aggregation needs exactly one upload per client");
    }
    std::vector<const SparseUpload*> ordered(n, nullptr);
    for (const SparseUpload& upload : uploads) {
        if (upload.client < 0 || static_cast<std::size_t>(upload.client) >= n ||
            ordered[upload.client] != nullptr) {
            throw std::runtime_error("duplicate or unknown client upload");
        }
        ordered[upload.client] = &upload;
    }
    std::vector<double> acc(base.size(), 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const SparseUpload& upload = *ordered[c];
        for (std::size_t i = 0; i < upload.indices.size(); ++i) {
            const std::uint32_t idx = upload.indices[i];
            if (idx >= base.size()) {
                throw std::runtime_error("upload index outside the base layers");
            }
            acc[idx] += gamma[c] * upload.values[i];
        }
    }
    kernels::axpy(-eta, acc, base);
}

RunHistory run_training(const ScenarioConfig& cfg) {
    cfg.model.validate();
    const ModelSpec& spec = cfg.model;
    const std::size_t n_clients = cfg.federation.clients;
    const std::size_t d = spec.param_count();
    const std::size_t d_base = spec.base_param_count();
    const double eta = cfg.federation.learning_rate;
    const int rounds = static_cast<int>(cfg.federation.rounds);

    const Dataset data = build_dataset(cfg);

    const auto partition =
        cfg.data.partition == PartitionMode::by_class
            ? partition_class(data, cfg.data.classes_per_client, n_clients,
                              cfg.seed)
            : partition_dirichlet(data, cfg.data.alpha, n_clients, cfg.seed);

    RunHistory history;
    std::size_t total_samples = 0;
    for (const auto& part : partition) total_samples += part.size();
    for (const auto& part : partition) {
        history.gamma.push_back(static_cast<double>(part.size()) /
                                static_cast<double>(total_samples));
    }

    std::vector<ClientState> clients(n_clients);
    for (std::size_t c = 0; c < n_clients; ++c) {
        ClientState& client = clients[c];
        client.id = static_cast<int>(c);
        client.gamma = history.gamma[c];
        auto [train_idx, test_idx] = holdout_split(
            data, partition[c], cfg.data.test_fraction,
            derive_stream(cfg.seed, StreamPurpose::holdout, c).next_u64());
        client.train_idx = std::move(train_idx);
        client.test_idx = std::move(test_idx);
        if (client.train_idx.empty()) {
            throw std::runtime_error("client " + std::to_string(c) +
                                     " has no training samples");
        }
        // per-client personalization init; the base comes from the server
        const ParamVector init = init_params(
            spec,
            derive_stream(cfg.seed, StreamPurpose::init_params, c + 1).next_u64());
        client.pers.assign(init.pers().begin(), init.pers().end());
    }

    ServerState server;
    server.eta = eta;
    {
        const ParamVector init = init_params(
            spec, derive_stream(cfg.seed, StreamPurpose::init_params, 0).next_u64());
        server.base.assign(init.base().begin(), init.base().end());
    }

    // frozen constants: per-client estimates, elementwise max across clients
    const bool need_constants =
        cfg.plan.mode == PlanMode::optimized || cfg.log_bound_terms;
    if (need_constants) {
        BoundConstants agg{};
        agg.eta = eta;
        agg.rounds = rounds;
        for (std::size_t c = 0; c < n_clients; ++c) {
            Dataset local;
            local.dim = data.dim;
            local.classes = data.classes;
            for (const std::uint32_t i : clients[c].train_idx) {
                const auto row = data.row(i);
                local.features.insert(local.features.end(), row.begin(), row.end());
                local.labels.push_back(data.labels[i]);
            }
            const BoundConstants est = estimate_constants(
                spec, local, cfg.constants.probe_count, cfg.federation.batch_size,
                eta, rounds,
                derive_stream(cfg.seed, StreamPurpose::probe, c).next_u64(),
                cfg.constants.safety);
            agg.l1 = std::max(agg.l1, est.l1);
            agg.l2 = std::max(agg.l2, est.l2);
            agg.g = std::max(agg.g, est.g);
            agg.m = std::max(agg.m, est.m);
            agg.sigma = std::max(agg.sigma, est.sigma);
        }
        history.constants = agg;
        if (cfg.plan.mode == PlanMode::optimized && !agg.eta_admissible()) {
            throw std::runtime_error(
                "learning rate violates eta <= 3/L2 for the estimated constants");
        }
        if (agg.eta_admissible()) {
            const ObjectiveCoeffs coeffs = objective_coeffs(agg);
            history.theta1 = coeffs.theta1;
            history.theta2 = coeffs.theta2;
        }
    }

    const auto evaluate = [&](RoundRecord& rec) {
        rec.weighted_loss = 0.0;
        rec.weighted_acc = 0.0;
        for (std::size_t c = 0; c < n_clients; ++c) {
            const ParamVector params =
                assemble(spec, server.base, clients[c].pers);
            MiniBatch full{&data, clients[c].train_idx};
            const double l = loss(spec, params, full);
            const double acc = clients[c].test_idx.empty()
                                   ? 0.0
                                   : accuracy(spec, params, data,
                                              clients[c].test_idx);
            rec.clients[c].train_loss = l;
            rec.clients[c].test_acc = acc;
            rec.weighted_loss += history.gamma[c] * l;
            rec.weighted_acc += history.gamma[c] * acc;
        }
    };

    // init snapshot
    {
        RoundRecord rec;
        rec.round = 0;
        rec.clients.resize(n_clients);
        evaluate(rec);
        history.records.push_back(std::move(rec));
    }

    // rolling per-client energy allowance for the optimizer's amortized caps
    std::vector<double> allowance(n_clients, 0.0);
    const double per_round_energy =
        cfg.budgets.energy_max_j / std::max(1, rounds);
    std::optional<DcaIterate> warm;
    std::vector<AuditTrack> tracks(n_clients);

    for (int t = 1; t <= rounds; ++t) {
        server.round = t;
        RoundRecord rec;
        rec.round = t;
        rec.clients.resize(n_clients);

        std::vector<ChannelDraw> draws;
        draws.reserve(n_clients);
        for (std::size_t c = 0; c < n_clients; ++c) {
            draws.push_back(draw_channel(cfg, c, static_cast<std::uint64_t>(t)));
        }
        for (std::size_t c = 0; c < n_clients; ++c) {
            allowance[c] += per_round_energy;
        }

        std::vector<double> plan_k(n_clients), plan_r(n_clients),
            plan_l(n_clients, 1.0 / static_cast<double>(n_clients));
        switch (cfg.plan.mode) {
            case PlanMode::fedavg:
            case PlanMode::fedper:
                std::fill(plan_k.begin(), plan_k.end(), 1.0);
                std::fill(plan_r.begin(), plan_r.end(), 1.0);
                break;
            case PlanMode::fixed:
                std::fill(plan_k.begin(), plan_k.end(), cfg.plan.fixed_k);
                std::fill(plan_r.begin(), plan_r.end(), cfg.plan.fixed_r);
                break;
            case PlanMode::optimized: {
                bool solved = false;
                if (std::all_of(allowance.begin(), allowance.end(),
                                [](double a) { return a > 0.0; })) {
                    std::vector<ClientLink> links(n_clients);
                    for (std::size_t c = 0; c < n_clients; ++c) {
                        links[c].ch = draws[c].ch;
                        links[c].dev = draws[c].dev;
                        links[c].gamma = history.gamma[c];
                        links[c].energy_cap = allowance[c];
                    }
                    try {
                        OptimizationInstance inst = build_instance(
                            std::move(links), *history.constants, d, d_base,
                            cfg.phys.fpp, cfg.budgets.tau_max_s,
                            cfg.optimizer.k_min, cfg.optimizer.r_max);
                        SolverSettings settings;
                        settings.eps_inner = cfg.optimizer.eps_inner;
                        settings.eps_outer = cfg.optimizer.eps_outer;
                        settings.max_outer = cfg.optimizer.max_iters;
                        RoundPlan plan = dca_solve(inst, warm, settings);
                        plan_k = plan.k;
                        plan_r = plan.r;
                        plan_l = plan.l;
                        rec.solver_iterations = plan.iterations;
                        rec.solver_objective = plan.objective;
                        rec.solver_max_violation = plan.max_violation;
                        rec.solver_converged = plan.converged;
                        warm = std::move(plan.iterate);
                        solved = true;
                    } catch (const InfeasibleError&) {
                        solved = false;
                    }
                }
                if (!solved) {
                    if (!cfg.plan.fallback_on_infeasible) {
                        throw std::runtime_error(
                            "round " + std::to_string(t) +
                            ": joint optimization infeasible and fallback disabled");
                    }
                    std::fill(plan_k.begin(), plan_k.end(), cfg.optimizer.k_min);
                    std::fill(plan_r.begin(), plan_r.end(), 1.0);
                    rec.fallback_used = true;
                    warm.reset();
                }
                break;
            }
        }

        std::vector<SparseUpload> uploads;
        uploads.reserve(n_clients);
        for (std::size_t c = 0; c < n_clients; ++c) {
            ClientRoundResult result = client_round(
                spec, data, clients[c], server.base, plan_k[c], plan_r[c],
                plan_l[c], eta, draws[c].ch, draws[c].dev, cfg.plan, cfg.phys,
                cfg.seed, t, cfg.log_bound_terms);
            rec.clients[c] = result.record;
            rec.round_latency =
                std::max(rec.round_latency, result.record.cost.tau_all);
            allowance[c] -=
                result.record.cost.e_comm + result.record.cost.e_comp;

            if (cfg.log_bound_terms) {
                AuditTrack& track = tracks[c];
                if (track.has_prev) {
                    const double dist = std::sqrt(kernels::diff_nrm2sq(
                        result.pruned_params, track.prev_params));
                    if (dist > 1e-12) {
                        history.audit.max_l1_ratio = std::max(
                            history.audit.max_l1_ratio,
                            std::abs(result.full_loss - track.prev_loss) / dist);
                        history.audit.max_l2_ratio = std::max(
                            history.audit.max_l2_ratio,
                            std::sqrt(kernels::diff_nrm2sq(result.full_grad,
                                                           track.prev_grad)) /
                                dist);
                    }
                }
                track.prev_params = std::move(result.pruned_params);
                track.prev_grad = std::move(result.full_grad);
                track.prev_loss = result.full_loss;
                track.has_prev = true;
                history.audit.max_stoch_grad_sq =
                    std::max(history.audit.max_stoch_grad_sq,
                             result.record.stoch_grad_sq);
                history.audit.max_weight_sq = std::max(
                    history.audit.max_weight_sq, result.record.weight_sq);
                history.audit.max_grad_variance = std::max(
                    history.audit.max_grad_variance, result.record.grad_var);
            }
            uploads.push_back(std::move(result.upload));
        }

        server_aggregate(uploads, history.gamma, server.base, server.eta);

        if (history.constants.has_value()) {
            const BoundConstants& c = *history.constants;
            for (std::size_t i = 0; i < n_clients; ++i) {
                rec.clients[i].psi1_term = psi1(plan_r[i], c);
            }
            rec.psi2_term = psi2(plan_k, history.gamma, c);
        }

        evaluate(rec);
        history.records.push_back(std::move(rec));
    }

    return history;
}

BoundCheck check_convergence_bound(const RunHistory& history) {
    if (!history.constants.has_value()) {
        throw std::invalid_argument("run did not log bound constants");
    }
    const BoundConstants& constants = *history.constants;
    const std::size_t n = history.gamma.size();
    const std::size_t rounds = history.records.size() - 1;
    if (rounds == 0) throw std::invalid_argument("run has no training rounds");

    std::vector<std::vector<std::pair<double, double>>> schedule(rounds);
    double measured = 0.0;
    for (std::size_t t = 1; t <= rounds; ++t) {
        const RoundRecord& rec = history.records[t];
        schedule[t - 1].resize(n);
        for (std::size_t c = 0; c < n; ++c) {
            schedule[t - 1][c] = {rec.clients[c].r, rec.clients[c].k};
            measured += history.gamma[c] * rec.clients[c].grad_sq;
        }
    }
    measured /= static_cast<double>(rounds);

    std::vector<double> initial_losses(n);
    for (std::size_t c = 0; c < n; ++c) {
        initial_losses[c] = history.records.front().clients[c].train_loss;
    }
    const std::vector<double> lower_bounds(n, 0.0);  // cross-entropy >= 0

    BoundCheck check;
    check.measured = measured;
    check.bound = convergence_bound(schedule, history.gamma, constants,
                                initial_losses, lower_bounds);
    check.holds = measured <= check.bound;
    if (!check.holds) {
        check.breached = breached_assumptions(history.audit, constants);
    }
    return check;
}

}  // namespace pfl
