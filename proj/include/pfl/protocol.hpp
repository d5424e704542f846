#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pfl/config.hpp"
#include "pfl/dataset.hpp"
#include "pfl/mec.hpp"
#include "pfl/metrics.hpp"
#include "pfl/model.hpp"

namespace pfl {

struct ClientState {
    int id = 0;
    double gamma = 0.0;
    std::vector<std::uint32_t> train_idx;
    std::vector<std::uint32_t> test_idx;
    std::vector<double> pers;  // w_n^P, never uploaded
    // epoch sampling state; reshuffled (seeded) when exhausted
    std::vector<std::uint32_t> epoch_order;
    std::size_t cursor = 0;
};

struct ServerState {
    std::vector<double> base;  // w^B, broadcast to every client each round
    int round = 0;
    double eta = 0.0;
};

// Only base-layer coordinates leave the client.
struct SparseUpload {
    int client = 0;
    std::vector<std::uint32_t> indices;  // strictly increasing, < d_base
    std::vector<double> values;
    double payload_bits = 0.0;
    CostReport cost;
};

struct ClientRoundResult {
    SparseUpload upload;
    ClientRoundRecord record;  // plan, costs, and bound measurements
    // audit support, filled when bound terms are logged
    double full_loss = 0.0;            // full-batch risk at the pruned iterate
    std::vector<double> full_grad;     // full-batch gradient there
    std::vector<double> pruned_params; // the iterate itself
};

// One client round in order: prune the personalization layers, take the
// stochastic gradient at the pruned model, sparsify its base part, update
// the personalization layers locally, price the round.
ClientRoundResult client_round(const ModelSpec& spec, const Dataset& data,
                               ClientState& client,
                               std::span<const double> base_weights, double k,
                               double r, double l, double eta,
                               const ChannelState& ch, const DeviceProfile& dev,
                               const PlanConfig& plan, const PhysParams& phys,
                               std::uint64_t run_seed, int round,
                               bool log_bound_terms);

// w^B <- w^B - eta * sum_n gamma_n * upload_n, folded in ascending client id.
// Exactly one upload per client is required.
void server_aggregate(std::span<const SparseUpload> uploads,
                      std::span<const double> gamma, std::span<double> base,
                      double eta);

RunHistory run_training(const ScenarioConfig& cfg);

// Evaluates the convergence guarantee against a completed run that logged
// bound terms; on violation lists the empirically breached assumptions.
struct BoundCheck {
    double measured = 0.0;  // time-averaged weighted squared gradient norm
    double bound = 0.0;
    bool holds = false;
    std::vector<std::string> breached;
};

BoundCheck check_convergence_bound(const RunHistory& history);

}  // namespace pfl
