#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pfl/bound.hpp"
#include "pfl/mec.hpp"

namespace pfl {

// Per-client slice of one round. Round 0 is the initialization snapshot
// (no plan, no costs); rounds t >= 1 carry the plan the round executed,
// its measured costs, and the post-round evaluation.
struct ClientRoundRecord {
    double k = 0.0;
    double r = 0.0;
    double l = 0.0;
    CostReport cost;        // priced on the surrogate payload (bits field)
    double bits_exact = 0.0;
    double flops = 0.0;
    double train_loss = 0.0;  // full local batch at the round's end
    double test_acc = 0.0;
    // bound-term measurements (when enabled); taken during the round at the
    // pruned iterate
    double grad_sq = 0.0;        // ||full-batch gradient||^2
    double stoch_grad_sq = 0.0;  // ||mini-batch gradient||^2
    double weight_sq = 0.0;      // ||w_{n,t}||^2 before pruning
    double grad_var = 0.0;       // ||full - mini||^2
    double psi1_term = 0.0;
};

struct RoundRecord {
    int round = 0;
    std::vector<ClientRoundRecord> clients;
    double weighted_loss = 0.0;
    double weighted_acc = 0.0;
    double round_latency = 0.0;  // max over clients (synchronous rounds)
    double psi2_term = 0.0;
    int solver_iterations = 0;
    double solver_objective = 0.0;
    double solver_max_violation = 0.0;
    bool solver_converged = false;
    bool fallback_used = false;
};

struct RunSummary {
    std::size_t clients = 0;
    std::size_t rounds = 0;
    double final_weighted_acc = 0.0;
    double final_weighted_loss = 0.0;
    double total_latency = 0.0;
    double total_bits = 0.0;
    double total_energy = 0.0;
    double total_flops = 0.0;
    double avg_k = 0.0;  // over executed (round, client) plans
    double avg_r = 0.0;
    // per-round cumulative traces (index t = rounds 0..T; round 0 is zero cost)
    std::vector<double> cum_latency;
    std::vector<double> cum_bits;
    std::vector<double> cum_energy;
    std::vector<double> cum_flops;
    std::vector<double> weighted_acc;
    std::vector<double> weighted_loss;
};

struct RunHistory {
    std::vector<double> gamma;
    std::vector<RoundRecord> records;  // size rounds + 1 (init snapshot first)
    std::optional<BoundConstants> constants;
    AssumptionAudit audit;  // filled when bound terms were logged
    double theta1 = 0.0;
    double theta2 = 0.0;
};

RunSummary summarize(const RunHistory& history);

// rounds.csv: one row per (round, client)
void write_rounds_csv(const RunHistory& history, const std::string& path);
// summary.json: totals plus the cumulative traces compare_runs consumes
void write_summary_json(const RunHistory& history, const std::string& path);
// plot data matching the loss/accuracy vs cumulative latency axes
void write_plot_csvs(const RunHistory& history, const std::string& directory);

struct ToaRow {
    std::string run;
    bool reached = false;
    double latency = 0.0;
    double bits = 0.0;
    double energy = 0.0;
    double flops = 0.0;
};

// First cumulative cost at which the weighted accuracy reaches the target;
// reads summary.json files produced by write_summary_json.
ToaRow time_to_accuracy(const std::string& summary_path, double target);

}  // namespace pfl
