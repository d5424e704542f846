#pragma once

#include <cstdint>
#include <string>

#include "pfl/compression.hpp"
#include "pfl/dataset.hpp"
#include "pfl/model.hpp"

#include <nlohmann/json_fwd.hpp>

namespace pfl {

enum class PlanMode { fedavg, fedper, fixed, optimized };
enum class DataSource { synthetic, idx };
enum class PartitionMode { by_class, dirichlet };

struct PhysParams {
    double bandwidth_hz = 1e7;
    double noise_psd_w_hz = 0.0;   // converted from dBm/Hz at load
    double noise_psd_dbm_hz = -174.0;
    double power_dbm_lo = 20.0;    // draws are uniform in dBm, stored in W
    double power_dbm_hi = 28.0;
    double cpu_hz_lo = 5e8;
    double cpu_hz_hi = 3e9;
    double radius_km = 0.2;
    double cycles_per_sample = 1e6;
    double energy_coeff = 1e-27;  // J*s^2
    int fpp = 32;
    double flops_per_cycle = 2.0;
};

struct DataConfig {
    DataSource source = DataSource::synthetic;
    SynthParams synth;
    std::string idx_images;
    std::string idx_labels;
    PartitionMode partition = PartitionMode::by_class;
    std::size_t classes_per_client = 2;
    double alpha = 0.5;
    double test_fraction = 0.2;
    std::size_t limit = 0;  // 0 = use everything
};

struct FederationConfig {
    std::size_t clients = 8;
    std::size_t rounds = 40;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
};

struct PlanConfig {
    PlanMode mode = PlanMode::optimized;
    double fixed_k = 1.0;
    double fixed_r = 1.0;
    PruneStrategy prune_strategy = PruneStrategy::magnitude;
    SparseStrategy sparse_strategy = SparseStrategy::topk;
    bool fallback_on_infeasible = true;
};

struct BudgetConfig {
    double tau_max_s = 1.0;
    double energy_max_j = 100.0;
};

struct OptimizerConfig {
    double k_min = 1e-3;
    double r_max = 0.999;
    double eps_inner = 1e-6;
    double eps_outer = 1e-4;
    int max_iters = 50;
};

struct ConstantsConfig {
    std::size_t probe_count = 8;
    double safety = 1.2;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    ModelSpec model;
    DataConfig data;
    FederationConfig federation;
    PhysParams phys;
    PlanConfig plan;
    BudgetConfig budgets;
    OptimizerConfig optimizer;
    ConstantsConfig constants;
    bool log_bound_terms = true;
};

double dbm_to_watt(double dbm);

// Parse/serialize with field-level diagnostics on invalid values; parsing
// round-trips through serialize_config.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);
nlohmann::json serialize_config(const ScenarioConfig& cfg);

}  // namespace pfl
