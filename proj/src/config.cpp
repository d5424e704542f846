#include "pfl/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pfl {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

template <typename T>
T get_or(const json& j, const std::string& field, T fallback) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        fail(field, "wrong type");
    }
}

void require_range(double value, double lo, double hi, const std::string& field) {
    if (!(value >= lo && value <= hi)) {
        fail(field, "value " + std::to_string(value) + " outside [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

Arch parse_arch(const std::string& s) {
    if (s == "logreg") return Arch::logreg;
    if (s == "mlp") return Arch::mlp;
    fail("model.arch", "expected 'logreg' or 'mlp', got '" + s + "'");
}

PlanMode parse_mode(const std::string& s) {
    if (s == "fedavg") return PlanMode::fedavg;
    if (s == "fedper") return PlanMode::fedper;
    if (s == "fixed") return PlanMode::fixed;
    if (s == "optimized") return PlanMode::optimized;
    fail("plan.mode", "expected fedavg|fedper|fixed|optimized, got '" + s + "'");
}

PruneStrategy parse_prune(const std::string& s) {
    if (s == "random") return PruneStrategy::random;
    if (s == "magnitude") return PruneStrategy::magnitude;
    if (s == "importance") return PruneStrategy::importance;
    fail("plan.prune_strategy", "expected random|magnitude|importance");
}

SparseStrategy parse_sparse(const std::string& s) {
    if (s == "random") return SparseStrategy::random;
    if (s == "topk") return SparseStrategy::topk;
    fail("plan.sparse_strategy", "expected random|topk");
}

std::string mode_name(PlanMode m) {
    switch (m) {
        case PlanMode::fedavg: return "fedavg";
        case PlanMode::fedper: return "fedper";
        case PlanMode::fixed: return "fixed";
        case PlanMode::optimized: return "optimized";
    }
    return "optimized";
}

std::string prune_name(PruneStrategy s) {
    switch (s) {
        case PruneStrategy::random: return "random";
        case PruneStrategy::magnitude: return "magnitude";
        case PruneStrategy::importance: return "importance";
    }
    return "magnitude";
}

}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

ScenarioConfig parse_config(const json& j) {
    ScenarioConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);

    if (!j.contains("model")) fail("model", "missing section");
    {
        const json& m = j.at("model");
        cfg.model.arch = parse_arch(get_or<std::string>(m, "arch", "logreg"));
        cfg.model.input_dim = get_or<std::size_t>(m, "input_dim", 0);
        cfg.model.classes = get_or<std::size_t>(m, "classes", 0);
        cfg.model.hidden = get_or<std::vector<std::size_t>>(m, "hidden", {});
        cfg.model.base_layers = get_or<std::size_t>(m, "base_layers", 1);
        cfg.model.with_bias = get_or<bool>(m, "with_bias", true);
        try {
            cfg.model.validate();
        } catch (const std::invalid_argument& e) {
            fail("model", e.what());
        }
    }

    {
        const json& d = j.contains("data") ? j.at("data") : json::object();
        const std::string source = get_or<std::string>(d, "source", "synthetic");
        if (source == "synthetic") {
            cfg.data.source = DataSource::synthetic;
        } else if (source == "idx") {
            cfg.data.source = DataSource::idx;
        } else {
            fail("data.source", "expected synthetic|idx");
        }
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            cfg.data.synth.clusters = get_or<std::size_t>(s, "clusters", cfg.model.classes);
            cfg.data.synth.dims = get_or<std::size_t>(s, "dims", cfg.model.input_dim);
            cfg.data.synth.size = get_or<std::size_t>(s, "size", 2000);
            cfg.data.synth.noise = get_or<double>(s, "noise", 1.0);
            cfg.data.synth.separation = get_or<double>(s, "separation", 3.0);
        } else {
            cfg.data.synth.clusters = cfg.model.classes;
            cfg.data.synth.dims = cfg.model.input_dim;
        }
        if (d.contains("idx")) {
            const json& s = d.at("idx");
            cfg.data.idx_images = get_or<std::string>(s, "images", "");
            cfg.data.idx_labels = get_or<std::string>(s, "labels", "");
        }
        if (cfg.data.source == DataSource::idx &&
            (cfg.data.idx_images.empty() || cfg.data.idx_labels.empty())) {
            fail("data.idx", "idx source needs images and labels paths");
        }
        const json& p = d.contains("partition") ? d.at("partition") : json::object();
        const std::string pmode = get_or<std::string>(p, "mode", "class");
        if (pmode == "class") {
            cfg.data.partition = PartitionMode::by_class;
        } else if (pmode == "dirichlet") {
            cfg.data.partition = PartitionMode::dirichlet;
        } else {
            fail("data.partition.mode", "expected class|dirichlet");
        }
        cfg.data.classes_per_client =
            get_or<std::size_t>(p, "classes_per_client", 2);
        cfg.data.alpha = get_or<double>(p, "alpha", 0.5);
        if (cfg.data.alpha <= 0.0) fail("data.partition.alpha", "must be positive");
        cfg.data.test_fraction = get_or<double>(d, "test_fraction", 0.2);
        require_range(cfg.data.test_fraction, 0.0, 0.9, "data.test_fraction");
        cfg.data.limit = get_or<std::size_t>(d, "limit", 0);
    }

    {
        const json& f =
            j.contains("federation") ? j.at("federation") : json::object();
        cfg.federation.clients = get_or<std::size_t>(f, "clients", 8);
        if (cfg.federation.clients == 0) fail("federation.clients", "must be >= 1");
        cfg.federation.rounds = get_or<std::size_t>(f, "rounds", 40);
        cfg.federation.learning_rate = get_or<double>(f, "learning_rate", 0.01);
        if (cfg.federation.learning_rate <= 0.0 ||
            cfg.federation.learning_rate > 1.0) {
            fail("federation.learning_rate", "must lie in (0, 1]");
        }
        cfg.federation.batch_size = get_or<std::size_t>(f, "batch_size", 32);
        if (cfg.federation.batch_size == 0) fail("federation.batch_size", "must be >= 1");
    }

    {
        const json& p = j.contains("phys") ? j.at("phys") : json::object();
        cfg.phys.bandwidth_hz = get_or<double>(p, "bandwidth_hz", 1e7);
        require_range(cfg.phys.bandwidth_hz, 1e3, 1e10, "phys.bandwidth_hz");
        cfg.phys.noise_psd_dbm_hz = get_or<double>(p, "noise_psd_dbm_hz", -174.0);
        require_range(cfg.phys.noise_psd_dbm_hz, -200.0, -100.0,
                      "phys.noise_psd_dbm_hz");
        cfg.phys.noise_psd_w_hz = dbm_to_watt(cfg.phys.noise_psd_dbm_hz);
        if (p.contains("power_dbm")) {
            const auto range = p.at("power_dbm").get<std::vector<double>>();
            if (range.size() != 2 || range[0] > range[1]) {
                fail("phys.power_dbm", "expected [lo, hi] with lo <= hi");
            }
            cfg.phys.power_dbm_lo = range[0];
            cfg.phys.power_dbm_hi = range[1];
        }
        require_range(cfg.phys.power_dbm_lo, -20.0, 40.0, "phys.power_dbm");
        require_range(cfg.phys.power_dbm_hi, -20.0, 40.0, "phys.power_dbm");
        if (p.contains("cpu_hz")) {
            const auto range = p.at("cpu_hz").get<std::vector<double>>();
            if (range.size() != 2 || range[0] > range[1] || range[0] <= 0.0) {
                fail("phys.cpu_hz", "expected positive [lo, hi] with lo <= hi");
            }
            cfg.phys.cpu_hz_lo = range[0];
            cfg.phys.cpu_hz_hi = range[1];
        }
        cfg.phys.radius_km = get_or<double>(p, "radius_km", 0.2);
        require_range(cfg.phys.radius_km, 1e-3, 10.0, "phys.radius_km");
        cfg.phys.cycles_per_sample = get_or<double>(p, "cycles_per_sample", 1e6);
        if (cfg.phys.cycles_per_sample <= 0.0) fail("phys.cycles_per_sample", "must be positive");
        cfg.phys.energy_coeff = get_or<double>(p, "energy_coeff", 1e-27);
        if (cfg.phys.energy_coeff <= 0.0) fail("phys.energy_coeff", "must be positive");
        cfg.phys.fpp = get_or<int>(p, "fpp", 32);
        if (cfg.phys.fpp != 32 && cfg.phys.fpp != 64) fail("phys.fpp", "must be 32 or 64");
        cfg.phys.flops_per_cycle = get_or<double>(p, "flops_per_cycle", 2.0);
        if (cfg.phys.flops_per_cycle <= 0.0) fail("phys.flops_per_cycle", "must be positive");
    }

    {
        const json& p = j.contains("plan") ? j.at("plan") : json::object();
        cfg.plan.mode = parse_mode(get_or<std::string>(p, "mode", "optimized"));
        cfg.plan.fixed_k = get_or<double>(p, "fixed_k", 1.0);
        require_range(cfg.plan.fixed_k, 1e-3, 1.0, "plan.fixed_k");
        cfg.plan.fixed_r = get_or<double>(p, "fixed_r", 1.0);
        require_range(cfg.plan.fixed_r, 0.0, 1.0, "plan.fixed_r");
        cfg.plan.prune_strategy =
            parse_prune(get_or<std::string>(p, "prune_strategy", "magnitude"));
        cfg.plan.sparse_strategy =
            parse_sparse(get_or<std::string>(p, "sparse_strategy", "topk"));
        cfg.plan.fallback_on_infeasible =
            get_or<bool>(p, "fallback_on_infeasible", true);
        if (cfg.plan.mode == PlanMode::fedavg &&
            cfg.model.base_layers != cfg.model.layer_count()) {
            fail("plan.mode",
                 "fedavg needs base_layers == layer count (no personalization)");
        }
    }

    {
        const json& b = j.contains("budgets") ? j.at("budgets") : json::object();
        cfg.budgets.tau_max_s = get_or<double>(b, "tau_max_s", 1.0);
        if (cfg.budgets.tau_max_s <= 0.0) fail("budgets.tau_max_s", "must be positive");
        cfg.budgets.energy_max_j = get_or<double>(b, "energy_max_j", 100.0);
        if (cfg.budgets.energy_max_j <= 0.0) fail("budgets.energy_max_j", "must be positive");
    }

    {
        const json& o = j.contains("optimizer") ? j.at("optimizer") : json::object();
        cfg.optimizer.k_min = get_or<double>(o, "k_min", 1e-3);
        require_range(cfg.optimizer.k_min, 1e-6, 0.01, "optimizer.k_min");
        cfg.optimizer.r_max = get_or<double>(o, "r_max", 0.999);
        require_range(cfg.optimizer.r_max, 0.99, 1.0 - 1e-9, "optimizer.r_max");
        cfg.optimizer.eps_inner = get_or<double>(o, "eps_inner", 1e-6);
        cfg.optimizer.eps_outer = get_or<double>(o, "eps_outer", 1e-4);
        cfg.optimizer.max_iters = get_or<int>(o, "max_iters", 50);
        if (cfg.optimizer.max_iters < 1) fail("optimizer.max_iters", "must be >= 1");
    }

    {
        const json& c = j.contains("constants") ? j.at("constants") : json::object();
        cfg.constants.probe_count = get_or<std::size_t>(c, "probe_count", 8);
        if (cfg.constants.probe_count < 2) fail("constants.probe_count", "must be >= 2");
        cfg.constants.safety = get_or<double>(c, "safety", 1.2);
        require_range(cfg.constants.safety, 1.0, 10.0, "constants.safety");
    }

    cfg.log_bound_terms = get_or<bool>(j, "log_bound_terms", true);
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

json serialize_config(const ScenarioConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["model"] = {
        {"arch", cfg.model.arch == Arch::logreg ? "logreg" : "mlp"},
        {"input_dim", cfg.model.input_dim},
        {"classes", cfg.model.classes},
        {"hidden", cfg.model.hidden},
        {"base_layers", cfg.model.base_layers},
        {"with_bias", cfg.model.with_bias},
    };
    j["data"] = {
        {"source", cfg.data.source == DataSource::synthetic ? "synthetic" : "idx"},
        {"synthetic",
         {{"clusters", cfg.data.synth.clusters},
          {"dims", cfg.data.synth.dims},
          {"size", cfg.data.synth.size},
          {"noise", cfg.data.synth.noise},
          {"separation", cfg.data.synth.separation}}},
        {"idx", {{"images", cfg.data.idx_images}, {"labels", cfg.data.idx_labels}}},
        {"partition",
         {{"mode",
           cfg.data.partition == PartitionMode::by_class ? "class" : "dirichlet"},
          {"classes_per_client", cfg.data.classes_per_client},
          {"alpha", cfg.data.alpha}}},
        {"test_fraction", cfg.data.test_fraction},
        {"limit", cfg.data.limit},
    };
    j["federation"] = {
        {"clients", cfg.federation.clients},
        {"rounds", cfg.federation.rounds},
        {"learning_rate", cfg.federation.learning_rate},
        {"batch_size", cfg.federation.batch_size},
    };
    j["phys"] = {
        {"bandwidth_hz", cfg.phys.bandwidth_hz},
        {"noise_psd_dbm_hz", cfg.phys.noise_psd_dbm_hz},
        {"power_dbm", {cfg.phys.power_dbm_lo, cfg.phys.power_dbm_hi}},
        {"cpu_hz", {cfg.phys.cpu_hz_lo, cfg.phys.cpu_hz_hi}},
        {"radius_km", cfg.phys.radius_km},
        {"cycles_per_sample", cfg.phys.cycles_per_sample},
        {"energy_coeff", cfg.phys.energy_coeff},
        {"fpp", cfg.phys.fpp},
        {"flops_per_cycle", cfg.phys.flops_per_cycle},
    };
    j["plan"] = {
        {"mode", mode_name(cfg.plan.mode)},
        {"fixed_k", cfg.plan.fixed_k},
        {"fixed_r", cfg.plan.fixed_r},
        {"prune_strategy", prune_name(cfg.plan.prune_strategy)},
        {"sparse_strategy",
         cfg.plan.sparse_strategy == SparseStrategy::topk ? "topk" : "random"},
        {"fallback_on_infeasible", cfg.plan.fallback_on_infeasible},
    };
    j["budgets"] = {
        {"tau_max_s", cfg.budgets.tau_max_s},
        {"energy_max_j", cfg.budgets.energy_max_j},
    };
    j["optimizer"] = {
        {"k_min", cfg.optimizer.k_min},
        {"r_max", cfg.optimizer.r_max},
        {"eps_inner", cfg.optimizer.eps_inner},
        {"eps_outer", cfg.optimizer.eps_outer},
        {"max_iters", cfg.optimizer.max_iters},
    };
    j["constants"] = {
        {"probe_count", cfg.constants.probe_count},
        {"safety", cfg.constants.safety},
    };
    j["log_bound_terms"] = cfg.log_bound_terms;
    return j;
}

}  // namespace pfl
