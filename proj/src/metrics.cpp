#include "pfl/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pfl {

using nlohmann::json;

namespace {

// shortest exact decimal form; stable across runs of the same binary
std::string fmt(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

RunSummary summarize(const RunHistory& history) {
    RunSummary s;
    s.clients = history.gamma.size();
    s.rounds = history.records.empty() ? 0 : history.records.size() - 1;

    double lat = 0.0, bits = 0.0, energy = 0.0, flops = 0.0;
    double k_sum = 0.0, r_sum = 0.0;
    std::size_t plan_count = 0;
    for (const RoundRecord& rec : history.records) {
        lat += rec.round_latency;
        for (const ClientRoundRecord& c : rec.clients) {
            bits += c.cost.bits;
            energy += c.cost.e_comm + c.cost.e_comp;
            flops += c.flops;
            if (rec.round > 0) {
                k_sum += c.k;
                r_sum += c.r;
                ++plan_count;
            }
        }
        s.cum_latency.push_back(lat);
        s.cum_bits.push_back(bits);
        s.cum_energy.push_back(energy);
        s.cum_flops.push_back(flops);
        s.weighted_acc.push_back(rec.weighted_acc);
        s.weighted_loss.push_back(rec.weighted_loss);
    }
    s.total_latency = lat;
    s.total_bits = bits;
    s.total_energy = energy;
    s.total_flops = flops;
    if (plan_count > 0) {
        s.avg_k = k_sum / static_cast<double>(plan_count);
        s.avg_r = r_sum / static_cast<double>(plan_count);
    }
    if (!history.records.empty()) {
        s.final_weighted_acc = history.records.back().weighted_acc;
        s.final_weighted_loss = history.records.back().weighted_loss;
    }
    return s;
}

void write_rounds_csv(const RunHistory& history, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "round,client,k,r,l,bits,bits_exact,tau_comm,tau_comp,tau_all,"
           "e_comm,e_comp,flops,train_loss,test_acc,grad_sq,stoch_grad_sq,"
           "weight_sq,grad_var,psi1,psi2,round_latency,solver_iterations,"
           "solver_objective,solver_max_violation,solver_converged,fallback\n";
    for (const RoundRecord& rec : history.records) {
        for (std::size_t n = 0; n < rec.clients.size(); ++n) {
            const ClientRoundRecord& c = rec.clients[n];
            out << rec.round << ',' << n << ',' << fmt(c.k) << ',' << fmt(c.r)
                << ',' << fmt(c.l) << ',' << fmt(c.cost.bits) << ','
                << fmt(c.bits_exact) << ',' << fmt(c.cost.tau_comm) << ','
                << fmt(c.cost.tau_comp) << ',' << fmt(c.cost.tau_all) << ','
                << fmt(c.cost.e_comm) << ',' << fmt(c.cost.e_comp) << ','
                << fmt(c.flops) << ',' << fmt(c.train_loss) << ','
                << fmt(c.test_acc) << ',' << fmt(c.grad_sq) << ','
                << fmt(c.stoch_grad_sq) << ',' << fmt(c.weight_sq) << ','
                << fmt(c.grad_var) << ',' << fmt(c.psi1_term) << ','
                << fmt(rec.psi2_term) << ',' << fmt(rec.round_latency) << ','
                << rec.solver_iterations << ',' << fmt(rec.solver_objective)
                << ',' << fmt(rec.solver_max_violation) << ','
                << (rec.solver_converged ? 1 : 0) << ','
                << (rec.fallback_used ? 1 : 0) << '\n';
        }
    }
}

void write_summary_json(const RunHistory& history, const std::string& path) {
    const RunSummary s = summarize(history);
    json j;
    j["clients"] = s.clients;
    j["rounds"] = s.rounds;
    j["gamma"] = history.gamma;
    j["final_weighted_acc"] = s.final_weighted_acc;
    j["final_weighted_loss"] = s.final_weighted_loss;
    j["total_latency"] = s.total_latency;
    j["total_bits"] = s.total_bits;
    j["total_energy"] = s.total_energy;
    j["total_flops"] = s.total_flops;
    j["avg_k"] = s.avg_k;
    j["avg_r"] = s.avg_r;
    j["cum_latency"] = s.cum_latency;
    j["cum_bits"] = s.cum_bits;
    j["cum_energy"] = s.cum_energy;
    j["cum_flops"] = s.cum_flops;
    j["weighted_acc"] = s.weighted_acc;
    j["weighted_loss"] = s.weighted_loss;
    if (history.constants.has_value()) {
        const BoundConstants& c = *history.constants;
        j["constants"] = {{"l1", c.l1},       {"l2", c.l2},   {"g", c.g},
                          {"m", c.m},         {"sigma", c.sigma},
                          {"eta", c.eta},     {"rounds", c.rounds},
                          {"theta1", history.theta1},
                          {"theta2", history.theta2}};
    }
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_plot_csvs(const RunHistory& history, const std::string& directory) {
    const RunSummary s = summarize(history);
    const std::filesystem::path dir(directory);
    {
        std::ofstream out = open_out((dir / "plot_loss_vs_latency.csv").string());
        out << "cum_latency,weighted_loss\n";
        for (std::size_t t = 0; t < s.cum_latency.size(); ++t) {
            out << fmt(s.cum_latency[t]) << ',' << fmt(s.weighted_loss[t]) << '\n';
        }
    }
    {
        std::ofstream out =
            open_out((dir / "plot_accuracy_vs_latency.csv").string());
        out << "cum_latency,weighted_acc\n";
        for (std::size_t t = 0; t < s.cum_latency.size(); ++t) {
            out << fmt(s.cum_latency[t]) << ',' << fmt(s.weighted_acc[t]) << '\n';
        }
    }
}

ToaRow time_to_accuracy(const std::string& summary_path, double target) {
    std::ifstream in(summary_path);
    if (!in) throw std::runtime_error("cannot open " + summary_path);
    json j;
    in >> j;
    ToaRow row;
    row.run = summary_path;
    const auto acc = j.at("weighted_acc").get<std::vector<double>>();
    const auto lat = j.at("cum_latency").get<std::vector<double>>();
    const auto bits = j.at("cum_bits").get<std::vector<double>>();
    const auto energy = j.at("cum_energy").get<std::vector<double>>();
    const auto flops = j.at("cum_flops").get<std::vector<double>>();
    for (std::size_t t = 0; t < acc.size(); ++t) {
        if (acc[t] >= target) {
            row.reached = true;
            row.latency = lat[t];
            row.bits = bits[t];
            row.energy = energy[t];
            row.flops = flops[t];
            break;
        }
    }
    return row;
}

}  // namespace pfl
