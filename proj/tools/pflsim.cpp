#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pfl/config.hpp"
#include "pfl/dataset.hpp"
#include "pfl/metrics.hpp"
#include "pfl/protocol.hpp"

namespace fs = std::filesystem;

namespace {

fs::path resolve_output_dir(const std::string& config_path,
                            const std::string& output_flag,
                            std::uint64_t seed) {
    if (!output_flag.empty()) return fs::path(output_flag);
    fs::path root = "runs";
    if (const char* env = std::getenv("PFLSIM_OUTPUT_ROOT")) root = env;
    const std::string stem = fs::path(config_path).stem().string();
    return root / (stem + "-seed" + std::to_string(seed));
}

int cmd_run(const std::string& config_path, const std::string& output_flag,
            std::optional<std::uint64_t> seed_override) {
    pfl::ScenarioConfig cfg = pfl::load_config(config_path);
    if (seed_override.has_value()) cfg.seed = *seed_override;

    const fs::path out_dir = resolve_output_dir(config_path, output_flag, cfg.seed);
    fs::create_directories(out_dir);

    const pfl::RunHistory history = pfl::run_training(cfg);

    pfl::write_rounds_csv(history, (out_dir / "rounds.csv").string());
    pfl::write_summary_json(history, (out_dir / "summary.json").string());
    pfl::write_plot_csvs(history, out_dir.string());

    const pfl::RunSummary summary = pfl::summarize(history);
    std::cout << "run complete: " << summary.rounds << " rounds, "
              << summary.clients << " clients\n"
              << "  final weighted accuracy " << summary.final_weighted_acc
              << "\n  total latency " << summary.total_latency << " s, total energy "
              << summary.total_energy << " J\n  metrics in " << out_dir.string()
              << "\n";
    return 0;
}

int cmd_compare(const std::vector<std::string>& summaries, double target) {
    std::cout << "run,reached,latency_s,bits,energy_j,flops\n";
    for (const std::string& path : summaries) {
        const pfl::ToaRow row = pfl::time_to_accuracy(path, target);
        if (row.reached) {
            std::cout << row.run << ",yes," << row.latency << ',' << row.bits
                      << ',' << row.energy << ',' << row.flops << '\n';
        } else {
            std::cout << row.run << ",not reached,,,,\n";
        }
    }
    return 0;
}

int cmd_partition_report(const std::string& config_path) {
    const pfl::ScenarioConfig cfg = pfl::load_config(config_path);
    pfl::Dataset data;
    if (cfg.data.source == pfl::DataSource::synthetic) {
        data = pfl::synth_dataset(cfg.data.synth, cfg.seed);
    } else {
        data = pfl::load_idx(cfg.data.idx_images, cfg.data.idx_labels);
    }
    if (cfg.data.limit > 0 && cfg.data.limit < data.size()) {
        data.features.resize(cfg.data.limit * data.dim);
        data.labels.resize(cfg.data.limit);
    }
    const auto partition =
        cfg.data.partition == pfl::PartitionMode::by_class
            ? pfl::partition_class(data, cfg.data.classes_per_client,
                                   cfg.federation.clients, cfg.seed)
            : pfl::partition_dirichlet(data, cfg.data.alpha,
                                       cfg.federation.clients, cfg.seed);

    std::size_t total = 0;
    for (const auto& part : partition) total += part.size();
    std::cout << "client,samples,gamma,class_histogram\n";
    for (std::size_t c = 0; c < partition.size(); ++c) {
        std::map<std::uint32_t, std::size_t> hist;
        for (const std::uint32_t i : partition[c]) ++hist[data.labels[i]];
        std::cout << c << ',' << partition[c].size() << ','
                  << static_cast<double>(partition[c].size()) /
                         static_cast<double>(total)
                  << ',';
        bool first = true;
        for (const auto& [cls, count] : hist) {
            if (!first) std::cout << ' ';
            std::cout << cls << ':' << count;
            first = false;
        }
        std::cout << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Desk-scale simulator for lightweight personalized federated learning "
        "with gradient sparsification, model pruning, and joint rate/bandwidth "
        "optimization"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed_override;
    auto* run = app.add_subcommand("run", "execute a scenario and write metrics");
    run->add_option("config", config_path, "scenario config (JSON)")->required();
    run->add_option("--output", output_dir,
                    "output directory (default: $PFLSIM_OUTPUT_ROOT or ./runs)");
    std::uint64_t seed_value = 0;
    auto* seed_opt =
        run->add_option("--seed", seed_value, "override the config seed");

    std::vector<std::string> summaries;
    double target = 0.8;
    auto* compare =
        app.add_subcommand("compare", "time-to-accuracy across finished runs");
    compare->add_option("summaries", summaries, "summary.json files")->required();
    compare->add_option("--target-accuracy", target, "accuracy threshold")
        ->check(CLI::Range(0.0, 1.0));

    std::string report_config;
    auto* report = app.add_subcommand("partition-report",
                                      "per-client class histogram for a config");
    report->add_option("config", report_config, "scenario config (JSON)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (seed_opt->count() > 0) seed_override = seed_value;
            return cmd_run(config_path, output_dir, seed_override);
        }
        if (compare->parsed()) return cmd_compare(summaries, target);
        if (report->parsed()) return cmd_partition_report(report_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
