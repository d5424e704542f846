#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pfl {

struct Dataset {
    std::size_t dim = 0;
    std::size_t classes = 0;
    std::vector<double> features;     // row-major, size() == count * dim
    std::vector<std::uint32_t> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
};

struct SynthParams {
    std::size_t clusters = 10;   // one Gaussian cluster per class
    std::size_t dims = 16;
    std::size_t size = 1000;
    double noise = 1.0;          // per-coordinate cluster std
    double separation = 3.0;     // center spacing in units of noise
};

// Gaussian-cluster classification data, balanced labels, reproducible.
Dataset synth_dataset(const SynthParams& params, std::uint64_t seed);

// IDX binary files (big-endian magic 0x00000803 for images, 0x00000801 for
// labels); pixel values normalized to [0, 1].
Dataset load_idx(const std::string& image_path, const std::string& label_path);

// Each client receives samples from exactly `classes_per_client` classes;
// within a class, samples split uniformly among its owners. Returns per-client
// index lists covering the dataset exactly.
std::vector<std::vector<std::uint32_t>> partition_class(
    const Dataset& data, std::size_t classes_per_client, std::size_t clients,
    std::uint64_t seed);

// Per-class proportions drawn from Dirichlet(alpha * 1_N); redraws (up to 100
// attempts) until every client holds at least one sample.
std::vector<std::vector<std::uint32_t>> partition_dirichlet(
    const Dataset& data, double alpha, std::size_t clients, std::uint64_t seed);

// Seeded stratified holdout split of one client's indices; the test side
// follows the client's own class distribution.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> holdout_split(
    const Dataset& data, std::span<const std::uint32_t> indices,
    double test_fraction, std::uint64_t seed);

}  // namespace pfl
