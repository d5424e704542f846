#include "pfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pfl/rng.hpp"

namespace pfl {

namespace {

std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char raw[4];
    in.read(reinterpret_cast<char*>(raw), 4);
    if (!in) throw std::runtime_error(std::string("truncated IDX file: ") + what);
    return (std::uint32_t(raw[0]) << 24) | (std::uint32_t(raw[1]) << 16) |
           (std::uint32_t(raw[2]) << 8) | std::uint32_t(raw[3]);
}

std::vector<std::vector<std::uint32_t>> indices_by_class(const Dataset& data) {
    std::vector<std::vector<std::uint32_t>> byclass(data.classes);
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        byclass[data.labels[i]].push_back(i);
    }
    return byclass;
}

}  // namespace

Dataset synth_dataset(const SynthParams& params, std::uint64_t seed) {
    if (params.clusters < 2 || params.dims == 0 || params.size == 0) {
        throw std::invalid_argument("degenerate synthetic dataset parameters");
    }
    Rng rng = derive_stream(seed, StreamPurpose::dataset);

    // random directions scaled so the midpoint margin between typical center
    // pairs is `separation` noise units (RMS pair distance 2*sep*noise)
    const double radius = params.separation * std::max(params.noise, 1e-12) *
                          std::numbers::sqrt2;
    std::vector<std::vector<double>> centers(params.clusters);
    for (auto& center : centers) {
        center.resize(params.dims);
        double norm_sq = 0.0;
        for (double& v : center) {
            v = rng.normal();
            norm_sq += v * v;
        }
        const double scale = radius / std::max(std::sqrt(norm_sq), 1e-12);
        for (double& v : center) v *= scale;
    }

    Dataset data;
    data.dim = params.dims;
    data.classes = params.clusters;
    data.features.resize(params.size * params.dims);
    data.labels.resize(params.size);
    for (std::size_t i = 0; i < params.size; ++i) {
        const std::uint32_t label =
            static_cast<std::uint32_t>(i % params.clusters);  // balanced within 1
        data.labels[i] = label;
        double* row = data.features.data() + i * params.dims;
        for (std::size_t d = 0; d < params.dims; ++d) {
            row[d] = centers[label][d] + params.noise * rng.normal();
        }
    }
    return data;
}

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
    std::ifstream images(image_path, std::ios::binary);
    if (!images) throw std::runtime_error("cannot open " + image_path);
    std::ifstream labels(label_path, std::ios::binary);
    if (!labels) throw std::runtime_error("cannot open " + label_path);

    if (read_be_u32(images, "image magic") != 0x00000803u) {
        throw std::runtime_error("bad IDX image magic in " + image_path);
    }
    const std::uint32_t count = read_be_u32(images, "image count");
    const std::uint32_t rows = read_be_u32(images, "rows");
    const std::uint32_t cols = read_be_u32(images, "cols");

    if (read_be_u32(labels, "label magic") != 0x00000801u) {
        throw std::runtime_error("bad IDX label magic in " + label_path);
    }
    const std::uint32_t label_count = read_be_u32(labels, "label count");
    if (label_count != count) {
        throw std::runtime_error("IDX image/label counts differ");
    }

    Dataset data;
    data.dim = static_cast<std::size_t>(rows) * cols;
    data.features.resize(static_cast<std::size_t>(count) * data.dim);
    data.labels.resize(count);

    std::vector<unsigned char> pixel_row(data.dim);
    for (std::uint32_t i = 0; i < count; ++i) {
        images.read(reinterpret_cast<char*>(pixel_row.data()),
                    static_cast<std::streamsize>(pixel_row.size()));
        if (!images) throw std::runtime_error("truncated IDX image data");
        double* row = data.features.data() + static_cast<std::size_t>(i) * data.dim;
        for (std::size_t d = 0; d < data.dim; ++d) {
            row[d] = pixel_row[d] / 255.0;
        }
    }
    std::vector<unsigned char> raw_labels(count);
    labels.read(reinterpret_cast<char*>(raw_labels.data()), count);
    if (!labels) throw std::runtime_error("truncated IDX label data");

    std::uint32_t max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        data.labels[i] = raw_labels[i];
        max_label = std::max(max_label, data.labels[i]);
    }
    data.classes = max_label + 1;
    return data;
}

std::vector<std::vector<std::uint32_t>> partition_class(
    const Dataset& data, std::size_t classes_per_client, std::size_t clients,
    std::uint64_t seed) {
    if (classes_per_client == 0 || classes_per_client > data.classes) {
        throw std::invalid_argument("classes per client outside [1, class count]");
    }
    if (clients == 0) throw std::invalid_argument("need at least one client");
    if (clients * classes_per_client < data.classes) {
        throw std::invalid_argument(
            "too few class slots to cover every class; samples would be dropped");
    }
    Rng rng = derive_stream(seed, StreamPurpose::partition);

    // Deal class slots from stacked shuffled decks so every class appears at
    // least once, then patch duplicate assignments within a client.
    std::vector<std::uint32_t> deck;
    while (deck.size() < clients * classes_per_client) {
        std::vector<std::uint32_t> block(data.classes);
        std::iota(block.begin(), block.end(), 0u);
        rng.shuffle(std::span<std::uint32_t>(block));
        deck.insert(deck.end(), block.begin(), block.end());
    }
    std::vector<std::vector<std::uint32_t>> owned(clients);
    for (std::size_t c = 0; c < clients; ++c) {
        auto& mine = owned[c];
        while (mine.size() < classes_per_client) {
            // scan forward past classes this client already holds
            std::size_t probe = 0;
            while (std::find(mine.begin(), mine.end(), deck[probe]) != mine.end()) {
                ++probe;
                if (probe >= deck.size()) {
                    std::vector<std::uint32_t> block(data.classes);
                    std::iota(block.begin(), block.end(), 0u);
                    rng.shuffle(std::span<std::uint32_t>(block));
                    deck.insert(deck.end(), block.begin(), block.end());
                }
            }
            mine.push_back(deck[probe]);
            deck.erase(deck.begin() + static_cast<std::ptrdiff_t>(probe));
        }
    }

    std::vector<std::vector<std::uint32_t>> owners(data.classes);
    for (std::size_t c = 0; c < clients; ++c) {
        for (const std::uint32_t cls : owned[c]) {
            owners[cls].push_back(static_cast<std::uint32_t>(c));
        }
    }

    auto byclass = indices_by_class(data);
    std::vector<std::vector<std::uint32_t>> result(clients);
    for (std::size_t cls = 0; cls < data.classes; ++cls) {
        auto& pool = byclass[cls];
        if (pool.empty()) continue;
        if (owners[cls].empty()) {
            throw std::runtime_error("class left without an owner; samples would drop");
        }
        rng.shuffle(std::span<std::uint32_t>(pool));
        const std::size_t share = pool.size() / owners[cls].size();
        std::size_t start = 0;
        for (std::size_t o = 0; o < owners[cls].size(); ++o) {
            std::size_t stop = (o + 1 == owners[cls].size())
                                   ? pool.size()
                                   : start + share;
            auto& dest = result[owners[cls][o]];
            dest.insert(dest.end(), pool.begin() + start, pool.begin() + stop);
            start = stop;
        }
    }
    return result;
}

std::vector<std::vector<std::uint32_t>> partition_dirichlet(
    const Dataset& data, double alpha, std::size_t clients, std::uint64_t seed) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
    if (clients == 0) throw std::invalid_argument("need at least one client");
    Rng rng = derive_stream(seed, StreamPurpose::partition);
    const auto byclass = indices_by_class(data);

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<std::vector<std::uint32_t>> result(clients);
        for (std::size_t cls = 0; cls < data.classes; ++cls) {
            std::vector<std::uint32_t> pool = byclass[cls];
            if (pool.empty()) continue;
            rng.shuffle(std::span<std::uint32_t>(pool));
            const auto shares = rng.dirichlet(alpha, clients);
            // cumulative rounding so every sample lands exactly once
            std::size_t start = 0;
            double acc = 0.0;
            for (std::size_t c = 0; c < clients; ++c) {
                acc += shares[c];
                const std::size_t stop =
                    (c + 1 == clients)
                        ? pool.size()
                        : static_cast<std::size_t>(
                              std::min<double>(std::floor(acc * pool.size() + 0.5),
                                               static_cast<double>(pool.size())));
                result[c].insert(result[c].end(), pool.begin() + start,
                                 pool.begin() + std::max(stop, start));
                start = std::max(stop, start);
            }
        }
        const bool all_nonempty =
            std::none_of(result.begin(), result.end(),
                         [](const auto& v) { return v.empty(); });
        if (all_nonempty) return result;
    }
    throw std::runtime_error(
        "dirichlet partition left a client empty after 100 attempts");
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> holdout_split(
    const Dataset& data, std::span<const std::uint32_t> indices,
    double test_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw std::invalid_argument("test fraction outside [0, 1)");
    }
    Rng rng = derive_stream(seed, StreamPurpose::holdout);
    std::vector<std::vector<std::uint32_t>> byclass(data.classes);
    for (const std::uint32_t i : indices) byclass[data.labels[i]].push_back(i);

    std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> split;
    for (auto& pool : byclass) {
        if (pool.empty()) continue;
        rng.shuffle(std::span<std::uint32_t>(pool));
        // keep at least one training sample per held class
        std::size_t test_count = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(pool.size()) + 0.5));
        test_count = std::min(test_count, pool.size() - 1);
        split.second.insert(split.second.end(), pool.begin(),
                            pool.begin() + test_count);
        split.first.insert(split.first.end(), pool.begin() + test_count,
                           pool.end());
    }
    std::sort(split.first.begin(), split.first.end());
    std::sort(split.second.begin(), split.second.end());
    return split;
}

}  // namespace pfl
