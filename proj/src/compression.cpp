#include "pfl/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "pfl/kernels.hpp"
#include "pfl/rng.hpp"

namespace pfl {

namespace {

void check_rate(double rate) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("mask rate must lie in [0, 1]");
    }
}

// Builds a mask keeping the `count` indices with the largest scores,
// ties broken toward the lowest index.
Mask top_scores_mask(std::span<const double> scores, std::size_t count,
                     MaskKind kind) {
    std::vector<std::uint32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + count, order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (scores[a] != scores[b]) return scores[a] > scores[b];
                         return a < b;
                     });
    Mask mask;
    mask.kind = kind;
    mask.indicator.assign(scores.size(), 0);
    for (std::size_t i = 0; i < count; ++i) mask.indicator[order[i]] = 1;
    mask.rate = scores.empty() ? 0.0
                               : static_cast<double>(count) /
                                     static_cast<double>(scores.size());
    return mask;
}

Mask random_mask(std::size_t len, std::size_t count, MaskKind kind,
                 std::uint64_t seed) {
    std::vector<std::uint32_t> order(len);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(seed);
    // partial Fisher-Yates: the first `count` slots end up a uniform subset
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(len - i));
        std::swap(order[i], order[j]);
    }
    Mask mask;
    mask.kind = kind;
    mask.indicator.assign(len, 0);
    for (std::size_t i = 0; i < count; ++i) mask.indicator[order[i]] = 1;
    mask.rate =
        len == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(len);
    return mask;
}

}  // namespace

std::size_t Mask::ones() const {
    return static_cast<std::size_t>(
        std::count(indicator.begin(), indicator.end(), std::uint8_t{1}));
}

std::size_t rate_to_count(double rate, std::size_t len) {
    check_rate(rate);
    const double raw = std::floor(rate * static_cast<double>(len) + 0.5);
    return static_cast<std::size_t>(
        std::clamp(raw, 0.0, static_cast<double>(len)));
}

Mask make_prune_mask(std::span<const double> pers_weights, double r,
                     PruneStrategy strategy, std::span<const double> grads,
                     std::uint64_t seed) {
    const std::size_t count = rate_to_count(r, pers_weights.size());
    switch (strategy) {
        case PruneStrategy::random:
            return random_mask(pers_weights.size(), count, MaskKind::prune, seed);
        case PruneStrategy::magnitude: {
            std::vector<double> scores(pers_weights.size());
            for (std::size_t i = 0; i < scores.size(); ++i) {
                scores[i] = std::abs(pers_weights[i]);
            }
            return top_scores_mask(scores, count, MaskKind::prune);
        }
        case PruneStrategy::importance: {
            if (grads.size() != pers_weights.size()) {
                throw std::invalid_argument(
                    "importance pruning needs gradients of matching length");
            }
            std::vector<double> scores(pers_weights.size());
            for (std::size_t i = 0; i < scores.size(); ++i) {
                const double wg = pers_weights[i] * grads[i];
                scores[i] = wg * wg;
            }
            return top_scores_mask(scores, count, MaskKind::prune);
        }
    }
    throw std::invalid_argument("unknown prune strategy");
}

Mask make_sparse_mask(std::span<const double> base_grads, double k,
                      SparseStrategy strategy, std::uint64_t seed) {
    const std::size_t count = rate_to_count(k, base_grads.size());
    switch (strategy) {
        case SparseStrategy::random:
            return random_mask(base_grads.size(), count, MaskKind::sparse, seed);
        case SparseStrategy::topk: {
            std::vector<double> scores(base_grads.size());
            for (std::size_t i = 0; i < scores.size(); ++i) {
                scores[i] = std::abs(base_grads[i]);
            }
            return top_scores_mask(scores, count, MaskKind::sparse);
        }
    }
    throw std::invalid_argument("unknown sparsification strategy");
}

std::vector<double> apply_mask(std::span<const double> x, const Mask& m) {
    if (x.size() != m.indicator.size()) {
        throw std::invalid_argument("mask length does not match vector length");
    }
    std::vector<double> out(x.size());
    kernels::mask_mul(x, m.indicator, out);
    return out;
}

void apply_mask_inplace(std::span<double> x, const Mask& m) {
    if (x.size() != m.indicator.size()) {
        throw std::invalid_argument("mask length does not match vector length");
    }
    kernels::mask_mul({x.data(), x.size()}, m.indicator, x);
}

double exact_bits(double k, const BitsConfig& cfg) {
    if (k < 0.0 || k > 1.0) throw std::domain_error("rate outside [0, 1]");
    const double d = static_cast<double>(cfg.d_base);
    const std::size_t kept = rate_to_count(k, cfg.d_base);
    if (kept == 0) return 0.0;  // degenerate: nothing transmitted
    const double m = static_cast<double>(kept);
    const double log2_binom = (std::lgamma(d + 1.0) - std::lgamma(m + 1.0) -
                               std::lgamma(d - m + 1.0)) /
                              std::numbers::ln2;
    return m * (cfg.fpp + 1) + log2_binom;
}

double approx_bits(double k, const BitsConfig& cfg) {
    if (k <= 0.0) throw std::domain_error("rate must be positive");
    if (k > 1.0) throw std::domain_error("rate outside (0, 1]");
    const double d = static_cast<double>(cfg.d_base);
    return k * d * (std::log2(1.0 / k) + cfg.fpp + 1);
}

}  // namespace pfl
