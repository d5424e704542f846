#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pfl {

enum class MaskKind { prune, sparse };

enum class PruneStrategy { random, magnitude, importance };
enum class SparseStrategy { random, topk };

// Binary keep/drop indicator over a parameter or gradient segment. The rate
// is the exact fraction of ones after integer rounding.
struct Mask {
    std::vector<std::uint8_t> indicator;
    double rate = 0.0;
    MaskKind kind = MaskKind::prune;

    std::size_t ones() const;
};

// round-half-up of rate*len, clamped to [0, len]
std::size_t rate_to_count(double rate, std::size_t len);

// Keeps round(r * |w|) personalization weights. Magnitude keeps the largest
// |w|, importance the largest (w*g)^2, random a seeded uniform subset. Ties
// break toward the lowest index.
Mask make_prune_mask(std::span<const double> pers_weights, double r,
                     PruneStrategy strategy, std::span<const double> grads,
                     std::uint64_t seed);

Mask make_sparse_mask(std::span<const double> base_grads, double k,
                      SparseStrategy strategy, std::uint64_t seed);

std::vector<double> apply_mask(std::span<const double> x, const Mask& m);
void apply_mask_inplace(std::span<double> x, const Mask& m);

struct BitsConfig {
    int fpp = 32;  // 32 or 64
    std::size_t d_base = 0;
};

// Uplink payload for a sparse vector of rate k over d_base entries:
// value bits plus the information-theoretic position count log2 C(d, kd),
// evaluated through log-gamma. k = 0 degenerates to an empty payload.
double exact_bits(double k, const BitsConfig& cfg);

// Stirling simplification k*d*(log2(1/k) + FPP + 1); the optimizer's smooth
// surrogate for exact_bits.
double approx_bits(double k, const BitsConfig& cfg);

}  // namespace pfl
