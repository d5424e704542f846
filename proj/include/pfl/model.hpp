#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfl/bound.hpp"
#include "pfl/param_vector.hpp"

namespace pfl {

struct Dataset;

enum class Arch { logreg, mlp };

// Differentiable classifier over a flat parameter vector. Layers are packed
// in order as [W (out x in, row-major); b (out)]; hidden layers use tanh,
// the output layer a softmax cross-entropy head. `base_layers` leading
// layers form the shared base, the rest the personalization part.
struct ModelSpec {
    Arch arch = Arch::logreg;
    std::size_t input_dim = 0;
    std::size_t classes = 0;
    std::vector<std::size_t> hidden;  // empty for logreg
    std::size_t base_layers = 0;
    bool with_bias = true;

    std::size_t layer_count() const;
    std::size_t param_count() const;
    std::size_t base_param_count() const;  // split index d^B
    std::vector<std::size_t> layer_sizes() const;  // widths incl. input/output

    void validate() const;
};

// View of selected rows of a dataset.
struct MiniBatch {
    const Dataset* data = nullptr;
    std::vector<std::uint32_t> indices;

    std::size_t size() const { return indices.size(); }
};

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

double loss(const ModelSpec& spec, const ParamVector& params,
            const MiniBatch& batch);

ParamVector grad(const ModelSpec& spec, const ParamVector& params,
                 const MiniBatch& batch);

// Single pass computing both; the separate entry points reuse it.
std::pair<double, ParamVector> loss_and_grad(const ModelSpec& spec,
                                             const ParamVector& params,
                                             const MiniBatch& batch);

std::size_t predict(const ModelSpec& spec, const ParamVector& params,
                    std::span<const double> features);

double accuracy(const ModelSpec& spec, const ParamVector& params,
                const Dataset& data, std::span<const std::uint32_t> indices);

// Empirical estimation of the bound constants from seeded probe parameter
// points: G and M from sampled maxima, sigma from mini-batch vs full-batch
// gradient deviations, L1/L2 from max difference ratios over probe pairs.
// A safety factor widens the sampled maxima; probes are prefix-stable in
// the count so estimates grow monotonically with it.
BoundConstants estimate_constants(const ModelSpec& spec, const Dataset& data,
                                  std::size_t probe_count, std::size_t batch_size,
                                  double eta, int rounds, std::uint64_t seed,
                                  double safety = 1.2);

}  // namespace pfl
