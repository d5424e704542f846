#include "pfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pfl/dataset.hpp"
#include "pfl/kernels.hpp"
#include "pfl/rng.hpp"

namespace pfl {

namespace {

std::size_t layer_params(std::size_t in, std::size_t out, bool with_bias) {
    return in * out + (with_bias ? out : 0);
}

// log-sum-exp stabilized softmax cross-entropy; writes softmax probabilities
// over `logits` in place and returns -log p[label]
double softmax_xent_inplace(std::span<double> logits, std::size_t label) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : logits) v /= total;
    return -std::log(std::max(logits[label], 1e-300));
}

struct LayerView {
    const double* weights;  // out x in, row-major
    const double* bias;     // nullptr when absent
    std::size_t in;
    std::size_t out;
};

std::vector<LayerView> layer_views(const ModelSpec& spec, const double* params) {
    const auto sizes = spec.layer_sizes();
    std::vector<LayerView> views;
    views.reserve(sizes.size() - 1);
    const double* cursor = params;
    for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
        LayerView view{};
        view.in = sizes[layer];
        view.out = sizes[layer + 1];
        view.weights = cursor;
        cursor += view.in * view.out;
        if (spec.with_bias) {
            view.bias = cursor;
            cursor += view.out;
        }
        views.push_back(view);
    }
    return views;
}

void forward_layer(const LayerView& layer, std::span<const double> input,
                   std::span<double> output) {
    for (std::size_t row = 0; row < layer.out; ++row) {
        const double* w = layer.weights + row * layer.in;
        double acc = kernels::dot({w, layer.in}, input);
        if (layer.bias != nullptr) acc += layer.bias[row];
        output[row] = acc;
    }
}

}  // namespace

std::size_t ModelSpec::layer_count() const {
    return arch == Arch::logreg ? 1 : hidden.size() + 1;
}

std::vector<std::size_t> ModelSpec::layer_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.push_back(input_dim);
    if (arch == Arch::mlp) {
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    }
    sizes.push_back(classes);
    return sizes;
}

std::size_t ModelSpec::param_count() const {
    const auto sizes = layer_sizes();
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        total += layer_params(sizes[i], sizes[i + 1], with_bias);
    }
    return total;
}

std::size_t ModelSpec::base_param_count() const {
    const auto sizes = layer_sizes();
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < sizes.size() && i < base_layers; ++i) {
        total += layer_params(sizes[i], sizes[i + 1], with_bias);
    }
    return total;
}

void ModelSpec::validate() const {
    if (input_dim == 0) throw std::invalid_argument("model input_dim must be positive");
    if (classes < 2) throw std::invalid_argument("model needs at least 2 classes");
    if (arch == Arch::logreg && !hidden.empty()) {
        throw std::invalid_argument("logreg takes no hidden layers");
    }
    if (arch == Arch::mlp && hidden.empty()) {
        throw std::invalid_argument("mlp needs at least one hidden layer");
    }
    for (std::size_t width : hidden) {
        if (width == 0) throw std::invalid_argument("hidden width must be positive");
    }
    if (base_layers > layer_count()) {
        throw std::invalid_argument("base_layers exceeds layer count");
    }
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector params = ParamVector::zeros(spec.param_count(), spec.base_param_count());
    Rng rng(seed);
    const auto sizes = spec.layer_sizes();
    std::size_t offset = 0;
    for (std::size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
        const std::size_t fan_in = sizes[layer];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < fan_in * sizes[layer + 1]; ++i) {
            params[offset++] = scale * rng.normal();
        }
        if (spec.with_bias) offset += sizes[layer + 1];  // biases start at zero
    }
    return params;
}

std::pair<double, ParamVector> loss_and_grad(const ModelSpec& spec,
                                             const ParamVector& params,
                                             const MiniBatch& batch) {
    spec.validate();
    if (batch.data == nullptr || batch.indices.empty()) {
        throw std::invalid_argument("empty mini-batch");
    }
    const Dataset& data = *batch.data;
    if (data.dim != spec.input_dim) {
        throw std::invalid_argument("dataset dimension does not match model");
    }
    if (params.dim() != spec.param_count()) {
        throw std::invalid_argument("parameter count does not match model");
    }

    const auto layers = layer_views(spec, params.values().data());
    ParamVector gradient = ParamVector::zeros(params.dim(), params.split());
    double* gcursor_base = gradient.values().data();

    std::vector<std::size_t> offsets(layers.size());
    for (std::size_t i = 0, off = 0; i < layers.size(); ++i) {
        offsets[i] = off;
        off += layer_params(layers[i].in, layers[i].out, spec.with_bias);
    }

    // per-layer activations (post-nonlinearity), reused across samples
    std::vector<std::vector<double>> acts(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) acts[i].resize(layers[i].out);
    std::vector<double> delta, delta_prev;

    double total_loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    for (const std::uint32_t sample : batch.indices) {
        const auto x = data.row(sample);
        const std::size_t label = data.labels[sample];
        if (label >= spec.classes) {
            throw std::invalid_argument("label outside class count");
        }

        std::span<const double> input = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            forward_layer(layers[i], input, acts[i]);
            if (i + 1 < layers.size()) {
                for (double& v : acts[i]) v = std::tanh(v);
            }
            input = acts[i];
        }
        total_loss += softmax_xent_inplace(acts.back(), label);

        // output delta: softmax - onehot, averaged over the batch
        delta.assign(acts.back().begin(), acts.back().end());
        delta[label] -= 1.0;
        for (double& v : delta) v *= inv_b;

        for (std::size_t i = layers.size(); i-- > 0;) {
            const LayerView& layer = layers[i];
            const std::span<const double> below =
                i == 0 ? x : std::span<const double>(acts[i - 1]);

            double* gw = gcursor_base + offsets[i];
            for (std::size_t row = 0; row < layer.out; ++row) {
                kernels::axpy(delta[row], below, {gw + row * layer.in, layer.in});
            }
            if (spec.with_bias) {
                double* gb = gw + layer.in * layer.out;
                for (std::size_t row = 0; row < layer.out; ++row) {
                    gb[row] += delta[row];
                }
            }

            if (i == 0) break;
            // propagate: delta_prev = W^T delta, then through tanh'
            delta_prev.assign(layer.in, 0.0);
            for (std::size_t row = 0; row < layer.out; ++row) {
                kernels::axpy(delta[row], {layer.weights + row * layer.in, layer.in},
                              delta_prev);
            }
            for (std::size_t col = 0; col < layer.in; ++col) {
                const double a = acts[i - 1][col];
                delta_prev[col] *= 1.0 - a * a;
            }
            delta.swap(delta_prev);
        }
    }

    return {total_loss * inv_b, std::move(gradient)};
}

double loss(const ModelSpec& spec, const ParamVector& params,
            const MiniBatch& batch) {
    spec.validate();
    if (batch.data == nullptr || batch.indices.empty()) {
        throw std::invalid_argument("empty mini-batch");
    }
    const Dataset& data = *batch.data;
    if (data.dim != spec.input_dim || params.dim() != spec.param_count()) {
        throw std::invalid_argument("dimensions do not match model");
    }
    const auto layers = layer_views(spec, params.values().data());
    std::vector<std::vector<double>> acts(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) acts[i].resize(layers[i].out);

    double total = 0.0;
    for (const std::uint32_t sample : batch.indices) {
        if (data.labels[sample] >= spec.classes) {
            throw std::invalid_argument("label outside class count");
        }
        std::span<const double> input = data.row(sample);
        for (std::size_t i = 0; i < layers.size(); ++i) {
            forward_layer(layers[i], input, acts[i]);
            if (i + 1 < layers.size()) {
                for (double& v : acts[i]) v = std::tanh(v);
            }
            input = acts[i];
        }
        total += softmax_xent_inplace(acts.back(), data.labels[sample]);
    }
    return total / static_cast<double>(batch.size());
}

ParamVector grad(const ModelSpec& spec, const ParamVector& params,
                 const MiniBatch& batch) {
    return loss_and_grad(spec, params, batch).second;
}

std::size_t predict(const ModelSpec& spec, const ParamVector& params,
                    std::span<const double> features) {
    const auto layers = layer_views(spec, params.values().data());
    std::vector<double> current(features.begin(), features.end());
    std::vector<double> next;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        next.resize(layers[i].out);
        forward_layer(layers[i], current, next);
        if (i + 1 < layers.size()) {
            for (double& v : next) v = std::tanh(v);
        }
        current.swap(next);
    }
    return static_cast<std::size_t>(
        std::max_element(current.begin(), current.end()) - current.begin());
}

double accuracy(const ModelSpec& spec, const ParamVector& params,
                const Dataset& data, std::span<const std::uint32_t> indices) {
    if (indices.empty()) return 0.0;
    std::size_t hits = 0;
    for (const std::uint32_t i : indices) {
        if (predict(spec, params, data.row(i)) == data.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(indices.size());
}

BoundConstants estimate_constants(const ModelSpec& spec, const Dataset& data,
                                  std::size_t probe_count, std::size_t batch_size,
                                  double eta, int rounds, std::uint64_t seed,
                                  double safety) {
    spec.validate();
    if (data.size() == 0) throw std::invalid_argument("empty dataset");
    if (probe_count < 2) throw std::invalid_argument("need at least 2 probes");
    batch_size = std::min(batch_size, data.size());

    MiniBatch full{&data, {}};
    full.indices.resize(data.size());
    std::iota(full.indices.begin(), full.indices.end(), 0u);

    // Probe points around the init distribution at varied scales; each probe
    // derives from (seed, index) only, so a longer schedule extends the
    // shorter one.
    std::vector<ParamVector> probes;
    std::vector<double> probe_losses;
    std::vector<ParamVector> probe_full_grads;
    probes.reserve(probe_count);

    double max_w_sq = 0.0, max_g_sq = 0.0, max_var = 0.0;
    const std::size_t batches_per_probe = 3;

    for (std::size_t j = 0; j < probe_count; ++j) {
        Rng stream = derive_stream(seed, StreamPurpose::probe, j);
        ParamVector point = init_params(spec, stream.next_u64());
        const double scale = stream.uniform(0.5, 3.0);
        for (double& v : point.values()) v *= scale;

        max_w_sq = std::max(max_w_sq, kernels::nrm2sq(point.all()));

        auto [floss, fgrad] = loss_and_grad(spec, point, full);
        max_g_sq = std::max(max_g_sq, kernels::nrm2sq(fgrad.all()));

        if (batch_size < data.size()) {
            double var_acc = 0.0;
            for (std::size_t b = 0; b < batches_per_probe; ++b) {
                MiniBatch mini{&data, {}};
                mini.indices.reserve(batch_size);
                for (std::size_t s = 0; s < batch_size; ++s) {
                    mini.indices.push_back(
                        static_cast<std::uint32_t>(stream.below(data.size())));
                }
                const ParamVector mgrad = grad(spec, point, mini);
                max_g_sq = std::max(max_g_sq, kernels::nrm2sq(mgrad.all()));
                var_acc += kernels::diff_nrm2sq(mgrad.all(), fgrad.all());
            }
            max_var = std::max(max_var, var_acc / batches_per_probe);
        }

        probes.push_back(std::move(point));
        probe_losses.push_back(floss);
        probe_full_grads.push_back(std::move(fgrad));
    }

    double l1 = 0.0, l2 = 0.0;
    for (std::size_t a = 0; a < probes.size(); ++a) {
        for (std::size_t b = a + 1; b < probes.size(); ++b) {
            const double dist =
                std::sqrt(kernels::diff_nrm2sq(probes[a].all(), probes[b].all()));
            if (dist < 1e-12) continue;
            l1 = std::max(l1, std::abs(probe_losses[a] - probe_losses[b]) / dist);
            l2 = std::max(l2, std::sqrt(kernels::diff_nrm2sq(
                                  probe_full_grads[a].all(),
                                  probe_full_grads[b].all())) /
                                  dist);
        }
    }

    BoundConstants constants;
    constants.l1 = safety * l1;
    constants.l2 = safety * l2;
    constants.g = safety * std::sqrt(max_g_sq);
    constants.m = safety * std::sqrt(max_w_sq);
    constants.sigma = safety * std::sqrt(max_var);
    constants.eta = eta;
    constants.rounds = rounds;
    return constants;
}

}  // namespace pfl
