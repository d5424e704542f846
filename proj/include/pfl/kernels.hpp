#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pfl::kernels {

// Data-parallel inner loops shared by the model, compression, and protocol
// layers. A scalar reference implementation always exists; AVX2 (x86-64) and
// NEON (aarch64) variants are selected at runtime when the host supports
// them. Vector variants may reorder reductions, so results agree with the
// scalar path only up to rounding; equivalence is covered by tests.

enum class Impl {
    scalar,
    avx2,
    neon,
};

struct Ops {
    double (*dot)(const double*, const double*, std::size_t);
    double (*nrm2sq)(const double*, std::size_t);
    double (*diff_nrm2sq)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*mask_mul)(const double*, const std::uint8_t*, double*, std::size_t);
};

// Currently active implementation. Defaults to the best supported variant;
// the PFLSIM_KERNELS environment variable (scalar|avx2|neon) overrides it.
Impl active();

// Forces an implementation. Returns false (and leaves the active one
// unchanged) when the host cannot run it.
bool force(Impl impl);

bool supported(Impl impl);
std::string_view name(Impl impl);

// Raw tables, used by the equivalence tests to compare variants directly.
const Ops& ops(Impl impl);

inline double dot(std::span<const double> a, std::span<const double> b);
inline double nrm2sq(std::span<const double> x);
inline double diff_nrm2sq(std::span<const double> a, std::span<const double> b);
// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y);
// out = x .* m with m a 0/1 indicator
inline void mask_mul(std::span<const double> x, std::span<const std::uint8_t> m,
                     std::span<double> out);

namespace detail {
const Ops& active_ops();
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    return detail::active_ops().dot(a.data(), b.data(), a.size());
}

inline double nrm2sq(std::span<const double> x) {
    return detail::active_ops().nrm2sq(x.data(), x.size());
}

inline double diff_nrm2sq(std::span<const double> a, std::span<const double> b) {
    return detail::active_ops().diff_nrm2sq(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    detail::active_ops().axpy(alpha, x.data(), y.data(), x.size());
}

inline void mask_mul(std::span<const double> x, std::span<const std::uint8_t> m,
                     std::span<double> out) {
    detail::active_ops().mask_mul(x.data(), m.data(), out.data(), x.size());
}

}  // namespace pfl::kernels
