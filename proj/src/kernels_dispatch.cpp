#include "pfl/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace pfl::kernels {

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
const Ops& avx2_ops();
#endif
#if defined(__aarch64__)
const Ops& neon_ops();
#endif

namespace {

bool host_supports(Impl impl) {
    switch (impl) {
        case Impl::scalar:
            return true;
        case Impl::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Impl::neon:
#if defined(__aarch64__)
            return true;  // NEON is baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Impl best_supported() {
    if (host_supports(Impl::avx2)) return Impl::avx2;
    if (host_supports(Impl::neon)) return Impl::neon;
    return Impl::scalar;
}

Impl from_env() {
    const char* value = std::getenv("PFLSIM_KERNELS");
    if (value == nullptr) return best_supported();
    const std::string s(value);
    Impl requested = Impl::scalar;
    if (s == "scalar") requested = Impl::scalar;
    else if (s == "avx2") requested = Impl::avx2;
    else if (s == "neon") requested = Impl::neon;
    else return best_supported();
    return host_supports(requested) ? requested : best_supported();
}

Impl& active_impl() {
    static Impl impl = from_env();
    return impl;
}

}  // namespace

Impl active() { return active_impl(); }

bool supported(Impl impl) { return host_supports(impl); }

bool force(Impl impl) {
    if (!host_supports(impl)) return false;
    active_impl() = impl;
    return true;
}

std::string_view name(Impl impl) {
    switch (impl) {
        case Impl::scalar: return "scalar";
        case Impl::avx2: return "avx2";
        case Impl::neon: return "neon";
    }
    return "unknown";
}

const Ops& ops(Impl impl) {
    switch (impl) {
        case Impl::scalar:
            return scalar_ops();
        case Impl::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return avx2_ops();
#else
            break;
#endif
        case Impl::neon:
#if defined(__aarch64__)
            return neon_ops();
#else
            break;
#endif
    }
    throw std::runtime_error("kernel implementation not available on this host");
}

namespace detail {
const Ops& active_ops() { return ops(active_impl()); }
}  // namespace detail

}  // namespace pfl::kernels
