#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pfl {

// Flat parameter or gradient vector with a base/personalization split: the
// first `split` entries are the base part shared across clients, the rest is
// the personalization part kept local.
class ParamVector {
public:
    ParamVector() = default;

    ParamVector(std::vector<double> values, std::size_t split)
        : values_(std::move(values)), split_(split) {
        if (split_ > values_.size()) {
            throw std::invalid_argument("split index exceeds parameter count");
        }
    }

    static ParamVector zeros(std::size_t dim, std::size_t split) {
        return ParamVector(std::vector<double>(dim, 0.0), split);
    }

    std::size_t dim() const { return values_.size(); }
    std::size_t base_dim() const { return split_; }
    std::size_t pers_dim() const { return values_.size() - split_; }
    std::size_t split() const { return split_; }

    std::span<double> base() { return {values_.data(), split_}; }
    std::span<const double> base() const { return {values_.data(), split_}; }
    std::span<double> pers() { return {values_.data() + split_, pers_dim()}; }
    std::span<const double> pers() const {
        return {values_.data() + split_, pers_dim()};
    }
    std::span<double> all() { return {values_.data(), values_.size()}; }
    std::span<const double> all() const { return {values_.data(), values_.size()}; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
    std::size_t split_ = 0;
};

}  // namespace pfl
