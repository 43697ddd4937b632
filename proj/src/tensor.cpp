#include "agentcritic/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "agentcritic/error.hpp"

namespace agentcritic {

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    if (shape_.empty()) throw InvalidArgument("tensor shape must have at least one dimension");
    std::size_t n = 1;
    for (std::size_t d : shape_) {
        if (d == 0) throw InvalidArgument("tensor dimensions must be positive");
        n *= d;
    }
    data_.assign(n, fill);
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor& ParamSet::add(std::string name, Tensor t) {
    if (contains(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(t));
    return entries_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
    return entries_[it->second].second;
}

std::size_t ParamSet::element_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& [name, t] : entries_) out.add(name, Tensor(t.shape()));
    return out;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first != other.entries_[i].first) return false;
        if (entries_[i].second.shape() != other.entries_[i].second.shape()) return false;
    }
    return true;
}

void ParamSet::require_same_layout(const ParamSet& other, const char* what) const {
    if (!same_layout(other)) throw InvalidArgument(std::string(what) + ": parameter shapes do not match");
}

void ParamSet::set_zero() {
    for (auto& [_, t] : entries_) std::fill(t.data().begin(), t.data().end(), 0.0);
}

void ParamSet::scale(double s) {
    for (auto& [_, t] : entries_) t.vector() *= s;
}

void ParamSet::add_scaled(const ParamSet& other, double s) {
    require_same_layout(other, "add_scaled");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].second.vector() += s * other.entries_[i].second.vector();
}

bool ParamSet::all_finite() const {
    for (const auto& [_, t] : entries_)
        if (!t.all_finite()) return false;
    return true;
}

double ParamSet::max_abs() const {
    double m = 0.0;
    for (const auto& [_, t] : entries_)
        for (double x : t.data()) m = std::max(m, std::abs(x));
    return m;
}

} // namespace agentcritic
