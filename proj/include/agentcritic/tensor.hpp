#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace agentcritic {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major array of doubles. Rank 1 tensors map to column vectors,
// rank 2 to row-major matrices.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const noexcept { return shape_.empty() ? 0 : size() / shape_[0]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    Eigen::Map<RowMatrix> matrix() { return {data_.data(), Eigen::Index(rows()), Eigen::Index(cols())}; }
    Eigen::Map<const RowMatrix> matrix() const {
        return {data_.data(), Eigen::Index(rows()), Eigen::Index(cols())};
    }
    Eigen::Map<Eigen::VectorXd> vector() { return {data_.data(), Eigen::Index(size())}; }
    Eigen::Map<const Eigen::VectorXd> vector() const { return {data_.data(), Eigen::Index(size())}; }

    bool all_finite() const;
    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Named tensors in insertion order. Order is part of the contract: it fixes
// initialization draws and checkpoint layout.
class ParamSet {
public:
    Tensor& add(std::string name, Tensor t);

    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t element_count() const;

    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }
    std::pair<std::string, Tensor>& entry(std::size_t i) { return entries_[i]; }
    const std::pair<std::string, Tensor>& entry(std::size_t i) const { return entries_[i]; }

    ParamSet zeros_like() const;
    bool same_layout(const ParamSet& other) const;
    void require_same_layout(const ParamSet& other, const char* what) const;

    void set_zero();
    void scale(double s);
    void add_scaled(const ParamSet& other, double s);
    bool all_finite() const;
    double max_abs() const;

    bool operator==(const ParamSet& other) const { return entries_ == other.entries_; }

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace agentcritic
