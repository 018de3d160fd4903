#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace micns {

/// Dense row-major tensor of 64-bit reals. Rank 1 through 4 are supported;
/// scalars are represented as shape {1, 1}.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor full(std::vector<std::size_t> shape, double v);
    /// Rank-1 tensor from values.
    static Tensor vec(std::vector<double> values);
    /// Rank-2 tensor from row-major values.
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rank() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Row/column helpers for the rank-2 case (rank-1 counts as a single row).
    std::size_t rows() const;
    std::size_t cols() const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j, std::size_t k);
    double at(std::size_t i, std::size_t j, std::size_t k) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// Shape rendered as "2x3" for error messages.
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace micns
