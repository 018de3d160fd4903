#include "micns/tensor.hpp"

#include <cmath>
#include <utility>

#include "micns/errors.hpp"

namespace micns {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return "scalar";
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    if (shape_.empty() || shape_.size() > 4)
        throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape_.size()));
    for (std::size_t d : shape_)
        if (d == 0) throw ShapeError("tensor dimension must be positive, shape " + shape_to_string(shape_));
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 4)
        throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape_.size()));
    if (data_.size() != shape_product(shape_))
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size())
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str());
    return shape_[axis];
}

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape_[0]; }

std::size_t Tensor::cols() const { return rank() == 1 ? shape_[0] : shape_[rank() - 1]; }

double& Tensor::at(std::size_t i, std::size_t j) {
    if (rank() == 1) {
        if (i != 0) throw ShapeError("row index on rank-1 tensor must be 0");
        return data_[j];
    }
    if (rank() != 2) throw ShapeError("2-index access on tensor of shape " + shape_str());
    return data_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return const_cast<Tensor*>(this)->at(i, j);
}

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
    if (rank() != 3) throw ShapeError("3-index access on tensor of shape " + shape_str());
    return data_[(i * shape_[1] + j) * shape_[2] + k];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
    return const_cast<Tensor*>(this)->at(i, j, k);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace micns
