#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float64 array. Images use the H x W x C layout; network
/// inputs are the same buffer read as a flat vector.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    /// Like the data constructor, but also rejects NaN and Inf.
    static Tensor input(Shape shape, std::vector<double> data);
    static Tensor vector(std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Same buffer, different shape; sizes must agree.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const;

    // Image accessors for rank-3 H x W x C tensors.
    std::size_t height() const;
    std::size_t width() const;
    std::size_t channels() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

double l2_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

/// Index of the largest entry; the first one wins on ties.
std::size_t argmax(std::span<const double> v);

}  // namespace jad
