#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace edm {

/// Dense row-major tensor of 64-bit floats. Immutable by convention once
/// constructed (samplers copy rather than mutate shared instances).
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate();
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    void validate() const {
        std::size_t n = 1;
        for (std::size_t d : shape_) {
            if (d == 0) throw std::invalid_argument("tensor: zero dimension");
            n *= d;
        }
        if (n != data_.size())
            throw std::invalid_argument("tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape product " + std::to_string(n));
        for (double v : data_)
            if (!std::isfinite(v)) throw std::invalid_argument("tensor: non-finite element");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Elementwise helpers. All require matching shapes.

inline void check_same_shape(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("tensor: shape mismatch");
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b);
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b);
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline Tensor scale(double s, const Tensor& a) {
    Tensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= s;
    return r;
}

/// r = alpha * x + y
inline Tensor axpy(double alpha, const Tensor& x, const Tensor& y) {
    check_same_shape(x, y);
    Tensor r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += alpha * x[i];
    return r;
}

inline double norm2(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

inline double rmse(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

} // namespace edm
