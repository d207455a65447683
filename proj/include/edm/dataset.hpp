#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "edm/tensor.hpp"

namespace edm {

/// Finite collection of equally shaped samples; stands in for p_data.
struct Dataset {
    std::vector<Tensor> samples;
    std::string name;

    Dataset() = default;
    Dataset(std::vector<Tensor> s, std::string n) : samples(std::move(s)), name(std::move(n)) {
        validate();
    }

    void validate() const {
        if (samples.empty()) throw std::invalid_argument("dataset: empty sample list");
        for (const Tensor& t : samples)
            if (!t.same_shape(samples.front()))
                throw std::invalid_argument("dataset: non-uniform sample shapes");
    }

    const std::vector<std::size_t>& sample_shape() const { return samples.front().shape(); }
    std::size_t dim() const { return samples.front().size(); }

    /// Mean of all samples, elementwise.
    Tensor mean() const {
        Tensor m = Tensor::zeros(sample_shape());
        for (const Tensor& t : samples)
            for (std::size_t i = 0; i < m.size(); ++i) m[i] += t[i];
        double inv = 1.0 / static_cast<double>(samples.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] *= inv;
        return m;
    }

    /// Empirical per-element standard deviation around zero (the sigma_data
    /// convention used by the preconditioning formulas).
    double empirical_std() const {
        double s = 0.0;
        std::size_t n = 0;
        for (const Tensor& t : samples) {
            for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
            n += t.size();
        }
        return std::sqrt(s / static_cast<double>(n));
    }
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Binary tensor-file formats, little-endian:
//   tensor file:  "EDMT" u32 version=1, u32 rank, u32 dims[rank], f64 payload
//   dataset file: "EDMD" u32 version=1, u32 count, `count` tensor records
Tensor tensor_load(const std::string& path);
void tensor_save(const Tensor& t, const std::string& path);
Dataset dataset_load(const std::string& path);
void dataset_save(const Dataset& d, const std::string& path);

} // namespace edm
