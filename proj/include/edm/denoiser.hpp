#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "edm/dataset.hpp"
#include "edm/rng.hpp"
#include "edm/schedule.hpp"
#include "edm/tensor.hpp"

namespace edm {

enum class Framework { VP, VE, IDDPM, EDM };

/// c_skip/c_out/c_in/c_noise of the preconditioning wrapper.
struct PrecondCoeffs {
    double c_skip;
    double c_out;
    double c_in;
    double c_noise;
};

/// Preconditioning coefficients per framework. The iDDPM variant needs the
/// discrete u_j table to resolve c_noise = argmin_j |u_j - sigma|; the VP
/// variant needs the schedule parameters for sigma^-1.
PrecondCoeffs precond_coeffs(Framework fw, double sigma, double sigma_data,
                             const ScheduleParams& params = {},
                             const std::vector<double>* u_table = nullptr);

/// lambda(sigma) = 1 / c_out(sigma)^2 = (sigma^2 + sigma_data^2) / (sigma sigma_data)^2.
double loss_weight(double sigma, double sigma_data);

/// Raw network surface F(x_in; c_noise, aug_label) wrapped by the
/// preconditioned denoiser.
class RawNet {
public:
    virtual ~RawNet() = default;
    virtual Tensor forward(const Tensor& x_in, double c_noise,
                           const std::vector<double>* aug_label = nullptr) const = 0;
    virtual std::size_t parameter_count() const = 0;
};

/// D(x; sigma): minimum-MSE estimate of the clean signal. Evaluations are
/// counted (NFE) identically across variants.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    Tensor denoise(const Tensor& x, double sigma) const {
        if (!(sigma > 0.0)) throw std::domain_error("denoiser: sigma must be > 0");
        ++nfe_;
        return denoise_impl(x, sigma);
    }

    std::uint64_t nfe() const { return nfe_.load(); }
    void reset_nfe() const { nfe_.store(0); }

    /// True when the variant can draw ground-truth samples from p(x; sigma)
    /// (needed by the analysis procedures).
    virtual bool can_sample_noisy() const { return false; }
    virtual Tensor sample_noisy(RngStream& rng, double sigma) const {
        (void)rng;
        (void)sigma;
        throw std::logic_error("denoiser: this variant cannot sample p(x; sigma)");
    }

    virtual std::vector<std::size_t> sample_shape() const = 0;

protected:
    virtual Tensor denoise_impl(const Tensor& x, double sigma) const = 0;

private:
    mutable std::atomic<std::uint64_t> nfe_{0};
};

/// Closed-form ideal denoiser for a finite dataset: the softmax-weighted
/// average of dataset points with weights exp(-|x - y_i|^2 / (2 sigma^2)).
class AnalyticDenoiser : public Denoiser {
public:
    explicit AnalyticDenoiser(Dataset dataset) : dataset_(std::move(dataset)) {}

    const Dataset& dataset() const { return dataset_; }
    std::vector<std::size_t> sample_shape() const override { return dataset_.sample_shape(); }

    bool can_sample_noisy() const override { return true; }
    Tensor sample_noisy(RngStream& rng, double sigma) const override;

    /// log p(x; sigma) of the Gaussian-mixture density, up to full constants.
    double log_density(const Tensor& x, double sigma) const;

protected:
    Tensor denoise_impl(const Tensor& x, double sigma) const override;

private:
    Dataset dataset_;
};

/// Ideal denoiser for p_data = N(0, sigma_data^2 I):
/// D(x; sigma) = sigma_data^2 / (sigma_data^2 + sigma^2) * x.
class GaussianDenoiser : public Denoiser {
public:
    GaussianDenoiser(double sigma_data, std::vector<std::size_t> shape)
        : sigma_data_(sigma_data), shape_(std::move(shape)) {}

    double sigma_data() const { return sigma_data_; }
    std::vector<std::size_t> sample_shape() const override { return shape_; }

    bool can_sample_noisy() const override { return true; }
    Tensor sample_noisy(RngStream& rng, double sigma) const override {
        return gaussian(rng, shape_, std::sqrt(sigma_data_ * sigma_data_ + sigma * sigma));
    }

    double log_density(const Tensor& x, double sigma) const {
        double var = sigma_data_ * sigma_data_ + sigma * sigma;
        return -0.5 * norm2(x) * norm2(x) / var;
    }

protected:
    Tensor denoise_impl(const Tensor& x, double sigma) const override {
        double f = sigma_data_ * sigma_data_ / (sigma_data_ * sigma_data_ + sigma * sigma);
        return scale(f, x);
    }

private:
    double sigma_data_;
    std::vector<std::size_t> shape_;
};

/// D_theta(x; sigma) = c_skip x + c_out F(c_in x; c_noise), the trained-network
/// realization. Sampling always feeds the zero augmentation label.
class PrecondDenoiser : public Denoiser {
public:
    PrecondDenoiser(std::shared_ptr<const RawNet> net, Framework fw, double sigma_data,
                    std::vector<std::size_t> shape, ScheduleParams params = {})
        : net_(std::move(net)), fw_(fw), sigma_data_(sigma_data), shape_(std::move(shape)),
          params_(params) {
        if (fw_ == Framework::IDDPM) u_table_ = &iddpm_u_table(params_);
    }

    std::vector<std::size_t> sample_shape() const override { return shape_; }
    Framework framework() const { return fw_; }

protected:
    Tensor denoise_impl(const Tensor& x, double sigma) const override {
        PrecondCoeffs c = precond_coeffs(fw_, sigma, sigma_data_, params_, u_table_);
        Tensor f = net_->forward(scale(c.c_in, x), c.c_noise);
        Tensor out = x;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.c_skip * x[i] + c.c_out * f[i];
        return out;
    }

private:
    std::shared_ptr<const RawNet> net_;
    Framework fw_;
    double sigma_data_;
    std::vector<std::size_t> shape_;
    ScheduleParams params_;
    const std::vector<double>* u_table_ = nullptr;
};

/// Score function via the denoiser identity: (D(x; sigma) - x) / sigma^2.
Tensor score(const Denoiser& d, const Tensor& x, double sigma);

} // namespace edm
