#include "edm/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace edm {

PrecondCoeffs precond_coeffs(Framework fw, double sigma, double sigma_data,
                             const ScheduleParams& params, const std::vector<double>* u_table) {
    if (!(sigma > 0.0)) throw std::domain_error("precond_coeffs: sigma must be > 0");
    switch (fw) {
    case Framework::VP: {
        Schedule sched(ScheduleKind::VP, params);
        double t = sched.invert(sigma);
        return {1.0, -sigma, 1.0 / std::sqrt(sigma * sigma + 1.0),
                static_cast<double>(params.M - 1) * t};
    }
    case Framework::VE:
        return {1.0, sigma, 1.0, std::log(0.5 * sigma)};
    case Framework::IDDPM: {
        if (u_table == nullptr)
            throw std::invalid_argument("precond_coeffs: iDDPM needs the u_j table");
        double c_noise = static_cast<double>(nearest_u(*u_table, sigma));
        return {1.0, -sigma, 1.0 / std::sqrt(sigma * sigma + 1.0), c_noise};
    }
    case Framework::EDM: {
        double sd2 = sigma_data * sigma_data;
        double sum = sigma * sigma + sd2;
        return {sd2 / sum, sigma * sigma_data / std::sqrt(sum), 1.0 / std::sqrt(sum),
                0.25 * std::log(sigma)};
    }
    }
    throw std::logic_error("precond_coeffs: unknown framework");
}

double loss_weight(double sigma, double sigma_data) {
    if (!(sigma > 0.0)) throw std::domain_error("loss_weight: sigma must be > 0");
    double prod = sigma * sigma_data;
    return (sigma * sigma + sigma_data * sigma_data) / (prod * prod);
}

Tensor AnalyticDenoiser::denoise_impl(const Tensor& x, double sigma) const {
    // Softmax over -|x - y_i|^2 / (2 sigma^2), evaluated with max subtraction
    // so extreme sigma stays finite.
    const auto& ys = dataset_.samples;
    check_same_shape(x, ys.front());

    std::vector<double> logits(ys.size());
    double lmax = -std::numeric_limits<double>::infinity();
    double inv2s2 = 0.5 / (sigma * sigma);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double d = x[k] - ys[i][k];
            d2 += d * d;
        }
        logits[i] = -d2 * inv2s2;
        lmax = std::max(lmax, logits[i]);
    }

    Tensor out = Tensor::zeros(x.shape());
    double wsum = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double w = std::exp(logits[i] - lmax);
        if (w < 1e-300) continue;
        wsum += w;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * ys[i][k];
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= wsum;
    return out;
}

double AnalyticDenoiser::log_density(const Tensor& x, double sigma) const {
    const auto& ys = dataset_.samples;
    check_same_shape(x, ys.front());
    double inv2s2 = 0.5 / (sigma * sigma);
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> logits(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double d = x[k] - ys[i][k];
            d2 += d * d;
        }
        logits[i] = -d2 * inv2s2;
        lmax = std::max(lmax, logits[i]);
    }
    double wsum = 0.0;
    for (double l : logits) wsum += std::exp(l - lmax);
    double dim = static_cast<double>(x.size());
    return lmax + std::log(wsum / static_cast<double>(ys.size())) -
           dim * std::log(sigma) - 0.5 * dim * std::log(2.0 * std::numbers::pi);
}

Tensor AnalyticDenoiser::sample_noisy(RngStream& rng, double sigma) const {
    const Tensor& y = dataset_.samples[rng.next_below(dataset_.samples.size())];
    Tensor n = gaussian(rng, y.shape(), sigma);
    return add(y, n);
}

Tensor score(const Denoiser& d, const Tensor& x, double sigma) {
    Tensor s = sub(d.denoise(x, sigma), x);
    return scale(1.0 / (sigma * sigma), s);
}

} // namespace edm
