#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edm/augment.hpp"
#include "edm/dataset.hpp"
#include "edm/denoiser.hpp"
#include "edm/rng.hpp"
#include "edm/tensor.hpp"

namespace edm {

/// Training hyper-parameters. The noise-level distribution is
/// ln(sigma) ~ N(p_mean, p_std^2).
struct TrainConfig {
    double p_mean = -1.2;
    double p_std = 1.2;
    double sigma_data = 0.5;
    Framework framework = Framework::EDM;
    double learning_rate = 2e-2;
    int batch_size = 32;
    int steps = 5000;
    int record_every = 100;
    bool use_augment = false;
    AugmentConstants aug;
    ScheduleParams schedule_params;
};

struct LossRecord {
    int step;
    double loss;
};

/// Small fully connected network realizing the raw denoiser F. Input layout:
/// data elements, then the noise conditioning scalar, then any label
/// coordinates (zero-filled when absent). Hidden activations are tanh, the
/// output layer is linear and initialized to zero so F == 0 at start.
class MlpDenoiser : public RawNet {
public:
    struct Grads {
        std::vector<Tensor> w;
        std::vector<Tensor> b;
    };

    MlpDenoiser(std::vector<std::size_t> widths, RngStream& rng);

    Tensor forward(const Tensor& x_in, double c_noise,
                   const std::vector<double>* aug_label = nullptr) const override;
    std::size_t parameter_count() const override;

    /// Forward pass plus gradients of `loss_grad_out` (dL/d output) with
    /// respect to every weight and bias.
    std::pair<Tensor, Grads> forward_backward(const Tensor& x_in, double c_noise,
                                              const std::vector<double>* aug_label,
                                              const std::vector<double>& loss_grad_out) const;

    Grads zero_grads() const;
    static void accumulate(Grads& into, const Grads& g, double scale);
    void sgd_update(const Grads& g, double lr);

    const std::vector<std::size_t>& widths() const { return widths_; }
    std::vector<Tensor>& weights() { return weights_; }
    std::vector<Tensor>& biases() { return biases_; }
    const std::vector<Tensor>& weights() const { return weights_; }
    const std::vector<Tensor>& biases() const { return biases_; }

    // Weights file: magic "EDMW", u32 version = 1, u32 width count,
    // u32 widths, then per layer the weight matrix (out x in) and bias.
    void save(const std::string& path) const;
    static MlpDenoiser load(const std::string& path);

private:
    std::vector<double> assemble_input(const Tensor& x_in, double c_noise,
                                       const std::vector<double>* aug_label) const;

    std::vector<std::size_t> widths_;
    std::vector<Tensor> weights_; // per layer, shape {out, in}
    std::vector<Tensor> biases_;  // per layer, shape {out}
};

/// sigma = exp(p_mean + p_std * z), z standard normal.
double sample_sigma_train(RngStream& rng, const TrainConfig& cfg);

struct LossGrads {
    double loss;
    double sigma;
    MlpDenoiser::Grads grads;
};

/// One-sample denoising score-matching loss with the framework's
/// preconditioning: the network sees c_in (y + n) and is trained toward
/// (y - c_skip (y + n)) / c_out; the recorded loss carries the weight
/// lambda(sigma) c_out(sigma)^2 (identically 1 for the EDM coefficients).
LossGrads edm_loss(const MlpDenoiser& net, const Tensor& y, RngStream& rng,
                   const TrainConfig& cfg, const std::vector<double>* aug_label = nullptr);

/// Plain SGD over uniformly drawn dataset samples. Deterministic given the
/// stream; emits a LossRecord every cfg.record_every steps and at the end.
std::vector<LossRecord> train_loop(MlpDenoiser& net, const Dataset& data, const TrainConfig& cfg,
                                   RngStream& rng);

/// Monte-Carlo per-sigma expected loss of any denoiser realization:
/// lambda(sigma) E |D(y + n; sigma) - y|^2 / dim. For a preconditioned
/// network this equals the training loss at that sigma.
std::vector<std::pair<double, double>> loss_profile(const Denoiser& d, double sigma_data,
                                                    const Dataset& data,
                                                    const std::vector<double>& sigma_grid,
                                                    int draws, RngStream& rng);

} // namespace edm
