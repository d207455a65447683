#include "edm/training.hpp"

#include <cmath>
#include <stdexcept>

#include "binio.hpp"

namespace edm {

MlpDenoiser::MlpDenoiser(std::vector<std::size_t> widths, RngStream& rng)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("mlp: need at least input and output");
    for (std::size_t w : widths_)
        if (w == 0) throw std::invalid_argument("mlp: zero layer width");

    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        std::size_t in = widths_[l], out = widths_[l + 1];
        Tensor w = Tensor::zeros({out, in});
        bool last = l + 2 == widths_.size();
        if (!last) {
            double sc = 1.0 / std::sqrt(static_cast<double>(in));
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = sc * rng.next_normal();
        }
        weights_.push_back(std::move(w));
        biases_.push_back(Tensor::zeros({out}));
    }
}

std::size_t MlpDenoiser::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
}

std::vector<double> MlpDenoiser::assemble_input(const Tensor& x_in, double c_noise,
                                                const std::vector<double>* aug_label) const {
    std::size_t width = widths_.front();
    std::size_t m = x_in.size();
    if (m + 1 > width)
        throw std::invalid_argument("mlp: input wider than the network's first layer");
    std::size_t label_dim = width - m - 1;
    if (aug_label != nullptr && aug_label->size() != label_dim)
        throw std::invalid_argument("mlp: label size does not match the network's label slots");

    std::vector<double> in(width, 0.0);
    for (std::size_t i = 0; i < m; ++i) in[i] = x_in[i];
    in[m] = c_noise;
    if (aug_label != nullptr)
        for (std::size_t i = 0; i < label_dim; ++i) in[m + 1 + i] = (*aug_label)[i];
    return in;
}

namespace {

// act[0] is the assembled input; act[l+1] the post-activation output of
// layer l (linear for the final layer).
std::vector<std::vector<double>> run_layers(const std::vector<Tensor>& ws,
                                            const std::vector<Tensor>& bs,
                                            std::vector<double> input) {
    std::vector<std::vector<double>> act;
    act.push_back(std::move(input));
    for (std::size_t l = 0; l < ws.size(); ++l) {
        std::size_t out = ws[l].shape()[0], in = ws[l].shape()[1];
        std::vector<double> a(out);
        for (std::size_t i = 0; i < out; ++i) {
            double s = bs[l][i];
            for (std::size_t j = 0; j < in; ++j) s += ws[l][i * in + j] * act.back()[j];
            a[i] = l + 1 < ws.size() ? std::tanh(s) : s;
        }
        act.push_back(std::move(a));
    }
    return act;
}

} // namespace

Tensor MlpDenoiser::forward(const Tensor& x_in, double c_noise,
                            const std::vector<double>* aug_label) const {
    auto act = run_layers(weights_, biases_, assemble_input(x_in, c_noise, aug_label));
    std::vector<double> out = std::move(act.back());
    if (out.size() == x_in.size()) return Tensor(x_in.shape(), std::move(out));
    return Tensor({out.size()}, std::move(out));
}

std::pair<Tensor, MlpDenoiser::Grads> MlpDenoiser::forward_backward(
    const Tensor& x_in, double c_noise, const std::vector<double>* aug_label,
    const std::vector<double>& loss_grad_out) const {
    auto act = run_layers(weights_, biases_, assemble_input(x_in, c_noise, aug_label));
    if (loss_grad_out.size() != act.back().size())
        throw std::invalid_argument("mlp: output-gradient size mismatch");

    Grads g = zero_grads();
    std::vector<double> delta = loss_grad_out; // dL/dz of the current layer
    for (std::size_t li = weights_.size(); li-- > 0;) {
        std::size_t out = weights_[li].shape()[0], in = weights_[li].shape()[1];
        bool hidden = li + 1 < weights_.size();
        if (hidden)
            for (std::size_t i = 0; i < out; ++i) {
                double a = act[li + 1][i];
                delta[i] *= 1.0 - a * a; // tanh'
            }
        for (std::size_t i = 0; i < out; ++i) {
            g.b[li][i] = delta[i];
            for (std::size_t j = 0; j < in; ++j) g.w[li][i * in + j] = delta[i] * act[li][j];
        }
        if (li > 0) {
            std::vector<double> prev(in, 0.0);
            for (std::size_t i = 0; i < out; ++i)
                for (std::size_t j = 0; j < in; ++j)
                    prev[j] += weights_[li][i * in + j] * delta[i];
            delta = std::move(prev);
        }
    }

    std::vector<double> out = act.back();
    Tensor y = out.size() == x_in.size() ? Tensor(x_in.shape(), std::move(out))
                                         : Tensor({out.size()}, std::move(out));
    return {std::move(y), std::move(g)};
}

MlpDenoiser::Grads MlpDenoiser::zero_grads() const {
    Grads g;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        g.w.push_back(Tensor::zeros(weights_[l].shape()));
        g.b.push_back(Tensor::zeros(biases_[l].shape()));
    }
    return g;
}

void MlpDenoiser::accumulate(Grads& into, const Grads& g, double scale) {
    for (std::size_t l = 0; l < into.w.size(); ++l) {
        for (std::size_t i = 0; i < into.w[l].size(); ++i) into.w[l][i] += scale * g.w[l][i];
        for (std::size_t i = 0; i < into.b[l].size(); ++i) into.b[l][i] += scale * g.b[l][i];
    }
}

void MlpDenoiser::sgd_update(const Grads& g, double lr) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        for (std::size_t i = 0; i < weights_[l].size(); ++i) weights_[l][i] -= lr * g.w[l][i];
        for (std::size_t i = 0; i < biases_[l].size(); ++i) biases_[l][i] -= lr * g.b[l][i];
    }
}

void MlpDenoiser::save(const std::string& path) const {
    detail::Writer w(path);
    w.raw("EDMW", 4);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(widths_.size()));
    for (std::size_t d : widths_) w.u32(static_cast<std::uint32_t>(d));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        w.raw(weights_[l].data().data(), weights_[l].size() * sizeof(double));
        w.raw(biases_[l].data().data(), biases_[l].size() * sizeof(double));
    }
    w.finish();
}

MlpDenoiser MlpDenoiser::load(const std::string& path) {
    detail::Reader r(path);
    r.magic("EDMW");
    r.version(1);
    std::uint32_t count = r.u32("width count");
    if (count < 2 || count > 64)
        throw FormatError(path + ": implausible layer count " + std::to_string(count) +
                          " at byte offset 8");
    std::vector<std::size_t> widths(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t d = r.u32("widths");
        if (d == 0)
            throw FormatError(path + ": zero layer width at byte offset " +
                              std::to_string(r.offset() - 4));
        widths[i] = d;
    }
    RngStream unused(0, 0);
    MlpDenoiser net(widths, unused);
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
        r.raw(net.weights_[l].data().data(), net.weights_[l].size() * sizeof(double), "weights");
        r.raw(net.biases_[l].data().data(), net.biases_[l].size() * sizeof(double), "biases");
    }
    return net;
}

double sample_sigma_train(RngStream& rng, const TrainConfig& cfg) {
    if (cfg.p_std < 0.0) throw std::invalid_argument("sample_sigma_train: p_std must be >= 0");
    return std::exp(cfg.p_mean + cfg.p_std * rng.next_normal());
}

LossGrads edm_loss(const MlpDenoiser& net, const Tensor& y, RngStream& rng,
                   const TrainConfig& cfg, const std::vector<double>* aug_label) {
    double sigma = sample_sigma_train(rng, cfg);
    Tensor n = gaussian(rng, y.shape(), sigma);
    const std::vector<double>* u = nullptr;
    if (cfg.framework == Framework::IDDPM) u = &iddpm_u_table(cfg.schedule_params);
    PrecondCoeffs c = precond_coeffs(cfg.framework, sigma, cfg.sigma_data, cfg.schedule_params, u);

    Tensor noisy = add(y, n);
    Tensor x_in = scale(c.c_in, noisy);
    std::vector<double> target(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) target[i] = (y[i] - c.c_skip * noisy[i]) / c.c_out;

    double weight = loss_weight(sigma, cfg.sigma_data) * c.c_out * c.c_out;
    double dim = static_cast<double>(y.size());

    // One forward to get the residual, then backprop of the weighted MSE.
    Tensor f0 = net.forward(x_in, c.c_noise, aug_label);
    if (f0.size() != y.size())
        throw std::invalid_argument("edm_loss: network output width must match the data");
    double loss = 0.0;
    std::vector<double> gout(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        double r = f0[i] - target[i];
        loss += r * r;
        gout[i] = weight * 2.0 * r / dim;
    }
    loss = weight * loss / dim;

    auto [f, grads] = net.forward_backward(x_in, c.c_noise, aug_label, gout);
    (void)f;
    return {loss, sigma, std::move(grads)};
}

std::vector<LossRecord> train_loop(MlpDenoiser& net, const Dataset& data, const TrainConfig& cfg,
                                   RngStream& rng) {
    if (cfg.steps < 0 || cfg.batch_size < 1 || cfg.record_every < 1)
        throw std::invalid_argument("train_loop: invalid step configuration");

    std::vector<LossRecord> records;
    for (int step = 0; step < cfg.steps; ++step) {
        auto grads = net.zero_grads();
        double batch_loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const Tensor& y0 = data.samples[rng.next_below(data.samples.size())];
            std::optional<Tensor> augmented;
            std::optional<std::vector<double>> label;
            const Tensor* y = &y0;
            if (cfg.use_augment && y0.rank() == 3) {
                AugmentParams p = draw_augment(rng, cfg.aug);
                augmented = apply_affine(y0, augment_matrix(p, cfg.aug));
                AugmentLabel l = augment_label(p);
                label = std::vector<double>(l.begin(), l.end());
                y = &*augmented;
            }
            LossGrads lg = edm_loss(net, *y, rng, cfg, label ? &*label : nullptr);
            batch_loss += lg.loss;
            MlpDenoiser::accumulate(grads, lg.grads, 1.0);
        }
        double inv = 1.0 / static_cast<double>(cfg.batch_size);
        net.sgd_update(grads, cfg.learning_rate * inv);
        batch_loss *= inv;
        if (step % cfg.record_every == 0 || step + 1 == cfg.steps)
            records.push_back({step, batch_loss});
    }
    return records;
}

std::vector<std::pair<double, double>> loss_profile(const Denoiser& d, double sigma_data,
                                                    const Dataset& data,
                                                    const std::vector<double>& sigma_grid,
                                                    int draws, RngStream& rng) {
    if (draws < 1) throw std::invalid_argument("loss_profile: draws must be >= 1");
    std::vector<std::pair<double, double>> rows;
    for (double sigma : sigma_grid) {
        double lambda = loss_weight(sigma, sigma_data);
        double acc = 0.0;
        for (int k = 0; k < draws; ++k) {
            const Tensor& y = data.samples[rng.next_below(data.samples.size())];
            Tensor noisy = add(y, gaussian(rng, y.shape(), sigma));
            Tensor den = d.denoise(noisy, sigma);
            double e = rmse(den, y);
            acc += lambda * e * e;
        }
        rows.emplace_back(sigma, acc / static_cast<double>(draws));
    }
    return rows;
}

} // namespace edm
