#include "edm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace edm {
namespace {

StepPlan single_step(const StepPlan& plan, std::size_t i) {
    StepPlan p;
    p.framework = plan.framework;
    p.t = {plan.t[i], plan.t[i + 1]};
    p.sigma = {plan.sigma[i], plan.sigma[i + 1]};
    return p;
}

Tensor run_sampler(SamplerKind kind, double alpha, const Denoiser& d, const Schedule& sched,
                   const StepPlan& plan, const Tensor& x0) {
    switch (kind) {
    case SamplerKind::Euler:
        return sample_euler(d, sched, plan, x0).final;
    case SamplerKind::Heun:
        return sample_heun(d, sched, plan, x0).final;
    case SamplerKind::Rk2:
        return sample_rk2_alpha(d, sched, plan, x0, alpha).final;
    }
    throw std::logic_error("run_sampler: unknown kind");
}

void push_stats(ErrorCurve& curve, double abscissa, const std::vector<double>& errs) {
    double m = 0.0;
    for (double e : errs) m += e;
    m /= static_cast<double>(errs.size());
    double v = 0.0;
    for (double e : errs) v += (e - m) * (e - m);
    v /= static_cast<double>(errs.size());
    curve.abscissa.push_back(abscissa);
    curve.mean.push_back(m);
    curve.stddev.push_back(std::sqrt(v));
}

} // namespace

ErrorCurve truncation_scan(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                           SamplerKind solver, int substeps, int trials, RngStream& rng,
                           double alpha) {
    if (substeps < 1) throw std::invalid_argument("truncation_scan: substeps must be >= 1");
    if (trials < 1) throw std::invalid_argument("truncation_scan: trials must be >= 1");
    if (!d.can_sample_noisy())
        throw std::invalid_argument(
            "truncation_scan: ground-truth sampling needs an analytic denoiser");

    ErrorCurve curve;
    for (std::size_t i = 0; i + 1 < plan.t.size(); ++i) {
        double t0 = plan.t[i], t1 = plan.t[i + 1];
        double s0 = sched.eval(t0).s;
        StepPlan leg = single_step(plan, i);
        std::vector<double> errs;
        for (int k = 0; k < trials; ++k) {
            Tensor x = d.sample_noisy(rng, plan.sigma[i]);
            if (s0 != 1.0) x = scale(s0, x);

            Tensor coarse = run_sampler(solver, alpha, d, sched, leg, x);

            Tensor fine = x;
            for (int j = 0; j < substeps; ++j) {
                double ta = t0 + (t1 - t0) * static_cast<double>(j) / substeps;
                double tb = t0 + (t1 - t0) * static_cast<double>(j + 1) / substeps;
                fine = axpy(tb - ta, ode_derivative(d, sched, fine, ta), fine);
            }
            errs.push_back(rmse(coarse, fine));
        }
        push_stats(curve, plan.sigma[i], errs);
    }
    return curve;
}

double convergence_order(const Denoiser& d, const Schedule& sched,
                         const std::function<StepPlan(int)>& make_plan, SamplerKind kind,
                         double alpha, const std::vector<int>& n_list, int trials,
                         RngStream& rng, ErrorCurve* curve) {
    if (n_list.size() < 2)
        throw std::invalid_argument("convergence_order: need at least two step counts");
    if (trials < 1) throw std::invalid_argument("convergence_order: trials must be >= 1");
    int n_max = *std::max_element(n_list.begin(), n_list.end());
    // Reference: the same sampler at 8x the largest N, so per-method
    // systematic differences on the final fixed-size leg cancel out and the
    // fit sees only the step-refinement error.
    StepPlan ref_plan = make_plan(8 * n_max);

    std::vector<std::vector<double>> errs(n_list.size());
    StepPlan p0 = make_plan(n_list.front());
    for (int k = 0; k < trials; ++k) {
        Tensor x0 = prior_latent(rng, d.sample_shape(), sched, p0);
        Tensor ref = run_sampler(kind, alpha, d, sched, ref_plan, x0);
        for (std::size_t j = 0; j < n_list.size(); ++j) {
            Tensor end = run_sampler(kind, alpha, d, sched, make_plan(n_list[j]), x0);
            errs[j].push_back(rmse(end, ref));
        }
    }

    std::vector<double> mean_err(n_list.size(), 0.0);
    for (std::size_t j = 0; j < n_list.size(); ++j) {
        for (double e : errs[j]) mean_err[j] += e;
        mean_err[j] /= static_cast<double>(trials);
        if (curve != nullptr) push_stats(*curve, static_cast<double>(n_list[j]), errs[j]);
    }

    // Least-squares slope of log(mean error) against log(N).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = static_cast<double>(n_list.size());
    for (std::size_t j = 0; j < n_list.size(); ++j) {
        double x = std::log(static_cast<double>(n_list[j]));
        double y = std::log(mean_err[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ErrorCurve roundtrip_error(const Denoiser& d, const Schedule& sched,
                           const std::function<StepPlan(int)>& make_plan,
                           const std::vector<int>& n_list, const Dataset& data, int trials) {
    if (trials < 1) throw std::invalid_argument("roundtrip_error: trials must be >= 1");
    ErrorCurve curve;
    for (int n : n_list) {
        StepPlan plan = make_plan(n);
        std::vector<double> errs;
        for (int k = 0; k < trials; ++k) {
            const Tensor& y = data.samples[static_cast<std::size_t>(k) % data.samples.size()];
            Tensor z = encode(d, sched, plan, y).final;
            Tensor back = sample_heun(d, sched, plan, z).final;
            errs.push_back(rmse(back, y));
        }
        push_stats(curve, static_cast<double>(n), errs);
    }
    return curve;
}

ErrorCurve churn_degradation(const AnalyticDenoiser& d, double sigma_fixed, int iterations,
                             double s_noise, RngStream& rng, int record_every) {
    if (!(sigma_fixed > 0.0)) throw std::invalid_argument("churn_degradation: sigma must be > 0");
    if (iterations < 0 || record_every < 1)
        throw std::invalid_argument("churn_degradation: invalid iteration counts");

    const int chains = 8;
    const double gamma = std::sqrt(2.0) - 1.0;
    Schedule sched(ScheduleKind::EDM);

    auto nearest_distance = [&](const Tensor& x) {
        Tensor den = d.denoise(x, sigma_fixed);
        double best = std::numeric_limits<double>::infinity();
        for (const Tensor& y : d.dataset().samples) best = std::min(best, rmse(den, y));
        return best;
    };

    std::vector<Tensor> xs;
    std::vector<double> base;
    for (int c = 0; c < chains; ++c) {
        xs.push_back(d.sample_noisy(rng, sigma_fixed));
        base.push_back(nearest_distance(xs.back()));
    }

    double t_hat = sigma_fixed + gamma * sigma_fixed;
    double inj = std::sqrt(t_hat * t_hat - sigma_fixed * sigma_fixed);

    ErrorCurve curve;
    auto record = [&](int iter) {
        std::vector<double> drift;
        for (int c = 0; c < chains; ++c)
            drift.push_back(std::abs(nearest_distance(xs[c]) - base[c]));
        push_stats(curve, static_cast<double>(iter), drift);
    };

    record(0);
    for (int it = 1; it <= iterations; ++it) {
        for (int c = 0; c < chains; ++c) {
            Tensor eps = gaussian(rng, xs[c].shape(), s_noise);
            Tensor raised = axpy(inj, eps, xs[c]);
            StepPlan leg;
            leg.framework = "edm";
            leg.t = {t_hat, sigma_fixed};
            leg.sigma = {t_hat, sigma_fixed};
            xs[c] = sample_heun(d, sched, leg, raised).final;
        }
        if (it % record_every == 0 || it == iterations) record(it);
    }
    return curve;
}

} // namespace edm
