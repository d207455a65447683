#pragma once

#include <functional>
#include <string>
#include <vector>

#include "edm/denoiser.hpp"
#include "edm/sampler.hpp"
#include "edm/schedule.hpp"

namespace edm {

/// Error measurements along an abscissa (noise level, step count, or
/// iteration). Means and standard deviations are RMSE values.
struct ErrorCurve {
    std::vector<double> abscissa;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::string metric = "rmse";
};

enum class SamplerKind { Euler, Heun, Rk2 };

/// Per-step local error of one solver step against a fine-grained Euler
/// ground truth over the same interval. The state entering each step is
/// drawn from p(x; sigma_i), so the denoiser must support noisy sampling.
/// Abscissa: the noise level at the start of each step.
ErrorCurve truncation_scan(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                           SamplerKind solver, int substeps, int trials, RngStream& rng,
                           double alpha = 1.0);

/// Least-squares slope of log(endpoint RMSE) against log(N). The reference
/// endpoint is computed with the same sampler at 8x the largest N.
/// When `curve` is given it receives the per-N error statistics.
double convergence_order(const Denoiser& d, const Schedule& sched,
                         const std::function<StepPlan(int)>& make_plan, SamplerKind kind,
                         double alpha, const std::vector<int>& n_list, int trials,
                         RngStream& rng, ErrorCurve* curve = nullptr);

/// Encode each sample to the prior and decode it back; RMSE against the
/// original per step count N.
ErrorCurve roundtrip_error(const Denoiser& d, const Schedule& sched,
                           const std::function<StepPlan(int)>& make_plan,
                           const std::vector<int>& n_list, const Dataset& data, int trials);

/// Fixed-noise-level churn cycling: repeatedly raise the noise level by the
/// clamp factor sqrt(2) - 1, inject noise, and take one second-order step
/// back down. Records the distance of the denoised state from the nearest
/// dataset point every `record_every` iterations.
ErrorCurve churn_degradation(const AnalyticDenoiser& d, double sigma_fixed, int iterations,
                             double s_noise, RngStream& rng, int record_every = 100);

} // namespace edm
