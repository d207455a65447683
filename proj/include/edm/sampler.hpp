#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "edm/denoiser.hpp"
#include "edm/rng.hpp"
#include "edm/schedule.hpp"
#include "edm/tensor.hpp"

namespace edm {

/// Churn controls of the stochastic sampler. The defaults make it coincide
/// with the deterministic second-order sampler.
struct StochasticParams {
    double s_churn = 0.0;
    double s_tmin = 0.0;
    double s_tmax = std::numeric_limits<double>::infinity();
    double s_noise = 1.0;
};

/// Result of one sampler run. States are retained only on request to bound
/// memory in batch runs; gamma holds the per-step churn factors when the
/// stochastic sampler produced the trajectory.
struct Trajectory {
    Tensor final;
    std::uint64_t nfe = 0;
    std::vector<double> t;
    std::vector<Tensor> states;
    std::vector<double> gamma;
};

/// Right-hand side of the probability-flow ODE:
/// dx/dt = (sigma_dot/sigma + s_dot/s) x - (sigma_dot s / sigma) D(x/s; sigma).
Tensor ode_derivative(const Denoiser& d, const Schedule& sched, const Tensor& x, double t);

/// Latent draw for a given plan: x_0 ~ N(0, sigma_0^2 s(t_0)^2 I).
Tensor prior_latent(RngStream& rng, std::vector<std::size_t> shape, const Schedule& sched,
                    const StepPlan& plan);

Trajectory sample_euler(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                        const Tensor& x0, bool retain_states = false);

/// Trapezoidal second-order sampler; the final step into sigma = 0 falls back
/// to Euler. Identical to sample_rk2_alpha with alpha = 1.
Trajectory sample_heun(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                       const Tensor& x0, bool retain_states = false);

/// Two-stage Runge-Kutta family: x_{i+1} = x_i + h[(1 - 1/(2a)) d_i + (1/(2a)) d'],
/// with d' evaluated at t_i + a h. Requires alpha in (0, 1.2].
Trajectory sample_rk2_alpha(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                            const Tensor& x0, double alpha, bool retain_states = false);

/// Churn sampler: per step raise the noise level by gamma_i, inject fresh
/// noise, then take one second-order step from the raised state. Requires the
/// identity schedule (sigma = t, s = 1). When `discrete_levels` is given, the
/// raised level snaps to the nearest entry before the denoiser is evaluated.
Trajectory sample_stochastic(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                             const Tensor& x0, const StochasticParams& sp, RngStream& rng,
                             bool retain_states = false,
                             const std::vector<double>* discrete_levels = nullptr);

/// First-order discretization of the reverse-time SDE. beta_fn defaults to
/// sigma_dot/sigma. Restricted to s(t) = 1 schedules; beta identically 0
/// reduces it to sample_euler bit-exactly.
Trajectory sample_euler_maruyama(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                                 const Tensor& x0, RngStream& rng,
                                 std::function<double(double)> beta_fn = nullptr,
                                 bool retain_states = false);

/// ODE inversion: integrate from the data at sigma = 0 up to sigma_0. The
/// first leg has no sigma = 0 derivative, so it takes an Euler step with the
/// derivative evaluated at the first positive sigma; later legs use the
/// second-order step.
Trajectory encode(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                  const Tensor& x_data, bool retain_states = false);

} // namespace edm
