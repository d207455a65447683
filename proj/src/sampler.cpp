#include "edm/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace edm {
namespace {

// Shared RHS arithmetic so every integrator that already holds D(x/s; sigma)
// produces bit-identical derivatives.
Tensor ode_derivative_given(const ScheduleEval& e, const Tensor& x, const Tensor& dx) {
    double cx = e.sigma_dot / e.sigma + e.s_dot / e.s;
    double cd = -e.sigma_dot * e.s / e.sigma;
    Tensor r = x;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = cx * x[k] + cd * dx[k];
    return r;
}

Tensor derivative_at(const Denoiser& d, const Schedule& sched, const Tensor& x, double t,
                     std::uint64_t& nfe) {
    ScheduleEval e = sched.eval(t);
    if (!(e.sigma > 0.0)) throw std::domain_error("ode_derivative: sigma(t) = 0");
    Tensor xin = e.s == 1.0 ? x : scale(1.0 / e.s, x);
    Tensor den = d.denoise(xin, e.sigma);
    ++nfe;
    return ode_derivative_given(e, x, den);
}

// One two-stage step from (x, t) to t_next. Falls back to Euler when the
// second evaluation point would leave the schedule domain (sigma = 0).
Tensor rk2_step(const Denoiser& d, const Schedule& sched, const Tensor& x, double t,
                double t_next, double alpha, std::uint64_t& nfe) {
    Tensor di = derivative_at(d, sched, x, t, nfe);
    double h = t_next - t;
    double t_mid = alpha == 1.0 ? t_next : t + alpha * h;
    if (t_mid <= 0.0) return axpy(h, di, x);
    Tensor x_mid = axpy(alpha * h, di, x);
    Tensor dp = derivative_at(d, sched, x_mid, t_mid, nfe);
    double w0 = 1.0 - 1.0 / (2.0 * alpha);
    double w1 = 1.0 / (2.0 * alpha);
    Tensor r = x;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = x[k] + h * (w0 * di[k] + w1 * dp[k]);
    return r;
}

void retain(Trajectory& traj, bool on, double t, const Tensor& x) {
    if (!on) return;
    traj.t.push_back(t);
    traj.states.push_back(x);
}

void check_plan_nonempty(const StepPlan& plan) {
    if (plan.t.size() < 2) throw std::invalid_argument("sampler: plan needs at least one step");
}

} // namespace

Tensor ode_derivative(const Denoiser& d, const Schedule& sched, const Tensor& x, double t) {
    std::uint64_t nfe = 0;
    return derivative_at(d, sched, x, t, nfe);
}

Tensor prior_latent(RngStream& rng, std::vector<std::size_t> shape, const Schedule& sched,
                    const StepPlan& plan) {
    double stddev = plan.sigma[0] * sched.eval(plan.t[0]).s;
    return gaussian(rng, std::move(shape), stddev);
}

Trajectory sample_euler(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                        const Tensor& x0, bool retain_states) {
    check_plan_nonempty(plan);
    Trajectory traj;
    Tensor x = x0;
    retain(traj, retain_states, plan.t[0], x);
    for (std::size_t i = 0; i + 1 < plan.t.size(); ++i) {
        Tensor di = derivative_at(d, sched, x, plan.t[i], traj.nfe);
        x = axpy(plan.t[i + 1] - plan.t[i], di, x);
        retain(traj, retain_states, plan.t[i + 1], x);
    }
    traj.final = std::move(x);
    return traj;
}

Trajectory sample_rk2_alpha(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                            const Tensor& x0, double alpha, bool retain_states) {
    check_plan_nonempty(plan);
    if (!(alpha > 0.0 && alpha <= 1.2))
        throw std::invalid_argument("sample_rk2_alpha: alpha must be in (0, 1.2]");
    Trajectory traj;
    Tensor x = x0;
    retain(traj, retain_states, plan.t[0], x);
    for (std::size_t i = 0; i + 1 < plan.t.size(); ++i) {
        x = rk2_step(d, sched, x, plan.t[i], plan.t[i + 1], alpha, traj.nfe);
        retain(traj, retain_states, plan.t[i + 1], x);
    }
    traj.final = std::move(x);
    return traj;
}

Trajectory sample_heun(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                       const Tensor& x0, bool retain_states) {
    return sample_rk2_alpha(d, sched, plan, x0, 1.0, retain_states);
}

Trajectory sample_stochastic(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                             const Tensor& x0, const StochasticParams& sp, RngStream& rng,
                             bool retain_states, const std::vector<double>* discrete_levels) {
    check_plan_nonempty(plan);
    if (sched.kind() != ScheduleKind::EDM)
        throw std::invalid_argument(
            "sample_stochastic: requires the identity schedule (sigma = t, s = 1)");
    if (sp.s_churn < 0.0 || sp.s_tmin < 0.0 || sp.s_tmax < sp.s_tmin || !(sp.s_noise > 0.0))
        throw std::invalid_argument("sample_stochastic: invalid churn parameters");

    const double gamma_cap = std::sqrt(2.0) - 1.0; // never more new noise than present
    double n_steps = static_cast<double>(plan.steps());

    Trajectory traj;
    Tensor x = x0;
    retain(traj, retain_states, plan.t[0], x);
    for (std::size_t i = 0; i + 1 < plan.t.size(); ++i) {
        double t = plan.t[i];
        double gamma = 0.0;
        if (t >= sp.s_tmin && t <= sp.s_tmax) gamma = std::min(sp.s_churn / n_steps, gamma_cap);
        traj.gamma.push_back(gamma);

        // Noise is drawn every step so the stream stays aligned across
        // different churn settings.
        Tensor eps = gaussian(rng, x.shape(), sp.s_noise);
        double t_hat = t;
        if (gamma > 0.0) {
            t_hat = t + gamma * t;
            if (discrete_levels != nullptr)
                t_hat = (*discrete_levels)[nearest_u(*discrete_levels, t_hat)];
            double inj = std::sqrt(t_hat * t_hat - t * t);
            x = axpy(inj, eps, x);
        }
        x = rk2_step(d, sched, x, t_hat, plan.t[i + 1], 1.0, traj.nfe);
        retain(traj, retain_states, plan.t[i + 1], x);
    }
    traj.final = std::move(x);
    return traj;
}

Trajectory sample_euler_maruyama(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                                 const Tensor& x0, RngStream& rng,
                                 std::function<double(double)> beta_fn, bool retain_states) {
    check_plan_nonempty(plan);
    if (sched.kind() == ScheduleKind::VP)
        throw std::invalid_argument("sample_euler_maruyama: requires an s(t) = 1 schedule");

    Trajectory traj;
    Tensor x = x0;
    retain(traj, retain_states, plan.t[0], x);
    for (std::size_t i = 0; i + 1 < plan.t.size(); ++i) {
        double t = plan.t[i];
        ScheduleEval e = sched.eval(t);
        double beta = beta_fn ? beta_fn(t) : e.sigma_dot / e.sigma;
        if (beta < 0.0) throw std::domain_error("sample_euler_maruyama: beta < 0");
        double h = plan.t[i + 1] - t;

        Tensor den = d.denoise(x, e.sigma);
        ++traj.nfe;
        Tensor di = ode_derivative_given(e, x, den);

        Tensor eps = gaussian(rng, x.shape(), 1.0);
        if (beta > 0.0) {
            // Reverse-time SDE: the deterministic drift gains beta (x - D)
            // and the diffusion term sqrt(2 beta) sigma persists.
            double g = std::sqrt(2.0 * beta) * e.sigma * std::sqrt(-h);
            Tensor nx = x;
            for (std::size_t k = 0; k < nx.size(); ++k)
                nx[k] = x[k] + h * (di[k] + beta * (x[k] - den[k])) + g * eps[k];
            x = std::move(nx);
        } else {
            x = axpy(h, di, x);
        }
        retain(traj, retain_states, plan.t[i + 1], x);
    }
    traj.final = std::move(x);
    return traj;
}

Trajectory encode(const Denoiser& d, const Schedule& sched, const StepPlan& plan,
                  const Tensor& x_data, bool retain_states) {
    check_plan_nonempty(plan);
    std::size_t n = plan.t.size() - 1; // index of the sigma = 0 entry

    Trajectory traj;
    Tensor x = x_data;
    retain(traj, retain_states, plan.t[n], x);

    // First leg: no derivative exists at sigma = 0, so step with the
    // derivative taken at the first positive level.
    Tensor d0 = derivative_at(d, sched, x, plan.t[n - 1], traj.nfe);
    x = axpy(plan.t[n - 1] - plan.t[n], d0, x);
    retain(traj, retain_states, plan.t[n - 1], x);

    for (std::size_t i = n - 1; i > 0; --i) {
        x = rk2_step(d, sched, x, plan.t[i], plan.t[i - 1], 1.0, traj.nfe);
        retain(traj, retain_states, plan.t[i - 1], x);
    }
    traj.final = std::move(x);
    return traj;
}

} // namespace edm
