#include "edm/schedule.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace edm {

ScheduleEval Schedule::eval(double t) const {
    switch (kind_) {
    case ScheduleKind::EDM:
        if (t < 0.0) throw std::domain_error("schedule: t < 0");
        return {t, 1.0, 1.0, 0.0};
    case ScheduleKind::VE: {
        if (t <= 0.0) throw std::domain_error("schedule: VE requires t > 0");
        double sigma = std::sqrt(t);
        return {sigma, 0.5 / sigma, 1.0, 0.0};
    }
    case ScheduleKind::VP: {
        if (t <= 0.0) throw std::domain_error("schedule: VP requires t > 0");
        double beta = params_.beta_d * t + params_.beta_min;
        double alpha = 0.5 * params_.beta_d * t * t + params_.beta_min * t;
        double ea = std::exp(alpha);
        double sigma = std::sqrt(ea - 1.0);
        double s = std::exp(-0.5 * alpha); // == 1/sqrt(sigma^2 + 1)
        return {sigma, 0.5 * beta * ea / sigma, s, -0.5 * beta * s};
    }
    }
    throw std::logic_error("schedule: unknown kind");
}

double Schedule::invert(double sigma) const {
    if (sigma <= 0.0) throw std::domain_error("schedule: invert requires sigma > 0");
    switch (kind_) {
    case ScheduleKind::EDM:
        return sigma;
    case ScheduleKind::VE:
        return sigma * sigma;
    case ScheduleKind::VP: {
        // Solve beta_d t^2/2 + beta_min t = log(sigma^2 + 1) for t > 0.
        double l = std::log1p(sigma * sigma);
        double bm = params_.beta_min;
        return (std::sqrt(bm * bm + 2.0 * params_.beta_d * l) - bm) / params_.beta_d;
    }
    }
    throw std::logic_error("schedule: unknown kind");
}

std::pair<double, double> Schedule::fg(double t) const {
    ScheduleEval e = eval(t);
    return {e.s_dot / e.s, e.s * std::sqrt(2.0 * e.sigma_dot * e.sigma)};
}

namespace {

double ramp(int i, int n) {
    // i/(N-1), defined as 0 for single-step plans.
    return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
}

void check_plan(const StepPlan& plan) {
    for (std::size_t i = 0; i + 1 < plan.sigma.size(); ++i)
        if (!(plan.sigma[i] > plan.sigma[i + 1]))
            throw std::logic_error("step plan: sigma not strictly decreasing");
}

} // namespace

StepPlan steps_edm(int n, double sigma_min, double sigma_max, double rho) {
    if (n < 1) throw std::invalid_argument("steps_edm: N must be >= 1");
    if (!(sigma_min > 0.0 && sigma_min < sigma_max))
        throw std::invalid_argument("steps_edm: need 0 < sigma_min < sigma_max");
    if (rho < 1.0) throw std::invalid_argument("steps_edm: rho must be >= 1");

    StepPlan plan;
    plan.framework = "edm";
    double inv_rho = 1.0 / rho;
    double hi = std::pow(sigma_max, inv_rho);
    double lo = std::pow(sigma_min, inv_rho);
    for (int i = 0; i < n; ++i) {
        double sigma = std::pow(hi + ramp(i, n) * (lo - hi), rho);
        plan.sigma.push_back(sigma);
        plan.t.push_back(sigma);
    }
    plan.sigma.push_back(0.0);
    plan.t.push_back(0.0);
    check_plan(plan);
    return plan;
}

StepPlan steps_vp(int n, double eps_s, const ScheduleParams& params) {
    if (n < 1) throw std::invalid_argument("steps_vp: N must be >= 1");
    if (!(eps_s > 0.0 && eps_s < 1.0)) throw std::invalid_argument("steps_vp: eps_s out of range");

    Schedule sched(ScheduleKind::VP, params);
    StepPlan plan;
    plan.framework = "vp";
    for (int i = 0; i < n; ++i) {
        double t = 1.0 + ramp(i, n) * (eps_s - 1.0);
        plan.t.push_back(t);
        plan.sigma.push_back(sched.sigma(t));
    }
    plan.t.push_back(0.0); // sigma(0) = 0 for VP
    plan.sigma.push_back(0.0);
    check_plan(plan);
    return plan;
}

StepPlan steps_ve(int n, double sigma_min, double sigma_max) {
    if (n < 1) throw std::invalid_argument("steps_ve: N must be >= 1");
    if (!(sigma_min > 0.0 && sigma_min < sigma_max))
        throw std::invalid_argument("steps_ve: need 0 < sigma_min < sigma_max");

    StepPlan plan;
    plan.framework = "ve";
    for (int i = 0; i < n; ++i) {
        double sigma = sigma_max * sigma_max *
                       std::pow(sigma_min * sigma_min / (sigma_max * sigma_max), ramp(i, n));
        sigma = std::sqrt(sigma);
        plan.sigma.push_back(sigma);
        plan.t.push_back(sigma * sigma);
    }
    plan.sigma.push_back(0.0);
    plan.t.push_back(0.0);
    check_plan(plan);
    return plan;
}

const std::vector<double>& iddpm_u_table(const ScheduleParams& params) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::vector<double>> cache;

    std::scoped_lock lock(mu);
    auto key = std::make_tuple(params.M, params.C1, params.C2);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    int m = params.M;
    auto alpha_bar = [&](int j) {
        double x = std::numbers::pi / 2.0 * static_cast<double>(j) /
                   (static_cast<double>(m) * (1.0 + params.C2));
        double s = std::sin(x);
        return s * s;
    };

    std::vector<double> u(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = m; j >= 1; --j) {
        double ratio = std::max(alpha_bar(j - 1) / alpha_bar(j), params.C1);
        u[j - 1] = std::sqrt((u[j] * u[j] + 1.0) / ratio - 1.0);
    }
    return cache.emplace(key, std::move(u)).first->second;
}

std::size_t nearest_u(const std::vector<double>& u, double sigma) {
    std::size_t best = 0;
    double best_d = std::abs(u[0] - sigma);
    for (std::size_t j = 1; j < u.size(); ++j) {
        double d = std::abs(u[j] - sigma);
        if (d < best_d) {
            best = j;
            best_d = d;
        }
    }
    return best;
}

StepPlan steps_iddpm(int n, const ScheduleParams& params) {
    if (n < 1) throw std::invalid_argument("steps_iddpm: N must be >= 1");
    if (n > params.M - params.j0)
        throw std::invalid_argument("steps_iddpm: N exceeds M - j0 available levels");

    const std::vector<double>& u = iddpm_u_table(params);
    StepPlan plan;
    plan.framework = "iddpm";
    for (int i = 0; i < n; ++i) {
        double jf = params.j0 + (static_cast<double>(params.M - 1 - params.j0)) * ramp(i, n);
        std::size_t j = static_cast<std::size_t>(std::floor(jf));
        plan.t.push_back(u[j]);
        plan.sigma.push_back(u[j]); // iDDPM samples in the sigma(t) = t frame
    }
    plan.t.push_back(0.0);
    plan.sigma.push_back(0.0);
    check_plan(plan);
    return plan;
}

} // namespace edm
