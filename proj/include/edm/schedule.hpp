#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace edm {

enum class ScheduleKind { VP, VE, EDM };

/// Constants for the three schedule families and the iDDPM step table.
/// Defaults follow the reference parameterization of each framework.
struct ScheduleParams {
    double beta_d = 19.9;
    double beta_min = 0.1;
    double eps_s = 1e-3;
    double eps_t = 1e-5;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    int M = 1000;
    double C1 = 0.001;
    double C2 = 0.008;
    int j0 = 8;
};

/// Pointwise schedule values at time t.
struct ScheduleEval {
    double sigma;
    double sigma_dot;
    double s;
    double s_dot;
};

/// Noise schedule sigma(t) and scaling s(t) with analytic derivatives and
/// inverse. VP: sigma = sqrt(exp(beta_d t^2/2 + beta_min t) - 1),
/// s = 1/sqrt(sigma^2+1). VE: sigma = sqrt(t), s = 1. EDM: sigma = t, s = 1.
class Schedule {
public:
    Schedule(ScheduleKind kind, ScheduleParams params = {}) : kind_(kind), params_(params) {}

    ScheduleKind kind() const { return kind_; }
    const ScheduleParams& params() const { return params_; }

    ScheduleEval eval(double t) const;
    double sigma(double t) const { return eval(t).sigma; }

    /// t such that sigma(t) == sigma; requires sigma > 0.
    double invert(double sigma) const;

    /// Drift/diffusion view of the forward SDE: f(t) = s_dot/s,
    /// g(t) = s * sqrt(2 sigma_dot sigma).
    std::pair<double, double> fg(double t) const;

private:
    ScheduleKind kind_;
    ScheduleParams params_;
};

/// Descending sequence of sampling times t_0 > ... > t_N with their noise
/// levels; sigma_N is exactly 0.
struct StepPlan {
    std::string framework; // "edm", "vp", "ve", "iddpm"
    std::vector<double> t;
    std::vector<double> sigma;

    std::size_t steps() const { return t.size() - 1; } // N
};

StepPlan steps_edm(int n, double sigma_min, double sigma_max, double rho);
StepPlan steps_vp(int n, double eps_s, const ScheduleParams& params = {});
StepPlan steps_ve(int n, double sigma_min, double sigma_max);
StepPlan steps_iddpm(int n, const ScheduleParams& params = {});

/// The discrete noise levels u_j, j = 0..M, of the iDDPM cosine schedule,
/// computed by the backward recurrence from u_M = 0. Cached per parameter set.
const std::vector<double>& iddpm_u_table(const ScheduleParams& params = {});

/// Index of the u_j nearest to sigma; ties resolve to the smaller j.
std::size_t nearest_u(const std::vector<double>& u, double sigma);

} // namespace edm
