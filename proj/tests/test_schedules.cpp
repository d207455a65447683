#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "edm/schedule.hpp"

using namespace edm;

TEST_CASE("variance-preserving schedule hits its documented range") {
    Schedule vp(ScheduleKind::VP);
    // sigma(1) = sqrt(exp(19.9/2 + 0.1) - 1), frozen from direct evaluation.
    CHECK(vp.sigma(1.0) == doctest::Approx(152.1669702839464).epsilon(1e-9));
    CHECK(vp.sigma(1.0) > 151.0);
    CHECK(vp.sigma(1.0) < 153.0);

    ScheduleEval e = vp.eval(0.5);
    CHECK(e.s == doctest::Approx(1.0 / std::sqrt(e.sigma * e.sigma + 1.0)).epsilon(1e-12));
}

TEST_CASE("identity and square-root schedules") {
    Schedule edm(ScheduleKind::EDM);
    ScheduleEval e = edm.eval(3.0);
    CHECK(e.sigma == 3.0);
    CHECK(e.sigma_dot == 1.0);
    CHECK(e.s == 1.0);
    CHECK(e.s_dot == 0.0);

    Schedule ve(ScheduleKind::VE);
    ScheduleEval v = ve.eval(4.0);
    CHECK(v.sigma == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(v.sigma_dot == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(v.s == 1.0);

    CHECK_THROWS_AS(ve.eval(0.0), std::domain_error);
    CHECK_THROWS_AS(edm.eval(-1.0), std::domain_error);
}

TEST_CASE("inversion round trips across the domain") {
    for (ScheduleKind k : {ScheduleKind::VP, ScheduleKind::VE, ScheduleKind::EDM}) {
        Schedule s(k);
        for (double sigma : {0.002, 0.02, 0.5, 1.0, 10.0, 80.0, 152.0}) {
            double t = s.invert(sigma);
            CHECK(s.sigma(t) == doctest::Approx(sigma).epsilon(1e-10));
        }
        CHECK_THROWS_AS(s.invert(0.0), std::domain_error);
    }
    Schedule edm(ScheduleKind::EDM);
    CHECK(edm.invert(80.0) == 80.0);
    Schedule ve(ScheduleKind::VE);
    CHECK(ve.invert(2.0) == doctest::Approx(4.0).epsilon(1e-14));
    Schedule vp(ScheduleKind::VP);
    CHECK(vp.invert(152.1669702839464) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("analytic derivatives match finite differences") {
    std::uint64_t state = 12345;
    auto next01 = [&] {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) * 0x1.0p-53;
    };
    for (ScheduleKind k : {ScheduleKind::VP, ScheduleKind::VE, ScheduleKind::EDM}) {
        Schedule s(k);
        for (int i = 0; i < 100; ++i) {
            double t = 0.01 + 0.98 * next01();
            double h = 1e-6 * t;
            ScheduleEval e = s.eval(t);
            ScheduleEval ep = s.eval(t + h), em = s.eval(t - h);
            double fd_sigma = (ep.sigma - em.sigma) / (2 * h);
            double fd_s = (ep.s - em.s) / (2 * h);
            CHECK(e.sigma_dot == doctest::Approx(fd_sigma).epsilon(1e-6));
            if (k == ScheduleKind::VP)
                CHECK(e.s_dot == doctest::Approx(fd_s).epsilon(1e-6));
            else
                CHECK(e.s_dot == 0.0);
        }
    }
}

TEST_CASE("polynomial step plan endpoints and interior") {
    StepPlan p = steps_edm(10, 0.002, 80.0, 7.0);
    REQUIRE(p.t.size() == 11);
    CHECK(p.sigma[0] == 80.0);
    CHECK(p.sigma[9] == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(p.sigma[10] == 0.0);
    // Frozen from direct evaluation of the interpolation formula at i = 5.
    CHECK(p.sigma[5] == doctest::Approx(1.501741979068008).epsilon(1e-9));

    StepPlan lin = steps_edm(3, 0.002, 80.0, 1.0);
    CHECK(lin.sigma[1] == doctest::Approx(40.001).epsilon(1e-12));

    StepPlan one = steps_edm(1, 0.002, 80.0, 7.0);
    CHECK(one.sigma[0] == 80.0);
    CHECK(one.sigma[1] == 0.0);

    CHECK_THROWS_AS(steps_edm(0, 0.002, 80.0, 7.0), std::invalid_argument);
    CHECK_THROWS_AS(steps_edm(4, 80.0, 0.002, 7.0), std::invalid_argument);
    CHECK_THROWS_AS(steps_edm(4, 0.002, 80.0, 0.5), std::invalid_argument);
}

TEST_CASE("uniform-time plan for the variance-preserving family") {
    StepPlan p2 = steps_vp(2, 1e-3);
    CHECK(p2.t[0] == 1.0);
    CHECK(p2.t[1] == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(p2.t[2] == 0.0);
    CHECK(p2.sigma[2] == 0.0);

    StepPlan p3 = steps_vp(3, 1e-3);
    CHECK(p3.t[1] == doctest::Approx(0.5005).epsilon(1e-12));

    StepPlan p = steps_vp(256, 1e-3);
    double gap = p.t[0] - p.t[1];
    for (std::size_t i = 0; i + 2 < p.t.size(); ++i) {
        CHECK(p.t[i] > p.t[i + 1]);
        CHECK(p.t[i] - p.t[i + 1] == doctest::Approx(gap).epsilon(1e-9));
    }
}

TEST_CASE("geometric plan for the variance-exploding family") {
    StepPlan p = steps_ve(3, 0.02, 80.0);
    CHECK(p.sigma[0] == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(p.sigma[1] == doctest::Approx(std::sqrt(80.0 * 0.02)).epsilon(1e-12));
    CHECK(p.sigma[2] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(p.t[1] == doctest::Approx(p.sigma[1] * p.sigma[1]).epsilon(1e-12));

    StepPlan q = steps_ve(8, 0.02, 80.0);
    double ratio = q.sigma[1] / q.sigma[0];
    for (std::size_t i = 0; i + 2 < q.sigma.size(); ++i)
        CHECK(q.sigma[i + 1] / q.sigma[i] == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("discrete cosine-schedule noise table") {
    const std::vector<double>& u = iddpm_u_table();
    REQUIRE(u.size() == 1001);
    CHECK(u[1000] == 0.0);
    CHECK(u[0] == doctest::Approx(20291.0).epsilon(0.01));
    CHECK(u[1] == doctest::Approx(642.0).epsilon(0.01));
    // Frozen from the recurrence itself.
    CHECK(u[0] == doctest::Approx(20291.169610021469).epsilon(1e-9));
    for (std::size_t j = 0; j + 1 < u.size(); ++j) CHECK(u[j] > u[j + 1]);

    CHECK(nearest_u(u, 1e9) == 0);
    CHECK(nearest_u(u, 0.0) == 1000);

    StepPlan p = steps_iddpm(64);
    CHECK(p.t.size() == 65);
    CHECK(p.sigma.back() == 0.0);
    CHECK(p.sigma[0] == doctest::Approx(u[8]).epsilon(1e-15));
    CHECK_THROWS_AS(steps_iddpm(993), std::invalid_argument);
}

TEST_CASE("step sizes shrink toward the low-noise end") {
    StepPlan e = steps_edm(32, 0.002, 80.0, 7.0);
    for (std::size_t i = 0; i + 3 < e.sigma.size(); ++i)
        CHECK(e.sigma[i] - e.sigma[i + 1] > e.sigma[i + 1] - e.sigma[i + 2]);

    // The discrete-table plan jitters step to step because of the floor in
    // the index selection, so check the trend on quarter averages.
    StepPlan q = steps_iddpm(32);
    double prev = -1.0;
    for (int quarter = 3; quarter >= 0; --quarter) {
        double acc = 0.0;
        for (int i = quarter * 8; i < quarter * 8 + 8; ++i) acc += q.sigma[i] - q.sigma[i + 1];
        if (prev >= 0.0) CHECK(acc / 8.0 > prev);
        prev = acc / 8.0;
    }
}

TEST_CASE("drift and diffusion views of the schedules") {
    Schedule edm(ScheduleKind::EDM);
    auto [f1, g1] = edm.fg(3.0);
    CHECK(f1 == 0.0);
    CHECK(g1 == doctest::Approx(std::sqrt(6.0)).epsilon(1e-15));

    Schedule ve(ScheduleKind::VE);
    auto [f2, g2] = ve.fg(4.0);
    CHECK(f2 == 0.0);
    CHECK(g2 == doctest::Approx(1.0).epsilon(1e-12));

    Schedule vp(ScheduleKind::VP);
    auto [f3, g3] = vp.fg(0.5);
    double beta = 19.9 * 0.5 + 0.1;
    CHECK(f3 == doctest::Approx(-0.5 * beta).epsilon(1e-10));
    CHECK(g3 > 0.0);
}

TEST_CASE("every plan ends exactly at zero and decreases strictly") {
    for (const StepPlan& p : {steps_edm(16, 0.002, 80.0, 7.0), steps_vp(16, 1e-3),
                              steps_ve(16, 0.02, 80.0), steps_iddpm(16)}) {
        CHECK(p.sigma.back() == 0.0);
        CHECK(p.steps() == 16);
        for (std::size_t i = 0; i + 1 < p.sigma.size(); ++i) CHECK(p.sigma[i] > p.sigma[i + 1]);
    }
}
