#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "edm/augment.hpp"

using namespace edm;

namespace {

bool mat_equal(const Mat3& a, const Mat3& b, double tol) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(a.m[i][j] - b.m[i][j]) > tol) return false;
    return true;
}

// Asymmetric 4x4 single-channel pattern: every pixel value distinct.
Tensor pattern4() {
    std::vector<double> v(16);
    for (int i = 0; i < 16; ++i) v[static_cast<std::size_t>(i)] = i * i + 3.0;
    return Tensor({4, 4, 1}, std::move(v));
}

bool bit_identical(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

TEST_CASE("no parameters means the identity transform and zero label") {
    AugmentParams p;
    CHECK(mat_equal(augment_matrix(p), Mat3::identity(), 0.0));
    for (double v : augment_label(p)) CHECK(v == 0.0);
}

TEST_CASE("single-factor matrices match their closed forms") {
    AugmentParams flip;
    flip.a0 = 1.0;
    Mat3 f = augment_matrix(flip);
    CHECK(f.m[0][0] == -1.0);
    CHECK(f.m[1][1] == 1.0);
    CHECK(f.m[0][1] == 0.0);
    CHECK(f.m[1][0] == 0.0);

    AugmentParams rot;
    rot.a3 = std::numbers::pi / 2.0;
    Mat3 r = augment_matrix(rot);
    Mat3 want{{{0, 1, 0}, {-1, 0, 0}, {0, 0, 1}}};
    CHECK(mat_equal(r, want, 1e-15));

    AugmentParams tr;
    tr.a6 = 2.0;
    tr.a7 = -4.0;
    Mat3 t = augment_matrix(tr);
    CHECK(t.m[0][2] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(t.m[1][2] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("conditioning vector entries") {
    AugmentParams rot;
    rot.a3 = std::numbers::pi / 2.0;
    AugmentLabel l = augment_label(rot);
    CHECK(l[3] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(l[4] == doctest::Approx(1.0).epsilon(1e-15));

    AugmentParams an;
    an.a4 = 0.0;
    an.a5 = 1.0;
    AugmentLabel la = augment_label(an);
    CHECK(la[5] == 1.0);
    CHECK(la[6] == 0.0);

    AugmentParams tr;
    tr.a6 = 0.3;
    tr.a7 = -0.7;
    AugmentLabel lt = augment_label(tr);
    CHECK(lt[7] == 0.3);
    CHECK(lt[8] == -0.7);
}

TEST_CASE("gating probabilities") {
    AugmentConstants off;
    off.a_prob = 0.0;
    RngStream rng(1, 0);
    for (int i = 0; i < 1000; ++i) {
        AugmentParams p = draw_augment(rng, off);
        CHECK((p.a0 == 0.0 || p.a0 == 1.0));
        CHECK(p.a1 == 0.0);
        CHECK(p.a2 == 0.0);
        CHECK(p.a3 == 0.0);
        CHECK(p.a4 == 0.0);
        CHECK(p.a5 == 0.0);
        CHECK(p.a6 == 0.0);
        CHECK(p.a7 == 0.0);
    }

    AugmentConstants always;
    always.a_prob = 1.0;
    RngStream rng2(2, 0);
    for (int i = 0; i < 1000; ++i) {
        AugmentParams p = draw_augment(rng2, always);
        // Continuous parameters are almost surely nonzero when drawn.
        CHECK(p.a2 != 0.0);
        CHECK(p.a3 != 0.0);
        CHECK(p.a5 != 0.0);
        CHECK(p.a6 != 0.0);
    }

    // Default gate rate 0.12, measured on the continuously distributed flags.
    RngStream rng3(3, 0);
    const int n = 100000;
    int scale_on = 0, rot_on = 0, aniso_on = 0, trans_on = 0, yflip_on = 0;
    for (int i = 0; i < n; ++i) {
        AugmentParams p = draw_augment(rng3);
        if (p.a2 != 0.0) ++scale_on;
        if (p.a3 != 0.0) ++rot_on;
        if (p.a5 != 0.0) ++aniso_on;
        if (p.a6 != 0.0 || p.a7 != 0.0) ++trans_on;
        if (p.a1 == 1.0) ++yflip_on;
    }
    for (int c : {scale_on, rot_on, aniso_on, trans_on})
        CHECK(static_cast<double>(c) / n == doctest::Approx(0.12).epsilon(0.05));
    // The y-flip coin itself is fair, so its observable rate is half the gate.
    CHECK(static_cast<double>(yflip_on) / n == doctest::Approx(0.06).epsilon(0.08));
}

TEST_CASE("matrix inverse and singular rejection") {
    AugmentParams p;
    p.a0 = 1.0;
    p.a3 = 0.37;
    p.a6 = 1.0;
    Mat3 m = augment_matrix(p);
    Mat3 id = m.mul(m.inverse());
    CHECK(mat_equal(id, Mat3::identity(), 1e-14));
    CHECK_THROWS_AS(Mat3::scale2d(0.0, 1.0).inverse(), std::domain_error);
}

TEST_CASE("identity resampling is bit exact") {
    Tensor img = pattern4();
    CHECK(bit_identical(apply_affine(img, Mat3::identity()), img));
}

TEST_CASE("two x-flips restore the image bit exactly") {
    Tensor img = pattern4();
    AugmentParams p;
    p.a0 = 1.0;
    Mat3 flip = augment_matrix(p);
    Tensor once = apply_affine(img, flip);
    CHECK_FALSE(bit_identical(once, img));
    CHECK(bit_identical(apply_affine(once, flip), img));

    // One flip is the exact column reversal.
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(once[i * 4 + j] == img[i * 4 + (3 - j)]);
}

TEST_CASE("quarter-turn rotation is an exact index permutation") {
    Tensor img = pattern4();
    AugmentParams p;
    p.a3 = std::numbers::pi / 2.0;
    Tensor rot = apply_affine(img, augment_matrix(p));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(rot[i * 4 + j] == img[j * 4 + (3 - i)]);
}

TEST_CASE("one combined transform equals sequential application") {
    Tensor img = pattern4();
    AugmentParams rot;
    rot.a3 = std::numbers::pi / 2.0;
    AugmentParams flip;
    flip.a0 = 1.0;
    Mat3 m1 = augment_matrix(rot);
    Mat3 m2 = augment_matrix(flip);

    Tensor sequential = apply_affine(apply_affine(img, m1), m2);
    Tensor combined = apply_affine(img, m2.mul(m1));
    CHECK(bit_identical(sequential, combined));
}

TEST_CASE("non-image tensors are rejected") {
    CHECK_THROWS_AS(apply_affine(Tensor({4}, {1, 2, 3, 4}), Mat3::identity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_affine(Tensor({2, 2}, {1, 2, 3, 4}), Mat3::identity()),
                    std::invalid_argument);
}

TEST_CASE("bilinear interpolation of a half-pixel shift averages neighbors") {
    // Translate by exactly one pixel in x: a6 such that a_trans*a6 = 2/W.
    Tensor img = pattern4();
    AugmentParams p;
    p.a6 = (2.0 / 4.0) / 0.125; // one-pixel shift in normalized coordinates
    Tensor shifted = apply_affine(img, augment_matrix(p));
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 1; j < 4; ++j) CHECK(shifted[i * 4 + j] == img[i * 4 + j - 1]);
        CHECK(shifted[i * 4] == img[i * 4]); // edge clamp
    }

    AugmentParams hp;
    hp.a6 = (1.0 / 4.0) / 0.125; // half-pixel shift
    Tensor half = apply_affine(img, augment_matrix(hp));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 1; j < 4; ++j)
            CHECK(half[i * 4 + j] ==
                  doctest::Approx(0.5 * (img[i * 4 + j] + img[i * 4 + j - 1])).epsilon(1e-12));
}

TEST_CASE("multi-channel images keep channels independent") {
    std::vector<double> v(4 * 4 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) * 1.5 - 3.0;
    Tensor img({4, 4, 2}, std::move(v));
    AugmentParams p;
    p.a0 = 1.0;
    Tensor flipped = apply_affine(img, augment_matrix(p));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(flipped[(i * 4 + j) * 2 + k] == img[(i * 4 + (3 - j)) * 2 + k]);
}
