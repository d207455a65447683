#include "edm/augment.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace edm {

Mat3 Mat3::identity() {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

Mat3 Mat3::scale2d(double sx, double sy) {
    return {{{sx, 0, 0}, {0, sy, 0}, {0, 0, 1}}};
}

Mat3 Mat3::rotate2d(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

Mat3 Mat3::translate2d(double tx, double ty) {
    return {{{1, 0, tx}, {0, 1, ty}, {0, 0, 1}}};
}

Mat3 Mat3::mul(const Mat3& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += m[i][k] * o.m[k][j];
            r.m[i][j] = s;
        }
    return r;
}

Mat3 Mat3::inverse() const {
    // Affine inverse; the bottom row is (0, 0, 1) by invariant.
    double a = m[0][0], b = m[0][1], tx = m[0][2];
    double c = m[1][0], d = m[1][1], ty = m[1][2];
    double det = a * d - b * c;
    if (det == 0.0) throw std::domain_error("Mat3: singular transform");
    double ia = d / det, ib = -b / det;
    double ic = -c / det, id = a / det;
    return {{{ia, ib, -(ia * tx + ib * ty)}, {ic, id, -(ic * tx + id * ty)}, {0, 0, 1}}};
}

AugmentParams draw_augment(RngStream& rng, const AugmentConstants& c) {
    AugmentParams p;
    p.a0 = static_cast<double>(rng.next_below(2));
    auto enabled = [&] { return rng.next_uniform() <= c.a_prob; };
    if (enabled()) p.a1 = static_cast<double>(rng.next_below(2));
    if (enabled()) p.a2 = rng.next_normal();
    if (enabled()) p.a3 = rng.next_uniform_in(-std::numbers::pi, std::numbers::pi);
    if (enabled()) {
        p.a4 = rng.next_uniform_in(-std::numbers::pi, std::numbers::pi);
        p.a5 = rng.next_normal();
    }
    if (enabled()) {
        p.a6 = rng.next_normal();
        p.a7 = rng.next_normal();
    }
    return p;
}

Mat3 augment_matrix(const AugmentParams& p, const AugmentConstants& c) {
    Mat3 m = Mat3::scale2d(1.0 - 2.0 * p.a0, 1.0);
    m = m.mul(Mat3::scale2d(1.0, 1.0 - 2.0 * p.a1));
    double sc = std::pow(c.a_scale, p.a2);
    m = m.mul(Mat3::scale2d(sc, sc));
    m = m.mul(Mat3::rotate2d(-p.a3));
    double an = std::pow(c.a_aniso, p.a5);
    m = m.mul(Mat3::rotate2d(p.a4).mul(Mat3::scale2d(an, 1.0 / an)).mul(Mat3::rotate2d(-p.a4)));
    m = m.mul(Mat3::translate2d(c.a_trans * p.a6, c.a_trans * p.a7));
    return m;
}

AugmentLabel augment_label(const AugmentParams& p) {
    return {p.a0,
            p.a1,
            p.a2,
            std::cos(p.a3) - 1.0,
            std::sin(p.a3),
            p.a5 * std::cos(p.a4),
            p.a5 * std::sin(p.a4),
            p.a6,
            p.a7};
}

namespace {

double snap(double v) {
    double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? r : v;
}

} // namespace

Tensor apply_affine(const Tensor& image, const Mat3& m) {
    if (image.rank() != 3) throw std::invalid_argument("apply_affine: image must be HxWxC");
    std::size_t h = image.shape()[0], w = image.shape()[1], ch = image.shape()[2];
    Mat3 inv = m.inverse();

    auto pixel = [&](long i, long j, std::size_t k) {
        i = std::clamp<long>(i, 0, static_cast<long>(h) - 1);
        j = std::clamp<long>(j, 0, static_cast<long>(w) - 1);
        return image[(static_cast<std::size_t>(i) * w + static_cast<std::size_t>(j)) * ch + k];
    };

    Tensor out = Tensor::zeros(image.shape());
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            double x = (2.0 * (static_cast<double>(j) + 0.5)) / static_cast<double>(w) - 1.0;
            double y = (2.0 * (static_cast<double>(i) + 0.5)) / static_cast<double>(h) - 1.0;
            double sx = inv.m[0][0] * x + inv.m[0][1] * y + inv.m[0][2];
            double sy = inv.m[1][0] * x + inv.m[1][1] * y + inv.m[1][2];
            double fj = snap((sx + 1.0) * 0.5 * static_cast<double>(w) - 0.5);
            double fi = snap((sy + 1.0) * 0.5 * static_cast<double>(h) - 0.5);
            long j0 = static_cast<long>(std::floor(fj));
            long i0 = static_cast<long>(std::floor(fi));
            double uj = fj - static_cast<double>(j0);
            double ui = fi - static_cast<double>(i0);
            for (std::size_t k = 0; k < ch; ++k) {
                double v00 = pixel(i0, j0, k), v01 = pixel(i0, j0 + 1, k);
                double v10 = pixel(i0 + 1, j0, k), v11 = pixel(i0 + 1, j0 + 1, k);
                double top = v00 + uj * (v01 - v00);
                double bot = v10 + uj * (v11 - v10);
                out[(i * w + j) * ch + k] = top + ui * (bot - top);
            }
        }
    }
    return out;
}

} // namespace edm
