#pragma once

#include <array>
#include <cmath>

#include "edm/rng.hpp"
#include "edm/tensor.hpp"

namespace edm {

/// Pipeline constants. a_prob gates every augmentation except the x-flip,
/// which always draws its coin.
struct AugmentConstants {
    double a_prob = 0.12;
    double a_scale = std::pow(2.0, 0.2);
    double a_aniso = std::pow(2.0, 0.2);
    double a_trans = 0.125;
};

/// The eight random parameters. A disabled augmentation leaves its
/// parameters exactly 0, which maps to the identity factor.
struct AugmentParams {
    double a0 = 0.0; // x-flip coin
    double a1 = 0.0; // y-flip coin
    double a2 = 0.0; // isotropic log-scale
    double a3 = 0.0; // rotation angle
    double a4 = 0.0; // anisotropy axis angle
    double a5 = 0.0; // anisotropy log-magnitude
    double a6 = 0.0; // translation x
    double a7 = 0.0; // translation y
};

/// Conditioning vector fed to the network alongside the image. All zeros iff
/// no augmentation fired.
using AugmentLabel = std::array<double, 9>;

/// Homogeneous 2-D transform; bottom row stays (0, 0, 1).
struct Mat3 {
    double m[3][3];

    static Mat3 identity();
    static Mat3 scale2d(double sx, double sy);
    static Mat3 rotate2d(double theta);
    static Mat3 translate2d(double tx, double ty);

    Mat3 mul(const Mat3& o) const;
    Mat3 inverse() const;
};

/// Draw order is fixed: x-flip coin, then for each gated augmentation its
/// enable coin followed by its parameters (skipped entirely when disabled).
AugmentParams draw_augment(RngStream& rng, const AugmentConstants& c = {});

/// Product of the six per-augmentation factors, composed in pipeline order:
/// x-flip, y-flip, scaling, rotation, anisotropy, translation.
Mat3 augment_matrix(const AugmentParams& p, const AugmentConstants& c = {});

AugmentLabel augment_label(const AugmentParams& p);

/// Resample an HxWxC image under the transform, output-driven through the
/// inverse map. Coordinates are normalized to [-1, 1]^2 about the center;
/// bilinear filtering with edge clamping; source coordinates within 1e-9 of
/// an integer snap to it so flips and 90-degree rotations stay bit-exact.
Tensor apply_affine(const Tensor& image, const Mat3& m);

} // namespace edm
