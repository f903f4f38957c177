#pragma once

#include "adgs/types.hpp"

#include <vector>

namespace adgs {

/// One anisotropic Gaussian primitive. Scale is stored as log(s) and opacity
/// as a logit so that s > 0 and o in (0,1) hold by construction.
struct Gaussian3D {
    Vec3 mu = Vec3::Zero();
    Vec3 log_scale = Vec3::Zero();
    Vec4 quat = Vec4(1, 0, 0, 0);  // (w, x, y, z)
    double opacity_logit = 0.0;
    ShMatrix sh;  // (degree+1)^2 rows, 3 columns

    Vec3 scale() const { return log_scale.array().exp(); }
    double opacity() const { return logistic(opacity_logit); }
};

/// Pinhole camera with a world-to-camera rigid transform: x_cam = R x + t.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
    double near = 0.01;

    void validate() const;
    Vec3 center() const { return -rotation.transpose() * translation; }
    Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
};

struct GaussianCloud {
    std::vector<Gaussian3D> gaussians;
    int sh_degree = 0;
    Vec3 background_color = Vec3::Zero();

    int size() const { return static_cast<int>(gaussians.size()); }
};

int sh_coeff_count(int degree);

Vec4 normalize_quat(const Vec4& quat);
Mat3 quat_to_rotation(const Vec4& unit_quat);
/// Partial derivatives of quat_to_rotation with respect to the 4 (unit) quaternion components.
std::array<Mat3, 4> quat_rotation_jacobian(const Vec4& unit_quat);

/// Sigma = R diag(s) diag(s)^T R^T with s = exp(log_scale).
Mat3 build_covariance(const Vec3& log_scale, const Vec4& quat);

/// Real spherical-harmonics basis evaluated at a unit direction; `out` holds
/// coeff_count values. Also available with per-component direction gradients.
void sh_basis(int coeff_count, const Vec3& dir, double* out);
void sh_basis_grad(int coeff_count, const Vec3& dir, double* basis, Vec3* dbasis_ddir);

/// RGB = clamp(sum_k basis_k * sh_k + 0.5, 0, 1).
Vec3 eval_sh_color(const ShMatrix& sh, const Vec3& view_dir);

}  // namespace adgs
