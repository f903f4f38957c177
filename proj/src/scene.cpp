#include "adgs/scene.hpp"

#include <cmath>

namespace adgs {

void Camera::validate() const {
    if (fx <= 0 || fy <= 0) throw InvalidParameter("Camera: focal lengths must be positive");
    if (width < 1 || height < 1) throw InvalidParameter("Camera: image size must be at least 1x1");
    if (near <= 0) throw InvalidParameter("Camera: near plane must be positive");
    if (((rotation.transpose() * rotation) - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw InvalidParameter("Camera: rotation is not orthonormal");
}

int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

Vec4 normalize_quat(const Vec4& quat) {
    const double n = quat.norm();
    if (n <= 1e-12) throw InvalidParameter("normalize_quat: near-zero quaternion");
    return quat / n;
}

Mat3 quat_to_rotation(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

std::array<Mat3, 4> quat_rotation_jacobian(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    std::array<Mat3, 4> d;
    d[0] << 0, -2 * z, 2 * y,
            2 * z, 0, -2 * x,
            -2 * y, 2 * x, 0;
    d[1] << 0, 2 * y, 2 * z,
            2 * y, -4 * x, -2 * w,
            2 * z, 2 * w, -4 * x;
    d[2] << -4 * y, 2 * x, 2 * w,
            2 * x, 0, 2 * z,
            -2 * w, 2 * z, -4 * y;
    d[3] << -4 * z, -2 * w, 2 * x,
            2 * w, -4 * z, 2 * y,
            2 * x, 2 * y, 0;
    return d;
}

Mat3 build_covariance(const Vec3& log_scale, const Vec4& quat) {
    const Mat3 r = quat_to_rotation(normalize_quat(quat));
    const Vec3 s = log_scale.array().exp();
    const Mat3 a = r * s.asDiagonal();
    return a * a.transpose();
}

Vec3 eval_sh_color(const ShMatrix& sh, const Vec3& view_dir) {
    const int k = static_cast<int>(sh.rows());
    if (k != 1 && k != 4 && k != 9)
        throw ShapeError("eval_sh_color: coefficient count must be (L+1)^2 for L in {0,1,2}");
    double basis[9];
    sh_basis(k, view_dir, basis);
    Vec3 rgb = Vec3::Constant(0.5);
    for (int i = 0; i < k; ++i) rgb += basis[i] * sh.row(i).transpose();
    return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace adgs
