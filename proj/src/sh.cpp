#include "adgs/scene.hpp"

namespace adgs {
namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};

}  // namespace

void sh_basis(int coeff_count, const Vec3& dir, double* out) {
    const double x = dir.x(), y = dir.y(), z = dir.z();
    out[0] = kC0;
    if (coeff_count > 1) {
        out[1] = -kC1 * y;
        out[2] = kC1 * z;
        out[3] = -kC1 * x;
    }
    if (coeff_count > 4) {
        out[4] = kC2[0] * x * y;
        out[5] = kC2[1] * y * z;
        out[6] = kC2[2] * (2 * z * z - x * x - y * y);
        out[7] = kC2[3] * x * z;
        out[8] = kC2[4] * (x * x - y * y);
    }
}

void sh_basis_grad(int coeff_count, const Vec3& dir, double* basis, Vec3* db) {
    sh_basis(coeff_count, dir, basis);
    const double x = dir.x(), y = dir.y(), z = dir.z();
    db[0] = Vec3::Zero();
    if (coeff_count > 1) {
        db[1] = Vec3(0, -kC1, 0);
        db[2] = Vec3(0, 0, kC1);
        db[3] = Vec3(-kC1, 0, 0);
    }
    if (coeff_count > 4) {
        db[4] = kC2[0] * Vec3(y, x, 0);
        db[5] = kC2[1] * Vec3(0, z, y);
        db[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
        db[7] = kC2[3] * Vec3(z, 0, x);
        db[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
    }
}

}  // namespace adgs
