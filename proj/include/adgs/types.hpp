#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace adgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using ShMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;  // K coefficients x RGB

/// Three-channel image, each channel stored height x width.
struct Image {
    int height = 0;
    int width = 0;
    std::array<Eigen::ArrayXXd, 3> ch;

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w) {
        for (auto& c : ch) c = Eigen::ArrayXXd::Constant(h, w, fill);
    }

    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }

    Vec3 pixel(int r, int c) const { return {ch[0](r, c), ch[1](r, c), ch[2](r, c)}; }
    void set_pixel(int r, int c, const Vec3& v) {
        ch[0](r, c) = v.x();
        ch[1](r, c) = v.y();
        ch[2](r, c) = v.z();
    }
};

using DepthMap = Eigen::ArrayXXd;

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": image shapes differ");
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace adgs
