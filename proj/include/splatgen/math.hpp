#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace splatgen {

struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CollapseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProviderError : std::runtime_error {
    ProviderError(const std::string& msg, bool retriable_) : std::runtime_error(msg), retriable(retriable_) {}
    bool retriable = false;
};

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0, y = 0, z = 0;
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0) throw ParamError("cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double k, const Vec3& v) { return v * k; }

// Row-major 3x3.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }
    double& operator()(int r, int c) { return m[std::size_t(r) * 3 + std::size_t(c)]; }
    double operator()(int r, int c) const { return m[std::size_t(r) * 3 + std::size_t(c)]; }

    Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }
    Vec3 col(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

    Vec3 operator*(const Vec3& v) const {
        return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat3 operator*(double k) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] * k;
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
};

// Symmetric 2x2 stored as (xx, xy, yy).
struct Sym2 {
    double xx = 0, xy = 0, yy = 0;

    double det() const { return xx * yy - xy * xy; }
    Sym2 inverse() const {
        double d = det();
        if (d <= 0) throw ParamError("singular 2x2 covariance");
        return {yy / d, -xy / d, xx / d};
    }
    // (p-mu)^T M (p-mu) for M = this.
    double quad(const Vec2& d) const { return xx * d.x * d.x + 2.0 * xy * d.x * d.y + yy * d.y * d.y; }
    Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
};

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double n = norm();
        if (n == 0) throw ParamError("cannot normalize zero quaternion");
        return {w / n, x / n, y / n, z / n};
    }
    Mat3 to_matrix() const {
        Mat3 r;
        r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
               2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
               2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
        return r;
    }
};

// Axis-angle (Rodrigues) to rotation matrix.
inline Mat3 rodrigues(const Vec3& aa) {
    double theta = aa.norm();
    if (theta < 1e-12) return Mat3::identity();
    Vec3 a = aa * (1.0 / theta);
    double c = std::cos(theta), s = std::sin(theta), t = 1 - c;
    Mat3 r;
    r.m = {c + a.x * a.x * t, a.x * a.y * t - a.z * s, a.x * a.z * t + a.y * s,
           a.y * a.x * t + a.z * s, c + a.y * a.y * t, a.y * a.z * t - a.x * s,
           a.z * a.x * t - a.y * s, a.z * a.y * t + a.x * s, c + a.z * a.z * t};
    return r;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
inline double logit(double p) {
    if (p <= 0 || p >= 1) throw ParamError("logit argument must be in (0,1)");
    return std::log(p / (1.0 - p));
}

inline double deg2rad(double d) { return d * M_PI / 180.0; }

constexpr double kSh0 = 0.28209479177387814;  // degree-0 SH basis constant

}  // namespace splatgen
