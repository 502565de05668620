#pragma once

#include "splatgen/math.hpp"

namespace splatgen {

/// Perspective camera parameterized on a sphere around a look-at target.
/// World convention: +y up, the body front faces +z, azimuth 0 = frontal view.
struct Camera {
    double distance = 2.0;
    double elevation = 0.0;  // degrees above the horizontal plane
    double azimuth = 0.0;    // degrees, 0 faces +z
    double fovy = 60.0;      // degrees
    Vec3 target{};
    int width = 512;
    int height = 512;
    double near = 0.01;
    double far = 100.0;

    Vec3 position() const {
        double el = deg2rad(elevation), az = deg2rad(azimuth);
        Vec3 offset{std::sin(az) * std::cos(el), std::sin(el), std::cos(az) * std::cos(el)};
        return target + offset * distance;
    }

    // Orthonormal view basis: rows are (right, up, forward) in world space.
    Mat3 view_rotation() const {
        Vec3 fwd = (target - position()).normalized();
        Vec3 world_up{0, 1, 0};
        Vec3 right = fwd.cross(world_up);
        if (right.norm() < 1e-9) right = Vec3{1, 0, 0};  // looking straight up/down
        right = right.normalized();
        Vec3 up = right.cross(fwd);
        Mat3 r;
        r.m = {right.x, right.y, right.z, up.x, up.y, up.z, fwd.x, fwd.y, fwd.z};
        return r;
    }

    double focal() const { return 0.5 * height / std::tan(0.5 * deg2rad(fovy)); }

    // World point to camera space (x right, y up, z forward depth).
    Vec3 to_view(const Vec3& p) const { return view_rotation() * (p - position()); }
};

inline Camera camera_from_spherical(double distance, double elevation, double azimuth,
                                    double fovy, const Vec3& target, int width, int height) {
    if (!(fovy > 0.0 && fovy < 180.0)) throw ParamError("fovy must be in (0, 180) degrees");
    if (distance <= 0.0) throw ParamError("camera distance must be positive");
    if (width < 1 || height < 1) throw ParamError("image size must be at least 1x1");
    Camera cam;
    cam.distance = distance;
    cam.elevation = elevation;
    cam.azimuth = azimuth;
    cam.fovy = fovy;
    cam.target = target;
    cam.width = width;
    cam.height = height;
    return cam;
}

struct Projected {
    Vec2 pixel{};
    double view_depth = 0;
    bool renderable = false;  // false when at/behind the near plane
};

/// Centered pixel convention: world target lands on ((w-1)/2, (h-1)/2).
inline Projected project_point(const Camera& cam, const Vec3& p) {
    Vec3 t = cam.to_view(p);
    Projected out;
    out.view_depth = t.z;
    out.renderable = t.z > cam.near;
    if (!out.renderable) return out;
    double f = cam.focal();
    out.pixel.x = 0.5 * (cam.width - 1) + f * t.x / t.z;
    out.pixel.y = 0.5 * (cam.height - 1) - f * t.y / t.z;
    return out;
}

/// Sigma = R diag(s^2) R^T.
inline Mat3 covariance_from(const Vec3& scale, const Quat& rotation) {
    if (!(scale.x > 0 && scale.y > 0 && scale.z > 0)) throw ParamError("scale components must be positive");
    Mat3 r = rotation.normalized().to_matrix();
    Mat3 d{};
    d(0, 0) = scale.x * scale.x;
    d(1, 1) = scale.y * scale.y;
    d(2, 2) = scale.z * scale.z;
    Mat3 cov = r * d * r.transposed();
    // symmetrize against rounding
    Mat3 out = cov;
    out(0, 1) = out(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    out(0, 2) = out(2, 0) = 0.5 * (cov(0, 2) + cov(2, 0));
    out(1, 2) = out(2, 1) = 0.5 * (cov(1, 2) + cov(2, 1));
    return out;
}

// Anti-aliasing floor on the projected covariance diagonal, in px^2.
constexpr double kCov2dFloor = 0.3;

/// First-order (EWA) perspective projection of a 3D covariance: J W Sigma W^T J^T.
inline Sym2 project_covariance(const Camera& cam, const Vec3& mu, const Mat3& sigma3d) {
    Mat3 w = cam.view_rotation();
    Vec3 t = w * (mu - cam.position());
    if (t.z <= cam.near) throw ParamError("gaussian center behind near plane");
    double f = cam.focal();
    double iz = 1.0 / t.z, iz2 = iz * iz;
    // J rows: d(pixel)/d(view point); image y runs down.
    double j00 = f * iz, j02 = -f * t.x * iz2;
    double j11 = -f * iz, j12 = f * t.y * iz2;
    // T = J * W (2x3), rows:
    Vec3 t0 = w.row(0) * j00 + w.row(2) * j02;
    Vec3 t1 = w.row(1) * j11 + w.row(2) * j12;
    Vec3 st0 = sigma3d * t0, st1 = sigma3d * t1;
    Sym2 out{t0.dot(st0) + kCov2dFloor, t0.dot(st1), t1.dot(st1) + kCov2dFloor};
    return out;
}

}  // namespace splatgen
