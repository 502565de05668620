#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "splatgen/cloud.hpp"
#include "splatgen/image.hpp"
#include "splatgen/parallel.hpp"

namespace splatgen {

constexpr int kTileSize = 16;
constexpr double kTransmittanceFloor = 1e-4;  // early stop
constexpr double kSigmaSkip = 1e-8;           // per-splat contribution cutoff
constexpr double kSupportCut = 4.5;           // exponent cut = 3-sigma support
constexpr double kSigmaMax = 0.999;           // per-splat opacity cap, keeps 1/(1-sigma) finite
constexpr int kMaxContribPerPixel = 1024;

enum class DepthNorm { MinMax, NearFar };

struct ProjectedGaussian {
    Vec2 mu2d{};
    Sym2 cov2d{};
    Sym2 conic{};
    double depth = 0;
    double radius = 0;  // 0 = culled (behind near plane or off screen)
    Vec3 color{};
    double opacity = 0;
};

struct TileBin {
    std::vector<std::uint32_t> order;  // gaussian indices sorted by (depth, index)
};

/// Forward render result plus everything the backward pass needs to replay
/// the per-pixel blends in reverse.
struct RenderOutput {
    Image rgb;        // H x W x 3
    Image depth_raw;  // H x W, alpha-blended view depths
    Image depth;      // H x W, normalized to [0,1]
    Image alpha;      // H x W

    // blend state
    std::vector<std::int32_t> contrib_count;  // per pixel, entries applied in bin order
    std::vector<double> final_T;
    std::vector<std::uint8_t> foreground;  // alpha > 0.5
    double depth_min = 0, depth_max = 0;
    std::int64_t depth_argmin = -1, depth_argmax = -1;
    bool has_foreground = false;

    std::vector<ProjectedGaussian> proj;
    std::vector<TileBin> bins;
    int tiles_x = 0, tiles_y = 0;
    Vec3 background{};
    DepthNorm depth_norm = DepthNorm::MinMax;
};

namespace detail {

inline void project_all(const GaussianCloud& cloud, const Camera& cam,
                        std::vector<ProjectedGaussian>& proj) {
    const std::size_t n = cloud.size();
    proj.assign(n, {});
    const Mat3 w = cam.view_rotation();
    const Vec3 pos = cam.position();
    const double f = cam.focal();
    const double cx = 0.5 * (cam.width - 1), cy = 0.5 * (cam.height - 1);
    parallel_for(n, [&](std::size_t i) {
        Vec3 t = w * (cloud.position(i) - pos);
        if (t.z <= cam.near) return;
        ProjectedGaussian& g = proj[i];
        g.depth = t.z;
        g.mu2d = {cx + f * t.x / t.z, cy - f * t.y / t.z};
        Mat3 sigma = covariance_from(cloud.scale(i), cloud.rotation(i));
        double iz = 1.0 / t.z, iz2 = iz * iz;
        Vec3 t0 = w.row(0) * (f * iz) + w.row(2) * (-f * t.x * iz2);
        Vec3 t1 = w.row(1) * (-f * iz) + w.row(2) * (f * t.y * iz2);
        Vec3 s0 = sigma * t0, s1 = sigma * t1;
        g.cov2d = {t0.dot(s0) + kCov2dFloor, t0.dot(s1), t1.dot(s1) + kCov2dFloor};
        g.conic = g.cov2d.inverse();
        double mid = 0.5 * (g.cov2d.xx + g.cov2d.yy);
        double disc = std::sqrt(std::max(0.0, 0.25 * (g.cov2d.xx - g.cov2d.yy) * (g.cov2d.xx - g.cov2d.yy) +
                                                  g.cov2d.xy * g.cov2d.xy));
        double lmax = mid + disc;
        g.radius = 3.0 * std::sqrt(lmax);
        g.color = cloud.color(i);
        g.opacity = cloud.opacity(i);
        // cull fully off-screen splats
        if (g.mu2d.x + g.radius < -0.5 || g.mu2d.x - g.radius > cam.width - 0.5 ||
            g.mu2d.y + g.radius < -0.5 || g.mu2d.y - g.radius > cam.height - 0.5)
            g.radius = 0;
    });
}

inline void build_bins(const std::vector<ProjectedGaussian>& proj, int width, int height,
                       int tiles_x, int tiles_y, std::vector<TileBin>& bins) {
    bins.assign(std::size_t(tiles_x) * std::size_t(tiles_y), {});
    for (std::uint32_t i = 0; i < proj.size(); ++i) {
        const ProjectedGaussian& g = proj[i];
        if (g.radius <= 0) continue;
        int x0 = std::max(0, int(std::floor((g.mu2d.x - g.radius) / kTileSize)));
        int x1 = std::min(tiles_x - 1, int(std::floor((g.mu2d.x + g.radius) / kTileSize)));
        int y0 = std::max(0, int(std::floor((g.mu2d.y - g.radius) / kTileSize)));
        int y1 = std::min(tiles_y - 1, int(std::floor((g.mu2d.y + g.radius) / kTileSize)));
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                bins[std::size_t(ty) * std::size_t(tiles_x) + std::size_t(tx)].order.push_back(i);
    }
    (void)width;
    (void)height;
    parallel_for(bins.size(), [&](std::size_t b) {
        auto& v = bins[b].order;
        std::sort(v.begin(), v.end(), [&](std::uint32_t a, std::uint32_t c) {
            if (proj[a].depth != proj[c].depth) return proj[a].depth < proj[c].depth;
            return a < c;
        });
    });
}

}  // namespace detail

inline RenderOutput render(const GaussianCloud& cloud, const Camera& cam,
                           const Vec3& background, DepthNorm depth_norm = DepthNorm::MinMax) {
    const int w = cam.width, h = cam.height;
    RenderOutput out;
    out.rgb = Image(w, h, 3);
    out.depth_raw = Image(w, h, 1);
    out.depth = Image(w, h, 1, 1.0);
    out.alpha = Image(w, h, 1);
    out.contrib_count.assign(std::size_t(w) * std::size_t(h), 0);
    out.final_T.assign(std::size_t(w) * std::size_t(h), 1.0);
    out.foreground.assign(std::size_t(w) * std::size_t(h), 0);
    out.background = background;
    out.depth_norm = depth_norm;
    out.tiles_x = (w + kTileSize - 1) / kTileSize;
    out.tiles_y = (h + kTileSize - 1) / kTileSize;

    detail::project_all(cloud, cam, out.proj);
    detail::build_bins(out.proj, w, h, out.tiles_x, out.tiles_y, out.bins);

    parallel_for(out.bins.size(), [&](std::size_t b) {
        const auto& order = out.bins[b].order;
        int tx = int(b) % out.tiles_x, ty = int(b) / out.tiles_x;
        int px0 = tx * kTileSize, py0 = ty * kTileSize;
        int px1 = std::min(px0 + kTileSize, w), py1 = std::min(py0 + kTileSize, h);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                std::size_t pix = std::size_t(py) * std::size_t(w) + std::size_t(px);
                double T = 1.0;
                Vec3 color{};
                double draw = 0;
                int applied_end = 0, applied = 0;
                Vec2 p{double(px), double(py)};
                for (std::size_t k = 0; k < order.size(); ++k) {
                    const ProjectedGaussian& g = out.proj[order[k]];
                    Vec2 d = p - g.mu2d;
                    double power = 0.5 * g.conic.quad(d);
                    if (power > kSupportCut) continue;
                    double sigma = g.opacity * std::exp(-power);
                    if (sigma < kSigmaSkip) continue;
                    if (sigma > kSigmaMax) sigma = kSigmaMax;
                    color += g.color * (sigma * T);
                    draw += g.depth * sigma * T;
                    T *= 1.0 - sigma;
                    applied_end = int(k) + 1;
                    if (T < kTransmittanceFloor) break;  // truncate the tail of the sum
                    if (++applied >= kMaxContribPerPixel) break;
                }
                out.rgb.at(px, py, 0) = color.x + background.x * T;
                out.rgb.at(px, py, 1) = color.y + background.y * T;
                out.rgb.at(px, py, 2) = color.z + background.z * T;
                out.depth_raw.at(px, py, 0) = draw;
                out.alpha.at(px, py, 0) = 1.0 - T;
                out.final_T[pix] = T;
                out.contrib_count[pix] = applied_end;
                out.foreground[pix] = (1.0 - T) > 0.5 ? 1 : 0;
            }
        }
    });

    // depth normalization (serial scan, deterministic)
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -std::numeric_limits<double>::infinity();
    std::int64_t amin = -1, amax = -1;
    for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
        if (!out.foreground[pix]) continue;
        double d = out.depth_raw.data[pix];
        if (d < dmin) {
            dmin = d;
            amin = std::int64_t(pix);
        }
        if (d > dmax) {
            dmax = d;
            amax = std::int64_t(pix);
        }
    }
    out.has_foreground = amin >= 0;
    out.depth_min = dmin;
    out.depth_max = dmax;
    out.depth_argmin = amin;
    out.depth_argmax = amax;
    for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
        if (!out.foreground[pix]) continue;  // stays at far value 1.0
        double d = out.depth_raw.data[pix];
        double n;
        if (depth_norm == DepthNorm::NearFar) {
            n = std::clamp((d - cam.near) / (cam.far - cam.near), 0.0, 1.0);
        } else if (dmax > dmin) {
            n = (d - dmin) / (dmax - dmin);
        } else {
            n = 0.5;
        }
        out.depth.data[pix] = n;
    }
    return out;
}

namespace detail {

// Per-Gaussian gradients in screen space, before the geometric chain.
struct ScreenGrad {
    double mu_x = 0, mu_y = 0;
    double conic_xx = 0, conic_xy = 0, conic_yy = 0;
    double logit = 0;
    double fdc0 = 0, fdc1 = 0, fdc2 = 0;
    double depth = 0;

    void add(const ScreenGrad& o) {
        mu_x += o.mu_x;
        mu_y += o.mu_y;
        conic_xx += o.conic_xx;
        conic_xy += o.conic_xy;
        conic_yy += o.conic_yy;
        logit += o.logit;
        fdc0 += o.fdc0;
        fdc1 += o.fdc1;
        fdc2 += o.fdc2;
        depth += o.depth;
    }
};

}  // namespace detail

/// Exact gradients of the forward render with respect to all cloud parameters.
/// dL_drgb: H x W x 3, dL_ddepth: H x W (w.r.t. the *normalized* depth),
/// dL_dalpha: H x W. Deterministic across thread counts: per-tile partials
/// are merged in tile-index order.
inline CloudGradients render_backward(const GaussianCloud& cloud, const Camera& cam,
                                      const RenderOutput& out, const Image& dL_drgb,
                                      const Image& dL_ddepth, const Image& dL_dalpha) {
    const int w = cam.width, h = cam.height;
    if (dL_drgb.width != w || dL_drgb.height != h || dL_drgb.channels != 3 ||
        dL_ddepth.width != w || dL_ddepth.height != h || dL_ddepth.channels != 1 ||
        dL_dalpha.width != w || dL_dalpha.height != h || dL_dalpha.channels != 1)
        throw ParamError("adjoint image shape mismatch");

    const std::size_t n = cloud.size();
    CloudGradients grads(n);

    // 1) normalized depth -> raw depth adjoint
    Image dL_draw(w, h, 1);
    if (out.depth_norm == DepthNorm::NearFar) {
        double inv = 1.0 / (cam.far - cam.near);
        for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
            if (!out.foreground[pix]) continue;
            double nval = (out.depth_raw.data[pix] - cam.near) * inv;
            if (nval > 0.0 && nval < 1.0) dL_draw.data[pix] = dL_ddepth.data[pix] * inv;
        }
    } else if (out.has_foreground && out.depth_max > out.depth_min) {
        double inv = 1.0 / (out.depth_max - out.depth_min);
        double to_min = 0, to_max = 0;
        for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
            if (!out.foreground[pix]) continue;
            double g = dL_ddepth.data[pix];
            double nval = (out.depth_raw.data[pix] - out.depth_min) * inv;
            dL_draw.data[pix] = g * inv;
            to_min += g * (nval - 1.0) * inv;
            to_max += g * (-nval) * inv;
        }
        dL_draw.data[std::size_t(out.depth_argmin)] += to_min;
        dL_draw.data[std::size_t(out.depth_argmax)] += to_max;
    }
    // degenerate max==min: normalized depth is constant, no gradient

    // 2) per-tile blend backward in screen space
    std::vector<std::vector<detail::ScreenGrad>> tile_partials(out.bins.size());
    parallel_for(out.bins.size(), [&](std::size_t b) {
        const auto& order = out.bins[b].order;
        if (order.empty()) return;
        auto& part = tile_partials[b];
        part.assign(order.size(), {});
        int tx = int(b) % out.tiles_x, ty = int(b) / out.tiles_x;
        int px0 = tx * kTileSize, py0 = ty * kTileSize;
        int px1 = std::min(px0 + kTileSize, w), py1 = std::min(py0 + kTileSize, h);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                std::size_t pix = std::size_t(py) * std::size_t(w) + std::size_t(px);
                int end = out.contrib_count[pix];
                if (end == 0) continue;
                Vec2 p{double(px), double(py)};
                Vec3 gl_rgb{dL_drgb.at(px, py, 0), dL_drgb.at(px, py, 1), dL_drgb.at(px, py, 2)};
                double gl_draw = dL_draw.at(px, py, 0);
                double gl_alpha = dL_dalpha.at(px, py, 0);
                double T_final = out.final_T[pix];
                // constant piece: d(bg*T_final)/dsigma and d(alpha)/dsigma share T_final
                double bg_dot = gl_rgb.dot(out.background);
                double T = T_final;
                Vec3 accum_c{};
                double accum_d = 0;
                for (int k = end - 1; k >= 0; --k) {
                    const ProjectedGaussian& g = out.proj[order[std::size_t(k)]];
                    Vec2 d = p - g.mu2d;
                    double power = 0.5 * g.conic.quad(d);
                    if (power > kSupportCut) continue;
                    double G = std::exp(-power);
                    double sigma = g.opacity * G;
                    if (sigma < kSigmaSkip) continue;
                    bool clamped = sigma > kSigmaMax;
                    if (clamped) sigma = kSigmaMax;
                    double one_minus = 1.0 - sigma;
                    double T_i = T / one_minus;  // transmittance before this splat
                    // dL/dsigma
                    double dL_dsigma = gl_rgb.dot(g.color) * T_i + gl_draw * g.depth * T_i;
                    dL_dsigma -= (gl_rgb.dot(accum_c) + gl_draw * accum_d) / one_minus;
                    dL_dsigma += (gl_alpha - bg_dot) * T_final / one_minus;
                    detail::ScreenGrad& sg = part[std::size_t(k)];
                    double sigT = sigma * T_i;
                    sg.fdc0 += gl_rgb.x * sigT;
                    sg.fdc1 += gl_rgb.y * sigT;
                    sg.fdc2 += gl_rgb.z * sigT;
                    sg.depth += gl_draw * sigT;
                    // sigma = opacity * G; the cap zeroes this branch when active
                    if (!clamped) {
                        double dL_dG = dL_dsigma * g.opacity;
                        sg.logit += dL_dsigma * G;  // dL/d(activated opacity); chained later
                        // dG/dmu2d = G * conic * (p - mu2d)
                        double cx_ = g.conic.xx * d.x + g.conic.xy * d.y;
                        double cy_ = g.conic.xy * d.x + g.conic.yy * d.y;
                        sg.mu_x += dL_dG * G * cx_;
                        sg.mu_y += dL_dG * G * cy_;
                        // dG/dconic (symmetric storage: power = .5*cxx*dx^2 + cxy*dx*dy + .5*cyy*dy^2)
                        sg.conic_xx += dL_dG * (-G) * 0.5 * d.x * d.x;
                        sg.conic_xy += dL_dG * (-G) * d.x * d.y;
                        sg.conic_yy += dL_dG * (-G) * 0.5 * d.y * d.y;
                    }
                    // move to state before this splat
                    accum_c += g.color * sigT;
                    accum_d += g.depth * sigT;
                    T = T_i;
                }
            }
        }
    });

    // 3) merge per-tile partials in fixed tile order
    std::vector<detail::ScreenGrad> screen(n);
    for (std::size_t b = 0; b < out.bins.size(); ++b) {
        const auto& order = out.bins[b].order;
        const auto& part = tile_partials[b];
        if (part.empty()) continue;
        for (std::size_t k = 0; k < order.size(); ++k) screen[order[k]].add(part[k]);
    }

    // 4) geometric chain per Gaussian (serial, deterministic)
    const Mat3 wrot = cam.view_rotation();
    const Vec3 cpos = cam.position();
    const double f = cam.focal();
    for (std::size_t i = 0; i < n; ++i) {
        const ProjectedGaussian& g = out.proj[i];
        if (g.radius <= 0 && g.depth <= cam.near) continue;  // culled behind near plane
        const detail::ScreenGrad& sg = screen[i];
        grads.pos2d_grad_norm[i] += std::sqrt(sg.mu_x * sg.mu_x + sg.mu_y * sg.mu_y);
        if (g.radius > 0) grads.hits[i] += 1;

        // activated color -> f_dc through the [0,1] clamp
        for (int c = 0; c < 3; ++c) {
            double raw = 0.5 + kSh0 * cloud.f_dc[i * 3 + std::size_t(c)];
            double gc = c == 0 ? sg.fdc0 : (c == 1 ? sg.fdc1 : sg.fdc2);
            if (raw > 0.0 && raw < 1.0) grads.f_dc[i * 3 + std::size_t(c)] += gc * kSh0;
        }
        // activated opacity -> logit
        double a = g.opacity;
        grads.opacity_logits[i] += sg.logit * a * (1.0 - a);

        // conic -> cov2d: dL/dS = -C * F * C with F the full-matrix form
        double fxx = sg.conic_xx, fxy = 0.5 * sg.conic_xy, fyy = sg.conic_yy;
        const Sym2& C = g.conic;
        // M = C * F (full 2x2)
        double m00 = C.xx * fxx + C.xy * fxy, m01 = C.xx * fxy + C.xy * fyy;
        double m10 = C.xy * fxx + C.yy * fxy, m11 = C.xy * fxy + C.yy * fyy;
        // H_full = -(M * C)
        double h00 = -(m00 * C.xx + m01 * C.xy);
        double h01 = -(m00 * C.xy + m01 * C.yy);
        double h11 = -(m10 * C.xy + m11 * C.yy);

        // cov2d = T Sigma T^T (+ floor); T rows t0, t1
        Vec3 t = wrot * (cloud.position(i) - cpos);
        double iz = 1.0 / t.z, iz2 = iz * iz;
        double j00 = f * iz, j02 = -f * t.x * iz2;
        double j11 = -f * iz, j12 = f * t.y * iz2;
        Vec3 t0 = wrot.row(0) * j00 + wrot.row(2) * j02;
        Vec3 t1 = wrot.row(1) * j11 + wrot.row(2) * j12;
        Mat3 sigma = covariance_from(cloud.scale(i), cloud.rotation(i));
        Vec3 s0 = sigma * t0, s1 = sigma * t1;

        // dL/dSigma = T^T H T
        Mat3 dSigma{};
        auto outer_acc = [&](const Vec3& a_, const Vec3& b_, double k_) {
            dSigma(0, 0) += k_ * a_.x * b_.x;
            dSigma(0, 1) += k_ * 0.5 * (a_.x * b_.y + a_.y * b_.x);
            dSigma(0, 2) += k_ * 0.5 * (a_.x * b_.z + a_.z * b_.x);
            dSigma(1, 1) += k_ * a_.y * b_.y;
            dSigma(1, 2) += k_ * 0.5 * (a_.y * b_.z + a_.z * b_.y);
            dSigma(2, 2) += k_ * a_.z * b_.z;
        };
        outer_acc(t0, t0, h00);
        outer_acc(t0, t1, 2.0 * h01);
        outer_acc(t1, t1, h11);
        dSigma(1, 0) = dSigma(0, 1);
        dSigma(2, 0) = dSigma(0, 2);
        dSigma(2, 1) = dSigma(1, 2);

        // dL/dT = 2 H T Sigma  (rows)
        Vec3 dT0 = (s0 * h00 + s1 * h01) * 2.0;
        Vec3 dT1 = (s0 * h01 + s1 * h11) * 2.0;

        // T rows depend on (t.x, t.y, t.z) via the Jacobian entries
        double dj00 = dT0.dot(wrot.row(0));
        double dj02 = dT0.dot(wrot.row(2));
        double dj11 = dT1.dot(wrot.row(1));
        double dj12 = dT1.dot(wrot.row(2));
        Vec3 dt{};  // dL/d(view point)
        dt.x += dj02 * (-f * iz2);
        dt.y += dj12 * (f * iz2);
        dt.z += dj00 * (-f * iz2) + dj02 * (2.0 * f * t.x * iz2 * iz) + dj11 * (f * iz2) +
                dj12 * (-2.0 * f * t.y * iz2 * iz);

        // screen mean: mu2d = (cx + f tx/tz, cy - f ty/tz)
        dt.x += sg.mu_x * (f * iz);
        dt.y += sg.mu_y * (-f * iz);
        dt.z += sg.mu_x * (-f * t.x * iz2) + sg.mu_y * (f * t.y * iz2);
        // blended view depth
        dt.z += sg.depth;

        Vec3 dmu = wrot.transposed() * dt;
        grads.positions[i * 3] += dmu.x;
        grads.positions[i * 3 + 1] += dmu.y;
        grads.positions[i * 3 + 2] += dmu.z;

        // Sigma = R diag(s^2) R^T
        Quat q = cloud.rotation(i);  // normalized
        Mat3 R = q.to_matrix();
        Vec3 s = cloud.scale(i);
        // dL/ds_k(log) = 2 s_k^2 (R^T dSigma R)_kk
        Mat3 rtdr = R.transposed() * dSigma * R;
        grads.log_scales[i * 3] += 2.0 * s.x * s.x * rtdr(0, 0);
        grads.log_scales[i * 3 + 1] += 2.0 * s.y * s.y * rtdr(1, 1);
        grads.log_scales[i * 3 + 2] += 2.0 * s.z * s.z * rtdr(2, 2);
        // dL/dR = 2 dSigma R D
        Mat3 D{};
        D(0, 0) = s.x * s.x;
        D(1, 1) = s.y * s.y;
        D(2, 2) = s.z * s.z;
        Mat3 dR = dSigma * R * D * 2.0;
        // dR/dq for the unit quaternion
        double qw = q.w, qx = q.x, qy = q.y, qz = q.z;
        auto dot9 = [&](const Mat3& A, const Mat3& B) {
            double r = 0;
            for (int k = 0; k < 9; ++k) r += A.m[std::size_t(k)] * B.m[std::size_t(k)];
            return r;
        };
        Mat3 dRw, dRx, dRy, dRz;
        dRw.m = {0, -2 * qz, 2 * qy, 2 * qz, 0, -2 * qx, -2 * qy, 2 * qx, 0};
        dRx.m = {0, 2 * qy, 2 * qz, 2 * qy, -4 * qx, -2 * qw, 2 * qz, 2 * qw, -4 * qx};
        dRy.m = {-4 * qy, 2 * qx, 2 * qw, 2 * qx, 0, 2 * qz, -2 * qw, 2 * qz, -4 * qy};
        dRz.m = {-4 * qz, -2 * qw, 2 * qx, 2 * qw, -4 * qz, 2 * qy, 2 * qx, 2 * qy, 0};
        double gqw = dot9(dR, dRw), gqx = dot9(dR, dRx), gqy = dot9(dR, dRy), gqz = dot9(dR, dRz);
        // through normalization of the raw stored quaternion
        double rw = cloud.rotations[i * 4], rx = cloud.rotations[i * 4 + 1],
               ry = cloud.rotations[i * 4 + 2], rz = cloud.rotations[i * 4 + 3];
        double nrm = std::sqrt(rw * rw + rx * rx + ry * ry + rz * rz);
        double dotg = gqw * qw + gqx * qx + gqy * qy + gqz * qz;
        grads.rotations[i * 4] += (gqw - dotg * qw) / nrm;
        grads.rotations[i * 4 + 1] += (gqx - dotg * qx) / nrm;
        grads.rotations[i * 4 + 2] += (gqy - dotg * qy) / nrm;
        grads.rotations[i * 4 + 3] += (gqz - dotg * qz) / nrm;
    }
    return grads;
}

}  // namespace splatgen
