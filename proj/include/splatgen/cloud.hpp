#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "splatgen/geometry.hpp"

namespace splatgen {

/// Learnable scene: N Gaussians as struct-of-arrays.
/// Scales live in log-space, opacities as logits; both are activated on read.
struct GaussianCloud {
    std::vector<double> positions;       // N x 3
    std::vector<double> log_scales;      // N x 3
    std::vector<double> rotations;       // N x 4, (w, x, y, z)
    std::vector<double> f_dc;            // N x 3, degree-0 SH coefficients
    std::vector<double> opacity_logits;  // N

    std::size_t size() const { return opacity_logits.size(); }

    void resize(std::size_t n) {
        positions.resize(n * 3);
        log_scales.resize(n * 3);
        rotations.resize(n * 4);
        f_dc.resize(n * 3);
        opacity_logits.resize(n);
    }

    Vec3 position(std::size_t i) const {
        return {positions[i * 3], positions[i * 3 + 1], positions[i * 3 + 2]};
    }
    Vec3 scale(std::size_t i) const {
        return {std::exp(log_scales[i * 3]), std::exp(log_scales[i * 3 + 1]),
                std::exp(log_scales[i * 3 + 2])};
    }
    Quat rotation(std::size_t i) const {
        return Quat{rotations[i * 4], rotations[i * 4 + 1], rotations[i * 4 + 2],
                    rotations[i * 4 + 3]}
            .normalized();
    }
    double opacity(std::size_t i) const { return sigmoid(opacity_logits[i]); }
    /// Rendered color: 0.5 + C0 * f_dc, clamped to [0,1].
    Vec3 color(std::size_t i) const {
        auto ch = [&](int c) { return std::clamp(0.5 + kSh0 * f_dc[i * 3 + std::size_t(c)], 0.0, 1.0); };
        return {ch(0), ch(1), ch(2)};
    }

    void set_position(std::size_t i, const Vec3& p) {
        positions[i * 3] = p.x;
        positions[i * 3 + 1] = p.y;
        positions[i * 3 + 2] = p.z;
    }

    void append(const GaussianCloud& other) {
        positions.insert(positions.end(), other.positions.begin(), other.positions.end());
        log_scales.insert(log_scales.end(), other.log_scales.begin(), other.log_scales.end());
        rotations.insert(rotations.end(), other.rotations.begin(), other.rotations.end());
        f_dc.insert(f_dc.end(), other.f_dc.begin(), other.f_dc.end());
        opacity_logits.insert(opacity_logits.end(), other.opacity_logits.begin(),
                              other.opacity_logits.end());
    }

    GaussianCloud select(const std::vector<std::size_t>& idx) const {
        GaussianCloud out;
        out.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
            std::size_t i = idx[k];
            for (int c = 0; c < 3; ++c) {
                out.positions[k * 3 + std::size_t(c)] = positions[i * 3 + std::size_t(c)];
                out.log_scales[k * 3 + std::size_t(c)] = log_scales[i * 3 + std::size_t(c)];
                out.f_dc[k * 3 + std::size_t(c)] = f_dc[i * 3 + std::size_t(c)];
            }
            for (int c = 0; c < 4; ++c)
                out.rotations[k * 4 + std::size_t(c)] = rotations[i * 4 + std::size_t(c)];
            out.opacity_logits[k] = opacity_logits[i];
        }
        return out;
    }
};

/// Gradient accumulators matching GaussianCloud shapes, plus densification stats.
struct CloudGradients {
    std::vector<double> positions;
    std::vector<double> log_scales;
    std::vector<double> rotations;
    std::vector<double> f_dc;
    std::vector<double> opacity_logits;
    std::vector<double> pos2d_grad_norm;  // accumulated view-space gradient norms
    std::vector<int> hits;                // views in which the Gaussian was visible

    explicit CloudGradients(std::size_t n = 0) { reset(n); }

    void reset(std::size_t n) {
        positions.assign(n * 3, 0.0);
        log_scales.assign(n * 3, 0.0);
        rotations.assign(n * 4, 0.0);
        f_dc.assign(n * 3, 0.0);
        opacity_logits.assign(n, 0.0);
        pos2d_grad_norm.assign(n, 0.0);
        hits.assign(n, 0);
    }

    std::size_t size() const { return opacity_logits.size(); }

    void add(const CloudGradients& o) {
        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] += o.positions[i];
        for (std::size_t i = 0; i < log_scales.size(); ++i) log_scales[i] += o.log_scales[i];
        for (std::size_t i = 0; i < rotations.size(); ++i) rotations[i] += o.rotations[i];
        for (std::size_t i = 0; i < f_dc.size(); ++i) f_dc[i] += o.f_dc[i];
        for (std::size_t i = 0; i < opacity_logits.size(); ++i) opacity_logits[i] += o.opacity_logits[i];
        for (std::size_t i = 0; i < pos2d_grad_norm.size(); ++i) pos2d_grad_norm[i] += o.pos2d_grad_norm[i];
        for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
    }

    void scale(double k) {
        for (auto* v : {&positions, &log_scales, &rotations, &f_dc, &opacity_logits})
            for (double& x : *v) x *= k;
    }
};

/// Unnormalized 2D Gaussian value, exp(-1/2 (p-mu)^T Sigma^-1 (p-mu)) in (0, 1].
inline double evaluate_gaussian(const Vec2& p, const Vec2& mu2d, const Sym2& sigma2d) {
    Sym2 conic = sigma2d.inverse();
    return std::exp(-0.5 * conic.quad(p - mu2d));
}

}  // namespace splatgen
