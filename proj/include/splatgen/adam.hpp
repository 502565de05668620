#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "splatgen/cloud.hpp"

namespace splatgen {

struct LearningRates {
    double position = 5e-5;
    double scale = 1e-3;
    double rotation = 1e-2;
    double color = 1.25e-2;
    double opacity = 1e-2;
};

constexpr double kAdamEps = 1e-15;

/// Bias-corrected adaptive-moment state for the five parameter groups.
struct AdamState {
    double beta1 = 0.9, beta2 = 0.99;
    std::uint64_t step = 0;
    // first/second moments per group, same shapes as the cloud arrays
    std::vector<double> m_pos, v_pos;
    std::vector<double> m_scale, v_scale;
    std::vector<double> m_rot, v_rot;
    std::vector<double> m_color, v_color;
    std::vector<double> m_opacity, v_opacity;

    explicit AdamState(std::size_t n = 0) { reset(n); }

    void reset(std::size_t n) {
        m_pos.assign(n * 3, 0.0);
        v_pos.assign(n * 3, 0.0);
        m_scale.assign(n * 3, 0.0);
        v_scale.assign(n * 3, 0.0);
        m_rot.assign(n * 4, 0.0);
        v_rot.assign(n * 4, 0.0);
        m_color.assign(n * 3, 0.0);
        v_color.assign(n * 3, 0.0);
        m_opacity.assign(n, 0.0);
        v_opacity.assign(n, 0.0);
    }

    std::size_t rows() const { return m_opacity.size(); }

    /// Applies a structural edit: source[i] >= 0 carries old row i's moments,
    /// -1 starts the new row at zero.
    void remap(const std::vector<std::int64_t>& source) {
        auto remap_one = [&](std::vector<double>& arr, std::size_t width) {
            std::vector<double> next(source.size() * width, 0.0);
            for (std::size_t i = 0; i < source.size(); ++i) {
                if (source[i] < 0) continue;
                for (std::size_t c = 0; c < width; ++c)
                    next[i * width + c] = arr[std::size_t(source[i]) * width + c];
            }
            arr = std::move(next);
        };
        remap_one(m_pos, 3);
        remap_one(v_pos, 3);
        remap_one(m_scale, 3);
        remap_one(v_scale, 3);
        remap_one(m_rot, 4);
        remap_one(v_rot, 4);
        remap_one(m_color, 3);
        remap_one(v_color, 3);
        remap_one(m_opacity, 1);
        remap_one(v_opacity, 1);
    }
};

inline void adam_step(GaussianCloud& cloud, const CloudGradients& grads, AdamState& state,
                      const LearningRates& lrs) {
    if (state.rows() != cloud.size() || grads.size() != cloud.size())
        throw ParamError("adam state rows do not match cloud size");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    auto update = [&](std::vector<double>& params, const std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v, double lr, const char* group) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw CollapseError(std::string("non-finite gradient in parameter group ") + group);
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1, vhat = v[i] / bc2;
            params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    };
    update(cloud.positions, grads.positions, state.m_pos, state.v_pos, lrs.position, "position");
    update(cloud.log_scales, grads.log_scales, state.m_scale, state.v_scale, lrs.scale, "scale");
    update(cloud.rotations, grads.rotations, state.m_rot, state.v_rot, lrs.rotation, "rotation");
    update(cloud.f_dc, grads.f_dc, state.m_color, state.v_color, lrs.color, "color");
    update(cloud.opacity_logits, grads.opacity_logits, state.m_opacity, state.v_opacity,
           lrs.opacity, "opacity");
}

}  // namespace splatgen
