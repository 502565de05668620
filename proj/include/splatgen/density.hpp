#pragma once

#include <random>
#include <vector>

#include "splatgen/cloud.hpp"

namespace splatgen {

struct DensifyConfig {
    bool enabled = true;
    std::size_t start_iter = 300, end_iter = 2100, interval = 300;
    std::size_t prune_phase_start = 2400, prune_phase_end = 3300, prune_phase_interval = 300;
    double grad_threshold = 2e-4;
    double scale_split_threshold = 0.01;  // fraction of scene extent
    double split_factor = 1.6;
    double min_opacity = 0.005;
    double size_prune_threshold = 0.008;  // scene units

    void validate() const {
        if (start_iter > end_iter || prune_phase_start > prune_phase_end)
            throw ParamError("density schedule: start must not exceed end");
        if (interval == 0 || prune_phase_interval == 0) throw ParamError("density schedule: zero interval");
        if (!(grad_threshold > 0 && scale_split_threshold > 0 && split_factor > 0 &&
              min_opacity > 0 && size_prune_threshold > 0))
            throw ParamError("density thresholds must be positive");
    }
};

enum class DensityAction { None, DensifyPrune, PruneOnly };

inline DensityAction schedule_gate(std::size_t iteration, const DensifyConfig& config) {
    if (!config.enabled) return DensityAction::None;
    if (iteration >= config.start_iter && iteration <= config.end_iter &&
        (iteration - config.start_iter) % config.interval == 0)
        return DensityAction::DensifyPrune;
    if (iteration >= config.prune_phase_start && iteration <= config.prune_phase_end &&
        (iteration - config.prune_phase_start) % config.prune_phase_interval == 0)
        return DensityAction::PruneOnly;
    return DensityAction::None;
}

/// Structural edit result: `source[i]` is the old row carried into new row i,
/// or -1 for freshly created rows (whose optimizer moments start at zero).
struct DensityResult {
    GaussianCloud cloud;
    std::vector<std::int64_t> source;
};

/// Clone/split high-gradient Gaussians, then drop near-transparent ones.
inline DensityResult densify_and_prune(const GaussianCloud& cloud, const CloudGradients& grads,
                                       const DensifyConfig& config, double scene_extent,
                                       std::mt19937_64& rng) {
    config.validate();
    if (grads.size() != cloud.size()) throw ParamError("gradient accumulator size mismatch");
    const std::size_t n = cloud.size();
    DensityResult out;
    out.cloud = cloud;
    out.source.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.source[i] = std::int64_t(i);

    const double split_scale = config.scale_split_threshold * scene_extent;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::size_t> split_parents;
    for (std::size_t i = 0; i < n; ++i) {
        if (grads.hits[i] == 0) continue;
        double mean_grad = grads.pos2d_grad_norm[i] / double(grads.hits[i]);
        if (mean_grad <= config.grad_threshold) continue;
        Vec3 s = cloud.scale(i);
        double max_scale = std::max({s.x, s.y, s.z});
        if (max_scale <= split_scale) {
            // clone, nudged along the accumulated descent direction
            GaussianCloud one = cloud.select({i});
            Vec3 g{grads.positions[i * 3], grads.positions[i * 3 + 1], grads.positions[i * 3 + 2]};
            double gn = g.norm();
            if (gn > 0) one.set_position(0, one.position(0) - g * (0.1 * max_scale / gn));
            out.cloud.append(one);
            out.source.push_back(-1);
        } else {
            split_parents.push_back(i);
            Mat3 rot = cloud.rotation(i).to_matrix();
            for (int child = 0; child < 2; ++child) {
                GaussianCloud one = cloud.select({i});
                Vec3 local{normal(rng) * s.x, normal(rng) * s.y, normal(rng) * s.z};
                one.set_position(0, cloud.position(i) + rot * local);
                double shrink = std::log(config.split_factor);
                for (int c = 0; c < 3; ++c) one.log_scales[std::size_t(c)] -= shrink;
                out.cloud.append(one);
                out.source.push_back(-1);
            }
        }
    }
    // drop split parents and near-transparent Gaussians
    std::vector<std::uint8_t> is_split_parent(out.cloud.size(), 0);
    for (std::size_t i : split_parents) is_split_parent[i] = 1;
    std::vector<std::size_t> keep;
    std::vector<std::int64_t> src;
    for (std::size_t i = 0; i < out.cloud.size(); ++i) {
        if (is_split_parent[i]) continue;
        if (out.cloud.opacity(i) < config.min_opacity) continue;
        keep.push_back(i);
        src.push_back(out.source[i]);
    }
    if (keep.empty()) throw CollapseError("density control removed every Gaussian");
    out.cloud = out.cloud.select(keep);
    out.source = std::move(src);
    return out;
}

/// Remove every Gaussian whose max activated scale exceeds the threshold.
inline DensityResult prune_by_size_edit(const GaussianCloud& cloud, double threshold) {
    if (!(threshold > 0)) throw ParamError("size prune threshold must be positive");
    std::vector<std::size_t> keep;
    std::vector<std::int64_t> src;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vec3 s = cloud.scale(i);
        if (std::max({s.x, s.y, s.z}) > threshold) continue;
        keep.push_back(i);
        src.push_back(std::int64_t(i));
    }
    if (keep.empty()) throw CollapseError("size prune removed every Gaussian");
    DensityResult out;
    out.cloud = cloud.select(keep);
    out.source = std::move(src);
    return out;
}

inline GaussianCloud prune_by_size(const GaussianCloud& cloud, double threshold) {
    return prune_by_size_edit(cloud, threshold).cloud;
}

/// Diagonal of the cloud's bounding box; fixed at init by the training loop.
inline double scene_extent_of(const GaussianCloud& cloud) {
    if (cloud.size() == 0) throw ParamError("empty cloud");
    Vec3 lo = cloud.position(0), hi = lo;
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        Vec3 p = cloud.position(i);
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    return (hi - lo).norm();
}

}  // namespace splatgen
