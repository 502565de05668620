#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "splatgen/adam.hpp"
#include "splatgen/body.hpp"
#include "splatgen/density.hpp"
#include "splatgen/guidance.hpp"
#include "splatgen/ply.hpp"
#include "splatgen/skeleton.hpp"

namespace splatgen {

struct Range {
    double lo = 0, hi = 1;
    void validate(const char* name) const {
        if (!(hi >= lo)) throw ParamError(std::string("empty range for ") + name);
    }
    double sample(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> d(lo, hi);
        return lo == hi ? lo : d(rng);
    }
};

struct TrainConfig {
    std::size_t iterations = 3600;
    std::size_t batch = 8;
    int resolution = 1024;
    std::size_t gaussian_count = 100000;
    LearningRates lrs;
    double beta1 = 0.9, beta2 = 0.99;
    Range distance{1.5, 2.0};
    Range fovy{40.0, 70.0};
    Range elevation{-30.0, 30.0};
    Range azimuth{-180.0, 180.0};
    double head_zoom_prob = 0.25;
    std::size_t head_zoom_start = 1200;
    Range head_zoom_distance{0.4, 0.6};
    std::uint64_t seed = 0;
    std::string prompt;
    std::string negative_prompt;
    Vec3 background{};
    DepthNorm depth_norm = DepthNorm::MinMax;
    bool use_pose_map = true;
    std::size_t checkpoint_interval = 300;
    std::string out_dir = "out";
    std::size_t schedule_steps = 1000;
    double beta_start = 8.5e-4, beta_end = 1.2e-2;
    WeightMode weight_mode = WeightMode::One;
    GuidanceConfig guidance;
    DensifyConfig densify;

    void validate() const {
        if (iterations == 0 || batch == 0) throw ParamError("iterations and batch must be positive");
        if (resolution < 1) throw ParamError("resolution must be >= 1");
        if (gaussian_count < 1) throw ParamError("gaussian count must be >= 1");
        if (head_zoom_prob < 0 || head_zoom_prob > 1) throw ParamError("head zoom probability must be in [0,1]");
        distance.validate("distance");
        fovy.validate("fovy");
        elevation.validate("elevation");
        azimuth.validate("azimuth");
        head_zoom_distance.validate("head zoom distance");
        guidance.validate();
        densify.validate();
    }
};

struct CameraTargets {
    Vec3 body_center{};
    Vec3 head{};
};

inline Camera sample_camera(const TrainConfig& config, std::size_t iteration,
                            const CameraTargets& targets, std::mt19937_64& rng) {
    double dist = config.distance.sample(rng);
    double el = config.elevation.sample(rng);
    double az = config.azimuth.sample(rng);
    double fv = config.fovy.sample(rng);
    Vec3 target = targets.body_center;
    if (iteration >= config.head_zoom_start && config.head_zoom_prob > 0) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < config.head_zoom_prob) {
            dist = config.head_zoom_distance.sample(rng);
            target = targets.head;
        }
    }
    return camera_from_spherical(dist, el, az, fv, target, config.resolution, config.resolution);
}

// ---------------------------------------------------------------------------
// checkpoint container: PLY next to a binary optimizer-state sidecar

namespace detail {

inline void put_u64(std::ofstream& f, std::uint64_t v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint64_t get_u64(std::ifstream& f) {
    std::uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline void put_vec(std::ofstream& f, const std::vector<double>& v) {
    put_u64(f, v.size());
    f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
}
inline std::vector<double> get_vec(std::ifstream& f) {
    std::vector<double> v(get_u64(f));
    f.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    return v;
}

}  // namespace detail

struct Checkpoint {
    std::size_t iteration = 0;
    GaussianCloud cloud;
    AdamState adam;
    std::string rng_state;
    std::vector<double> stat_grad_norm;
    std::vector<int> stat_hits;
    double scene_extent = 0;
};

inline void save_checkpoint(const Checkpoint& ck, const std::string& stem) {
    write_ply(ck.cloud, stem + ".ply");
    std::ofstream f(stem + ".state", std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + stem + ".state");
    f.write("SGCK", 4);
    detail::put_u64(f, 1);  // version
    detail::put_u64(f, ck.iteration);
    detail::put_u64(f, ck.adam.step);
    f.write(reinterpret_cast<const char*>(&ck.adam.beta1), sizeof(double));
    f.write(reinterpret_cast<const char*>(&ck.adam.beta2), sizeof(double));
    for (const auto* v : {&ck.adam.m_pos, &ck.adam.v_pos, &ck.adam.m_scale, &ck.adam.v_scale,
                          &ck.adam.m_rot, &ck.adam.v_rot, &ck.adam.m_color, &ck.adam.v_color,
                          &ck.adam.m_opacity, &ck.adam.v_opacity, &ck.stat_grad_norm})
        detail::put_vec(f, *v);
    detail::put_u64(f, ck.stat_hits.size());
    for (int h : ck.stat_hits) detail::put_u64(f, std::uint64_t(h));
    f.write(reinterpret_cast<const char*>(&ck.scene_extent), sizeof(double));
    detail::put_u64(f, ck.rng_state.size());
    f.write(ck.rng_state.data(), std::streamsize(ck.rng_state.size()));
    if (!f) throw IoError("write failed: " + stem + ".state");
}

inline Checkpoint load_checkpoint(const std::string& stem) {
    Checkpoint ck;
    ck.cloud = read_ply(stem + ".ply");
    std::ifstream f(stem + ".state", std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + stem + ".state");
    char magic[4];
    f.read(magic, 4);
    if (std::string(magic, 4) != "SGCK") throw ParseError("bad checkpoint magic");
    if (detail::get_u64(f) != 1) throw ParseError("unsupported checkpoint version");
    ck.iteration = detail::get_u64(f);
    ck.adam.step = detail::get_u64(f);
    f.read(reinterpret_cast<char*>(&ck.adam.beta1), sizeof(double));
    f.read(reinterpret_cast<char*>(&ck.adam.beta2), sizeof(double));
    for (auto* v : {&ck.adam.m_pos, &ck.adam.v_pos, &ck.adam.m_scale, &ck.adam.v_scale,
                    &ck.adam.m_rot, &ck.adam.v_rot, &ck.adam.m_color, &ck.adam.v_color,
                    &ck.adam.m_opacity, &ck.adam.v_opacity, &ck.stat_grad_norm})
        *v = detail::get_vec(f);
    ck.stat_hits.resize(detail::get_u64(f));
    for (auto& h : ck.stat_hits) h = int(detail::get_u64(f));
    f.read(reinterpret_cast<char*>(&ck.scene_extent), sizeof(double));
    ck.rng_state.resize(detail::get_u64(f));
    f.read(ck.rng_state.data(), std::streamsize(ck.rng_state.size()));
    if (!f) throw ParseError("truncated checkpoint state: " + stem + ".state");
    return ck;
}

struct TrainResult {
    GaussianCloud cloud;
    std::size_t iterations_run = 0;
    std::string metrics_path;
};

/// End-to-end loop: sample a camera batch, render + dual-branch SDS, averaged
/// Adam update, density-control events, periodic self-sufficient checkpoints.
inline TrainResult train(const TrainConfig& config, const BodyModel& body, ScoreProvider& provider,
                         const std::string& resume_stem = "") {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);

    PoseParams pose = rest_pose(body);
    BodyFrame frame = body_frame(body, pose);
    SkinResult posed = skin(body, pose);
    CameraTargets targets;
    {
        // normalized-space body center = bbox center of the normalized mesh
        Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
        for (const auto& p : posed.vertices) {
            Vec3 q = frame.apply(p);
            lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
            hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
        }
        targets.body_center = (lo + hi) * 0.5;
        int head = body.head_joint >= 0 ? body.head_joint : 0;
        targets.head = frame.apply(posed.joints[std::size_t(head)]);
    }

    NoiseSchedule schedule = NoiseSchedule::scaled_linear(config.schedule_steps, config.beta_start,
                                                          config.beta_end, config.weight_mode);
    std::mt19937_64 rng(config.seed);
    GaussianCloud cloud;
    AdamState adam;
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    std::vector<double> stat_grad_norm;
    std::vector<int> stat_hits;
    double scene_extent = 0;
    std::size_t start_iter = 1;

    if (!resume_stem.empty()) {
        Checkpoint ck = load_checkpoint(resume_stem);
        cloud = std::move(ck.cloud);
        adam = std::move(ck.adam);
        stat_grad_norm = std::move(ck.stat_grad_norm);
        stat_hits = std::move(ck.stat_hits);
        scene_extent = ck.scene_extent;
        start_iter = ck.iteration + 1;
        std::istringstream(ck.rng_state) >> rng;
    } else {
        cloud = init_cloud(body, pose, config.gaussian_count, rng);
        adam.reset(cloud.size());
        stat_grad_norm.assign(cloud.size(), 0.0);
        stat_hits.assign(cloud.size(), 0);
        scene_extent = scene_extent_of(cloud);
        if (!fs::exists(config.out_dir + "/config.json")) {
            // the CLI writes the real config copy; stand-alone callers get a stub
            std::ofstream(config.out_dir + "/config.json") << "{}\n";
        }
    }

    std::ofstream metrics(config.out_dir + "/metrics.jsonl",
                          resume_stem.empty() ? std::ios::trunc : std::ios::app);
    if (!metrics) throw IoError("cannot open metrics log in " + config.out_dir);

    auto checkpoint_now = [&](std::size_t iter) {
        Checkpoint ck;
        ck.iteration = iter;
        ck.cloud = cloud;
        ck.adam = adam;
        ck.stat_grad_norm = stat_grad_norm;
        ck.stat_hits = stat_hits;
        ck.scene_extent = scene_extent;
        std::ostringstream ss;
        ss << rng;
        ck.rng_state = ss.str();
        save_checkpoint(ck, config.out_dir + "/ckpt_" + std::to_string(iter));
    };

    TrainResult result;
    result.metrics_path = config.out_dir + "/metrics.jsonl";
    for (std::size_t iter = start_iter; iter <= config.iterations; ++iter) {
        CloudGradients batch_grads(cloud.size());
        double adj_rgb = 0, adj_depth = 0;
        std::size_t last_t = 0;
        try {
            for (std::size_t b = 0; b < config.batch; ++b) {
                Camera cam = sample_camera(config, iter, targets, rng);
                Image pose_map;
                const Image* pose_ptr = nullptr;
                if (config.use_pose_map) {
                    pose_map = render_skeleton(body, pose, cam);
                    pose_ptr = &pose_map;
                }
                int retries = 0;
                for (;;) {
                    try {
                        DualBranchResult step = dual_branch_step(
                            cloud, cam, provider, schedule, config.guidance, rng, config.prompt,
                            config.negative_prompt, pose_ptr, config.background,
                            config.depth_norm);
                        batch_grads.add(step.grads);
                        adj_rgb += step.adjoint_rgb_norm;
                        adj_depth += step.adjoint_depth_norm;
                        last_t = step.t;
                        break;
                    } catch (const ProviderError& e) {
                        if (!e.retriable || ++retries > 3) throw;
                    }
                }
            }
        } catch (const ProviderError& e) {
            if (e.retriable) {
                metrics << "{\"iter\":" << iter << ",\"skipped\":\"" << e.what() << "\"}\n";
                continue;  // skip the step after bounded retries
            }
            checkpoint_now(iter - 1);
            throw;
        } catch (const CollapseError&) {
            checkpoint_now(iter - 1);
            throw;
        }
        batch_grads.scale(1.0 / double(config.batch));
        // densification statistics accumulate un-averaged view counts
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            stat_grad_norm[i] += batch_grads.pos2d_grad_norm[i];
            stat_hits[i] += batch_grads.hits[i];
        }
        adam_step(cloud, batch_grads, adam, config.lrs);

        double gnorm = 0;
        for (double g : batch_grads.positions) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        metrics << "{\"iter\":" << iter << ",\"n\":" << cloud.size() << ",\"t\":" << last_t
                << ",\"pos_grad_norm\":" << gnorm << ",\"adj_rgb\":" << adj_rgb / double(config.batch)
                << ",\"adj_depth\":" << adj_depth / double(config.batch) << "}\n";

        DensityAction action = schedule_gate(iter, config.densify);
        if (action != DensityAction::None) {
            DensityResult edit;
            if (action == DensityAction::DensifyPrune) {
                CloudGradients stats(cloud.size());
                stats.pos2d_grad_norm = stat_grad_norm;
                stats.hits = stat_hits;
                stats.positions = batch_grads.positions;  // clone offset direction
                edit = densify_and_prune(cloud, stats, config.densify, scene_extent, rng);
            } else {
                edit = prune_by_size_edit(cloud, config.densify.size_prune_threshold);
            }
            cloud = std::move(edit.cloud);
            adam.remap(edit.source);
            stat_grad_norm.assign(cloud.size(), 0.0);
            stat_hits.assign(cloud.size(), 0);
        }

        if (config.checkpoint_interval > 0 && iter % config.checkpoint_interval == 0)
            checkpoint_now(iter);
    }
    if (config.checkpoint_interval == 0 || config.iterations % config.checkpoint_interval != 0)
        checkpoint_now(config.iterations);
    result.cloud = std::move(cloud);
    result.iterations_run = config.iterations - start_iter + 1;
    return result;
}

}  // namespace splatgen
