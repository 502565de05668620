#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatgen/trainer.hpp"

namespace splatgen {

enum class ProviderKind { Analytic, Remote };

/// Full run description as loaded from a JSON config file. Parsing is strict:
/// every unknown key anywhere in the document is collected and reported.
struct RunConfig {
    TrainConfig train;
    ProviderKind provider = ProviderKind::Analytic;
    std::string endpoint;        // http://host:port, remote provider only
    std::string body_path;
    std::string reference_path;  // PLY rendered per view as the analytic target
};

namespace cfg {

using json = nlohmann::json;

struct Scope {
    const json& obj;
    std::string path;
    std::vector<std::string>& errors;
    std::set<std::string> seen;

    Scope(const json& o, std::string p, std::vector<std::string>& e)
        : obj(o), path(std::move(p)), errors(e) {
        if (!obj.is_object()) errors.push_back(path.empty() ? "<root>: expected object" : path + ": expected object");
    }
    ~Scope() {
        if (!obj.is_object()) return;
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!seen.count(it.key()))
                errors.push_back("unknown key: " + (path.empty() ? it.key() : path + "." + it.key()));
    }

    std::string full(const std::string& key) const { return path.empty() ? key : path + "." + key; }

    const json* take(const std::string& key) {
        if (!obj.is_object()) return nullptr;
        seen.insert(key);
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (const json* v = take(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                errors.push_back("wrong type for key: " + full(key));
            }
        }
    }

    void get_range(const std::string& key, Range& out) {
        if (const json* v = take(key)) {
            if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number()) {
                out.lo = (*v)[0].get<double>();
                out.hi = (*v)[1].get<double>();
            } else {
                errors.push_back("expected [lo, hi] for key: " + full(key));
            }
        }
    }

    void get_vec3(const std::string& key, Vec3& out) {
        if (const json* v = take(key)) {
            if (v->is_array() && v->size() == 3 && (*v)[0].is_number()) {
                out = Vec3{(*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>()};
            } else {
                errors.push_back("expected [r, g, b] for key: " + full(key));
            }
        }
    }

    template <class E>
    void get_enum(const std::string& key, E& out,
                  std::initializer_list<std::pair<const char*, E>> table) {
        if (const json* v = take(key)) {
            if (v->is_string()) {
                std::string s = v->get<std::string>();
                for (const auto& [name, val] : table)
                    if (s == name) {
                        out = val;
                        return;
                    }
            }
            errors.push_back("unrecognized value for key: " + full(key));
        }
    }
};

}  // namespace cfg

inline RunConfig parse_run_config(const nlohmann::json& doc) {
    RunConfig rc;
    std::vector<std::string> errors;
    {
        cfg::Scope root(doc, "", errors);
        TrainConfig& t = rc.train;
        root.get("iterations", t.iterations);
        root.get("batch", t.batch);
        root.get("resolution", t.resolution);
        root.get("gaussian_count", t.gaussian_count);
        root.get("seed", t.seed);
        root.get("prompt", t.prompt);
        root.get("negative_prompt", t.negative_prompt);
        root.get_vec3("background", t.background);
        root.get_enum("depth_norm", t.depth_norm,
                      {{"minmax", DepthNorm::MinMax}, {"nearfar", DepthNorm::NearFar}});
        root.get("use_pose_map", t.use_pose_map);
        root.get("checkpoint_interval", t.checkpoint_interval);
        root.get("out_dir", t.out_dir);
        root.get("body", rc.body_path);
        root.get_enum("provider", rc.provider,
                      {{"analytic", ProviderKind::Analytic}, {"remote", ProviderKind::Remote}});
        root.get("endpoint", rc.endpoint);
        root.get("reference", rc.reference_path);

        if (const auto* sub = root.take("learning_rates")) {
            cfg::Scope s(*sub, "learning_rates", errors);
            s.get("position", t.lrs.position);
            s.get("scale", t.lrs.scale);
            s.get("rotation", t.lrs.rotation);
            s.get("color", t.lrs.color);
            s.get("opacity", t.lrs.opacity);
        }
        if (const auto* sub = root.take("adam")) {
            cfg::Scope s(*sub, "adam", errors);
            s.get("beta1", t.beta1);
            s.get("beta2", t.beta2);
        }
        if (const auto* sub = root.take("camera")) {
            cfg::Scope s(*sub, "camera", errors);
            s.get_range("distance", t.distance);
            s.get_range("fovy", t.fovy);
            s.get_range("elevation", t.elevation);
            s.get_range("azimuth", t.azimuth);
            s.get("head_zoom_prob", t.head_zoom_prob);
            s.get("head_zoom_start", t.head_zoom_start);
            s.get_range("head_zoom_distance", t.head_zoom_distance);
        }
        if (const auto* sub = root.take("schedule")) {
            cfg::Scope s(*sub, "schedule", errors);
            s.get("steps", t.schedule_steps);
            s.get("beta_start", t.beta_start);
            s.get("beta_end", t.beta_end);
            s.get_enum("weight_mode", t.weight_mode,
                       {{"one", WeightMode::One},
                        {"sigma_sq", WeightMode::SigmaSq},
                        {"sigma_over_alpha", WeightMode::SigmaOverAlpha}});
        }
        if (const auto* sub = root.take("guidance")) {
            cfg::Scope s(*sub, "guidance", errors);
            GuidanceConfig& g = t.guidance;
            s.get("tau1", g.tau1);
            s.get("tau2_max", g.tau2_max);
            s.get("anneal_t", g.anneal_t);
            s.get_enum("anneal_shape", g.anneal_shape,
                       {{"step", AnnealShape::Step}, {"linear_ramp", AnnealShape::LinearRamp}});
            s.get("anneal_ramp_end", g.anneal_ramp_end);
            s.get("lambda_rgb", g.lambda_rgb);
            s.get("lambda_depth", g.lambda_depth);
            s.get("t_min", g.t_min);
            s.get("t_max", g.t_max);
            s.get_enum("mode", g.mode,
                       {{"vanilla", GuidanceMode::Vanilla},
                        {"cfg", GuidanceMode::Cfg},
                        {"annealed_negative", GuidanceMode::AnnealedNegative}});
        }
        if (const auto* sub = root.take("density")) {
            cfg::Scope s(*sub, "density", errors);
            DensifyConfig& d = t.densify;
            s.get("enabled", d.enabled);
            s.get("start_iter", d.start_iter);
            s.get("end_iter", d.end_iter);
            s.get("interval", d.interval);
            s.get("prune_phase_start", d.prune_phase_start);
            s.get("prune_phase_end", d.prune_phase_end);
            s.get("prune_phase_interval", d.prune_phase_interval);
            s.get("grad_threshold", d.grad_threshold);
            s.get("scale_split_threshold", d.scale_split_threshold);
            s.get("split_factor", d.split_factor);
            s.get("min_opacity", d.min_opacity);
            s.get("size_prune_threshold", d.size_prune_threshold);
        }
    }  // scopes flush unknown-key reports here

    if (rc.provider == ProviderKind::Remote && rc.endpoint.empty())
        errors.push_back("remote provider requires key: endpoint");
    if (rc.provider == ProviderKind::Analytic && rc.reference_path.empty())
        errors.push_back("analytic provider requires key: reference");
    if (!errors.empty()) {
        std::string msg = "config invalid:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ParamError(msg);
    }
    rc.train.validate();
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config parse error in " + path + ": " + e.what());
    }
    return parse_run_config(doc);
}

/// Serializes every field back out; used for --dry-run and the run-directory copy.
inline nlohmann::json run_config_to_json(const RunConfig& rc) {
    using json = nlohmann::json;
    const TrainConfig& t = rc.train;
    json doc;
    doc["iterations"] = t.iterations;
    doc["batch"] = t.batch;
    doc["resolution"] = t.resolution;
    doc["gaussian_count"] = t.gaussian_count;
    doc["seed"] = t.seed;
    doc["prompt"] = t.prompt;
    doc["negative_prompt"] = t.negative_prompt;
    doc["background"] = {t.background.x, t.background.y, t.background.z};
    doc["depth_norm"] = t.depth_norm == DepthNorm::MinMax ? "minmax" : "nearfar";
    doc["use_pose_map"] = t.use_pose_map;
    doc["checkpoint_interval"] = t.checkpoint_interval;
    doc["out_dir"] = t.out_dir;
    doc["body"] = rc.body_path;
    doc["provider"] = rc.provider == ProviderKind::Analytic ? "analytic" : "remote";
    doc["endpoint"] = rc.endpoint;
    doc["reference"] = rc.reference_path;
    doc["learning_rates"] = {{"position", t.lrs.position},
                             {"scale", t.lrs.scale},
                             {"rotation", t.lrs.rotation},
                             {"color", t.lrs.color},
                             {"opacity", t.lrs.opacity}};
    doc["adam"] = {{"beta1", t.beta1}, {"beta2", t.beta2}};
    doc["camera"] = {{"distance", {t.distance.lo, t.distance.hi}},
                     {"fovy", {t.fovy.lo, t.fovy.hi}},
                     {"elevation", {t.elevation.lo, t.elevation.hi}},
                     {"azimuth", {t.azimuth.lo, t.azimuth.hi}},
                     {"head_zoom_prob", t.head_zoom_prob},
                     {"head_zoom_start", t.head_zoom_start},
                     {"head_zoom_distance", {t.head_zoom_distance.lo, t.head_zoom_distance.hi}}};
    const char* wm = t.weight_mode == WeightMode::One
                         ? "one"
                         : (t.weight_mode == WeightMode::SigmaSq ? "sigma_sq" : "sigma_over_alpha");
    doc["schedule"] = {{"steps", t.schedule_steps},
                       {"beta_start", t.beta_start},
                       {"beta_end", t.beta_end},
                       {"weight_mode", wm}};
    const GuidanceConfig& g = t.guidance;
    const char* gm = g.mode == GuidanceMode::Vanilla
                         ? "vanilla"
                         : (g.mode == GuidanceMode::Cfg ? "cfg" : "annealed_negative");
    doc["guidance"] = {{"tau1", g.tau1},
                       {"tau2_max", g.tau2_max},
                       {"anneal_t", g.anneal_t},
                       {"anneal_shape", g.anneal_shape == AnnealShape::Step ? "step" : "linear_ramp"},
                       {"anneal_ramp_end", g.anneal_ramp_end},
                       {"lambda_rgb", g.lambda_rgb},
                       {"lambda_depth", g.lambda_depth},
                       {"t_min", g.t_min},
                       {"t_max", g.t_max},
                       {"mode", gm}};
    const DensifyConfig& d = t.densify;
    doc["density"] = {{"enabled", d.enabled},
                      {"start_iter", d.start_iter},
                      {"end_iter", d.end_iter},
                      {"interval", d.interval},
                      {"prune_phase_start", d.prune_phase_start},
                      {"prune_phase_end", d.prune_phase_end},
                      {"prune_phase_interval", d.prune_phase_interval},
                      {"grad_threshold", d.grad_threshold},
                      {"scale_split_threshold", d.scale_split_threshold},
                      {"split_factor", d.split_factor},
                      {"min_opacity", d.min_opacity},
                      {"size_prune_threshold", d.size_prune_threshold}};
    return doc;
}

}  // namespace splatgen
