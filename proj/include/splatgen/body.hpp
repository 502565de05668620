#pragma once

#include <array>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "splatgen/cloud.hpp"

namespace splatgen {

/// One COCO keypoint anchored on either a joint or a vertex of the model.
struct KeypointAnchor {
    bool is_vertex = false;
    int index = 0;
};

inline const std::array<const char*, 17>& coco_keypoint_names() {
    static const std::array<const char*, 17> names = {
        "nose", "left_eye", "right_eye", "left_ear", "right_ear",
        "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
        "left_wrist", "right_wrist", "left_hip", "right_hip",
        "left_knee", "right_knee", "left_ankle", "right_ankle"};
    return names;
}

/// Parametric body: template + blend shapes + skeleton + skinning weights.
struct BodyModel {
    std::vector<double> template_verts;  // V x 3
    std::vector<std::array<int, 3>> faces;
    int n_shape = 0, n_pose = 0, n_expr = 0;
    std::vector<double> shape_basis;     // V x 3 x n_shape
    std::vector<double> pose_basis;      // V x 3 x n_pose
    std::vector<double> expr_basis;      // V x 3 x n_expr
    std::vector<double> joint_regressor; // K x V
    std::vector<double> skin_weights;    // V x K, rows sum to 1
    std::vector<int> parent;             // K, parent[0] == -1
    std::vector<std::string> joint_names;
    std::map<std::string, KeypointAnchor> keypoint_map;  // the 17 COCO names
    int head_joint = -1;

    std::size_t n_verts() const { return template_verts.size() / 3; }
    std::size_t n_joints() const { return parent.size(); }

    void validate() const {
        std::size_t v = n_verts(), k = n_joints();
        if (v == 0 || k == 0) throw ParseError("body model: empty vertex or joint set");
        if (skin_weights.size() != v * k) throw ParseError("body model: skin weight shape mismatch");
        if (joint_regressor.size() != k * v) throw ParseError("body model: joint regressor shape mismatch");
        if (shape_basis.size() != v * 3 * std::size_t(n_shape))
            throw ParseError("body model: shape basis shape mismatch");
        if (pose_basis.size() != v * 3 * std::size_t(n_pose))
            throw ParseError("body model: pose basis shape mismatch");
        if (n_pose != 0 && std::size_t(n_pose) != 9 * (k - 1))
            throw ParseError("body model: pose basis must have 9*(K-1) columns");
        if (expr_basis.size() != v * 3 * std::size_t(n_expr))
            throw ParseError("body model: expression basis shape mismatch");
        for (std::size_t i = 0; i < v; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < k; ++j) {
                double wij = skin_weights[i * k + j];
                if (wij < -1e-9) throw ParseError("body model: negative skin weight");
                s += wij;
            }
            if (std::abs(s - 1.0) > 1e-6)
                throw ParseError("body model: skin weight row " + std::to_string(i) + " does not sum to 1");
        }
        if (parent[0] != -1) throw ParseError("body model: joint 0 must be the root");
        for (std::size_t j = 1; j < k; ++j) {
            // walk to the root; a cycle would never get there
            int cur = int(j), steps = 0;
            while (cur != 0) {
                cur = parent[std::size_t(cur)];
                if (cur < 0 || ++steps > int(k)) throw ParseError("body model: parent table is not a tree");
            }
        }
        if (keypoint_map.size() != 17) throw ParseError("body model: keypoint map must have the 17 COCO entries");
        for (const char* name : coco_keypoint_names())
            if (!keypoint_map.count(name)) throw ParseError(std::string("body model: missing keypoint ") + name);
    }
};

struct PoseParams {
    std::vector<double> beta;        // n_shape
    std::vector<Vec3> joint_rots;    // K axis-angle, joint-local
    std::vector<double> psi;         // n_expr
    Vec3 global_rotation{};          // axis-angle, applied about the posed root
    Vec3 global_translation{};
};

struct SkinResult {
    std::vector<Vec3> vertices;  // V
    std::vector<Vec3> joints;    // K, posed
};

/// Eq-style LBS: shaped template (shape/pose/expression blend shapes), joints
/// regressed from the shaped template, forward kinematics down the parent
/// tree, convex-weighted blend of per-joint rigid transforms.
inline SkinResult skin(const BodyModel& model, const PoseParams& params) {
    const std::size_t v = model.n_verts(), k = model.n_joints();
    if (params.beta.size() != std::size_t(model.n_shape)) throw ParamError("beta dimension mismatch");
    if (params.psi.size() != std::size_t(model.n_expr)) throw ParamError("psi dimension mismatch");
    if (params.joint_rots.size() != k) throw ParamError("joint rotation count mismatch");

    // shape-only template drives the joint locations
    std::vector<double> shaped(model.template_verts);
    for (int b = 0; b < model.n_shape; ++b) {
        double coef = params.beta[std::size_t(b)];
        if (coef == 0) continue;
        for (std::size_t i = 0; i < v * 3; ++i)
            shaped[i] += coef * model.shape_basis[i * std::size_t(model.n_shape) + std::size_t(b)];
    }
    std::vector<Vec3> rest_joints(k);
    for (std::size_t j = 0; j < k; ++j) {
        Vec3 acc{};
        for (std::size_t i = 0; i < v; ++i) {
            double r = model.joint_regressor[j * v + i];
            if (r == 0) continue;
            acc += Vec3{shaped[i * 3], shaped[i * 3 + 1], shaped[i * 3 + 2]} * r;
        }
        rest_joints[j] = acc;
    }

    // local joint rotations; pose blend shapes use flattened (R_k - I), k >= 1
    std::vector<Mat3> local(k);
    for (std::size_t j = 0; j < k; ++j) {
        const Vec3& aa = params.joint_rots[j];
        if (aa.norm() >= M_PI) throw ParamError("per-joint rotation magnitude must be < pi");
        local[j] = rodrigues(aa);
    }
    if (model.n_pose > 0) {
        std::vector<double> feat(std::size_t(model.n_pose));
        for (std::size_t j = 1; j < k; ++j) {
            Mat3 d = local[j];
            for (int c = 0; c < 3; ++c) d(c, c) -= 1.0;
            for (int c = 0; c < 9; ++c) feat[(j - 1) * 9 + std::size_t(c)] = d.m[std::size_t(c)];
        }
        for (std::size_t i = 0; i < v * 3; ++i) {
            double acc = 0;
            for (std::size_t b = 0; b < std::size_t(model.n_pose); ++b)
                acc += model.pose_basis[i * std::size_t(model.n_pose) + b] * feat[b];
            shaped[i] += acc;
        }
    }
    for (int b = 0; b < model.n_expr; ++b) {
        double coef = params.psi[std::size_t(b)];
        if (coef == 0) continue;
        for (std::size_t i = 0; i < v * 3; ++i)
            shaped[i] += coef * model.expr_basis[i * std::size_t(model.n_expr) + std::size_t(b)];
    }

    // forward kinematics: world transform per joint (rotation + origin)
    std::vector<Mat3> world_rot(k);
    std::vector<Vec3> world_pos(k);
    world_rot[0] = local[0];
    world_pos[0] = rest_joints[0];
    for (std::size_t j = 1; j < k; ++j) {
        std::size_t p = std::size_t(model.parent[j]);
        world_rot[j] = world_rot[p] * local[j];
        world_pos[j] = world_pos[p] + world_rot[p] * (rest_joints[j] - rest_joints[p]);
    }

    SkinResult out;
    out.vertices.resize(v);
    out.joints = world_pos;
    for (std::size_t i = 0; i < v; ++i) {
        Vec3 tv{shaped[i * 3], shaped[i * 3 + 1], shaped[i * 3 + 2]};
        Vec3 acc{};
        for (std::size_t j = 0; j < k; ++j) {
            double wij = model.skin_weights[i * k + j];
            if (wij == 0) continue;
            acc += (world_rot[j] * (tv - rest_joints[j]) + world_pos[j]) * wij;
        }
        out.vertices[i] = acc;
    }

    // global rigid motion about the posed root
    Mat3 rg = rodrigues(params.global_rotation);
    Vec3 root = out.joints[0];
    for (auto& p : out.vertices) p = rg * (p - root) + root + params.global_translation;
    for (auto& p : out.joints) p = rg * (p - root) + root + params.global_translation;
    return out;
}

struct SurfaceSamples {
    std::vector<Vec3> points;
    double nn_dist = 0;  // mean nearest-neighbor distance over a 1k subsample
    std::vector<std::size_t> triangle;  // source triangle per point
};

inline SurfaceSamples sample_surface(const BodyModel& model, const PoseParams& params,
                                     std::size_t count, std::mt19937_64& rng) {
    if (count < 1) throw ParamError("sample count must be >= 1");
    SkinResult posed = skin(model, params);
    std::vector<double> areas(model.faces.size());
    double total = 0;
    for (std::size_t t = 0; t < model.faces.size(); ++t) {
        const auto& f = model.faces[t];
        Vec3 a = posed.vertices[std::size_t(f[0])], b = posed.vertices[std::size_t(f[1])],
             c = posed.vertices[std::size_t(f[2])];
        areas[t] = 0.5 * (b - a).cross(c - a).norm();
        total += areas[t];
    }
    if (total <= 0) throw ParamError("degenerate mesh: zero total surface area");
    std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    SurfaceSamples out;
    out.points.resize(count);
    out.triangle.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t t = pick(rng);
        const auto& f = model.faces[t];
        Vec3 a = posed.vertices[std::size_t(f[0])], b = posed.vertices[std::size_t(f[1])],
             c = posed.vertices[std::size_t(f[2])];
        double su = std::sqrt(uni(rng)), r2 = uni(rng);
        Vec3 p = a * (1.0 - su) + b * (su * (1.0 - r2)) + c * (su * r2);
        out.points[i] = p;
        out.triangle[i] = t;
    }
    std::size_t sub = std::min<std::size_t>(1000, count);
    double acc = 0;
    for (std::size_t i = 0; i < sub; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < sub; ++j) {
            if (i == j) continue;
            double d = (out.points[i] - out.points[j]).norm();
            if (d < best) best = d;
        }
        acc += (sub > 1) ? best : 0.0;
    }
    out.nn_dist = sub > 1 ? acc / double(sub) : 0.01;
    return out;
}

/// Similarity transform that normalizes the posed body: height 1.8 scene
/// units, pelvis (root joint) at the origin.
struct BodyFrame {
    Vec3 pelvis{};
    double scale = 1.0;

    Vec3 apply(const Vec3& p) const { return (p - pelvis) * scale; }
};

inline BodyFrame body_frame(const BodyModel& model, const PoseParams& params) {
    SkinResult posed = skin(model, params);
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& p : posed.vertices) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    if (!(ymax > ymin)) throw ParamError("degenerate body: zero height");
    BodyFrame frame;
    frame.pelvis = posed.joints[0];
    frame.scale = 1.8 / (ymax - ymin);
    return frame;
}

/// Surface-sampled Gaussian initialization: identity rotations, opacity 0.1,
/// gray color, isotropic scale from the mean nearest-neighbor distance.
inline GaussianCloud init_cloud(const BodyModel& model, const PoseParams& params,
                                std::size_t count, std::mt19937_64& rng) {
    SurfaceSamples samples = sample_surface(model, params, count, rng);
    BodyFrame frame = body_frame(model, params);
    GaussianCloud cloud;
    cloud.resize(count);
    double scale = std::max(samples.nn_dist * frame.scale, 1e-6);
    double log_scale = std::log(scale);
    double opacity = logit(0.1);
    for (std::size_t i = 0; i < count; ++i) {
        cloud.set_position(i, frame.apply(samples.points[i]));
        for (int c = 0; c < 3; ++c) {
            cloud.log_scales[i * 3 + std::size_t(c)] = log_scale;
            cloud.f_dc[i * 3 + std::size_t(c)] = 0.0;
        }
        cloud.rotations[i * 4] = 1.0;
        cloud.rotations[i * 4 + 1] = cloud.rotations[i * 4 + 2] = cloud.rotations[i * 4 + 3] = 0.0;
        cloud.opacity_logits[i] = opacity;
    }
    return cloud;
}

/// Keypoint positions in the normalized body frame, COCO order.
inline std::array<Vec3, 17> keypoint_positions(const BodyModel& model, const PoseParams& params) {
    SkinResult posed = skin(model, params);
    BodyFrame frame = body_frame(model, params);
    std::array<Vec3, 17> out;
    for (std::size_t i = 0; i < 17; ++i) {
        const KeypointAnchor& a = model.keypoint_map.at(coco_keypoint_names()[i]);
        Vec3 p = a.is_vertex ? posed.vertices[std::size_t(a.index)] : posed.joints[std::size_t(a.index)];
        out[i] = frame.apply(p);
    }
    return out;
}

inline void export_obj(const BodyModel& model, const PoseParams& params, const std::string& path) {
    SkinResult posed = skin(model, params);
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    for (const auto& p : posed.vertices) f << "v " << p.x << " " << p.y << " " << p.z << "\n";
    for (const auto& face : model.faces)
        f << "f " << face[0] + 1 << " " << face[1] + 1 << " " << face[2] + 1 << "\n";
    if (!f) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// model container (JSON)

inline void save_body(const BodyModel& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = "splatgen_body";
    j["version"] = 1;
    j["template_verts"] = model.template_verts;
    std::vector<int> flat_faces;
    for (const auto& f : model.faces) {
        flat_faces.push_back(f[0]);
        flat_faces.push_back(f[1]);
        flat_faces.push_back(f[2]);
    }
    j["faces"] = flat_faces;
    j["n_shape"] = model.n_shape;
    j["n_pose"] = model.n_pose;
    j["n_expr"] = model.n_expr;
    j["shape_basis"] = model.shape_basis;
    j["pose_basis"] = model.pose_basis;
    j["expr_basis"] = model.expr_basis;
    j["joint_regressor"] = model.joint_regressor;
    j["skin_weights"] = model.skin_weights;
    j["parent"] = model.parent;
    j["joint_names"] = model.joint_names;
    j["head_joint"] = model.head_joint;
    nlohmann::json kp;
    for (const auto& [name, a] : model.keypoint_map)
        kp[name] = {{a.is_vertex ? "vertex" : "joint", a.index}};
    j["keypoints"] = kp;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << j.dump();
    if (!f) throw IoError("write failed: " + path);
}

inline BodyModel load_body(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("body model " + path + ": " + e.what());
    }
    if (j.value("format", "") != "splatgen_body") throw ParseError("body model: bad format tag");
    BodyModel m;
    try {
        m.template_verts = j.at("template_verts").get<std::vector<double>>();
        std::vector<int> flat = j.at("faces").get<std::vector<int>>();
        if (flat.size() % 3 != 0) throw ParseError("body model: face list not divisible by 3");
        for (std::size_t i = 0; i < flat.size(); i += 3)
            m.faces.push_back({flat[i], flat[i + 1], flat[i + 2]});
        m.n_shape = j.at("n_shape").get<int>();
        m.n_pose = j.at("n_pose").get<int>();
        m.n_expr = j.at("n_expr").get<int>();
        m.shape_basis = j.at("shape_basis").get<std::vector<double>>();
        m.pose_basis = j.at("pose_basis").get<std::vector<double>>();
        m.expr_basis = j.at("expr_basis").get<std::vector<double>>();
        m.joint_regressor = j.at("joint_regressor").get<std::vector<double>>();
        m.skin_weights = j.at("skin_weights").get<std::vector<double>>();
        m.parent = j.at("parent").get<std::vector<int>>();
        m.joint_names = j.value("joint_names", std::vector<std::string>{});
        m.head_joint = j.value("head_joint", -1);
        for (const auto& [name, spec] : j.at("keypoints").items()) {
            KeypointAnchor a;
            if (spec.contains("joint")) {
                a.is_vertex = false;
                a.index = spec.at("joint").get<int>();
            } else if (spec.contains("vertex")) {
                a.is_vertex = true;
                a.index = spec.at("vertex").get<int>();
            } else {
                throw ParseError("body model: keypoint " + name + " needs a joint or vertex index");
            }
            m.keypoint_map[name] = a;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("body model " + path + ": " + e.what());
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// built-in articulated "capsule person" test model

namespace detail {

struct ToyBuilder {
    BodyModel m;
    std::vector<Vec3> joints;

    std::size_t add_vert(const Vec3& p) {
        m.template_verts.push_back(p.x);
        m.template_verts.push_back(p.y);
        m.template_verts.push_back(p.z);
        return m.template_verts.size() / 3 - 1;
    }

    // tube of `rings` rings x 8 vertices from joint a to joint b; the first and
    // last ring centers sit exactly on the joints so the regressor can use them
    void add_tube(int ja, int jb, double radius, int rings, std::vector<std::size_t>& ring_a,
                  std::vector<std::size_t>& ring_b, std::vector<std::pair<std::size_t, double>>& weights) {
        Vec3 a = joints[std::size_t(ja)], b = joints[std::size_t(jb)];
        Vec3 axis = (b - a).normalized();
        Vec3 ref = std::abs(axis.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
        Vec3 u = axis.cross(ref).normalized(), v = axis.cross(u);
        std::vector<std::vector<std::size_t>> ring_ids;
        for (int r = 0; r < rings; ++r) {
            double t = double(r) / double(rings - 1);
            Vec3 center = a * (1.0 - t) + b * t;
            std::vector<std::size_t> ring;
            for (int s = 0; s < 8; ++s) {
                double ang = 2.0 * M_PI * double(s) / 8.0;
                std::size_t id = add_vert(center + (u * std::cos(ang) + v * std::sin(ang)) * radius);
                ring.push_back(id);
                // weight to parent joint, ramping to a 50/50 blend at the far end
                double wb = t <= 0.5 ? 0.0 : (t - 0.5);
                weights.push_back({id, wb});
            }
            ring_ids.push_back(ring);
        }
        for (int r = 0; r + 1 < rings; ++r) {
            for (int s = 0; s < 8; ++s) {
                int sn = (s + 1) % 8;
                int v0 = int(ring_ids[std::size_t(r)][std::size_t(s)]);
                int v1 = int(ring_ids[std::size_t(r)][std::size_t(sn)]);
                int v2 = int(ring_ids[std::size_t(r) + 1][std::size_t(s)]);
                int v3 = int(ring_ids[std::size_t(r) + 1][std::size_t(sn)]);
                m.faces.push_back({v0, v1, v2});
                m.faces.push_back({v1, v3, v2});
            }
        }
        ring_a = ring_ids.front();
        ring_b = ring_ids.back();
    }
};

}  // namespace detail

/// ~500-vertex articulated capsule person; same schema as loaded models, so
/// every test and demo runs without licensed body assets.
inline BodyModel make_toy_body() {
    detail::ToyBuilder tb;
    // joint layout: feet at y=0, facing +z, body's left along +x
    const std::vector<std::pair<std::string, Vec3>> joint_spec = {
        {"pelvis", {0, 0.95, 0}},      {"neck", {0, 1.45, 0}},        {"head", {0, 1.60, 0}},
        {"nose", {0, 1.62, 0.10}},     {"left_eye", {0.035, 1.66, 0.085}},
        {"right_eye", {-0.035, 1.66, 0.085}}, {"left_ear", {0.075, 1.64, 0.015}},
        {"right_ear", {-0.075, 1.64, 0.015}}, {"left_shoulder", {0.18, 1.40, 0}},
        {"left_elbow", {0.45, 1.40, 0}}, {"left_wrist", {0.70, 1.40, 0}},
        {"right_shoulder", {-0.18, 1.40, 0}}, {"right_elbow", {-0.45, 1.40, 0}},
        {"right_wrist", {-0.70, 1.40, 0}}, {"left_hip", {0.10, 0.90, 0}},
        {"left_knee", {0.10, 0.50, 0}}, {"left_ankle", {0.10, 0.08, 0}},
        {"right_hip", {-0.10, 0.90, 0}}, {"right_knee", {-0.10, 0.50, 0}},
        {"right_ankle", {-0.10, 0.08, 0}}};
    const std::vector<int> parent = {-1, 0, 1, 2, 2, 2, 2, 2, 1, 8, 9, 1, 11, 12, 0, 14, 15, 0, 17, 18};
    const std::size_t K = joint_spec.size();
    for (const auto& [name, pos] : joint_spec) {
        tb.m.joint_names.push_back(name);
        tb.joints.push_back(pos);
    }
    tb.m.parent = parent;
    tb.m.head_joint = 2;

    // (parent joint, child joint, radius) per capsule
    struct Tube {
        int a, b;
        double radius;
        int rings;
    };
    const std::vector<Tube> tubes = {
        {0, 1, 0.14, 6},   // torso
        {1, 2, 0.06, 3},   // neck
        {8, 9, 0.05, 5},   {9, 10, 0.04, 5},   // left arm
        {11, 12, 0.05, 5}, {12, 13, 0.04, 5},  // right arm
        {14, 15, 0.07, 5}, {15, 16, 0.05, 5},  // left leg
        {17, 18, 0.07, 5}, {18, 19, 0.05, 5},  // right leg
    };
    // per-vertex weight records: (vertex, joint, w)
    std::vector<std::array<double, 3>> wrec;
    std::vector<std::vector<std::size_t>> joint_ring(K);
    for (const auto& t : tubes) {
        std::vector<std::size_t> ra, rb;
        std::vector<std::pair<std::size_t, double>> ws;
        tb.add_tube(t.a, t.b, t.radius, t.rings, ra, rb, ws);
        for (auto& [vid, wb] : ws) {
            wrec.push_back({double(vid), double(t.a), 1.0 - wb});
            if (wb > 0) wrec.push_back({double(vid), double(t.b), wb});
        }
        if (joint_ring[std::size_t(t.a)].empty()) joint_ring[std::size_t(t.a)] = ra;
        joint_ring[std::size_t(t.b)] = rb;
    }
    // head as a small sphere of rings around the head joint
    {
        Vec3 c = tb.joints[2];
        double R = 0.11;
        std::vector<std::vector<std::size_t>> rings;
        for (int lat = 0; lat < 5; ++lat) {
            double phi = M_PI * (double(lat + 1) / 6.0 - 0.5);  // avoid poles
            std::vector<std::size_t> ring;
            for (int s = 0; s < 8; ++s) {
                double ang = 2.0 * M_PI * double(s) / 8.0;
                Vec3 p = c + Vec3{std::cos(phi) * std::cos(ang), std::sin(phi), std::cos(phi) * std::sin(ang)} * R;
                std::size_t id = tb.add_vert(p);
                ring.push_back(id);
                wrec.push_back({double(id), 2.0, 1.0});
            }
            rings.push_back(ring);
        }
        for (std::size_t r = 0; r + 1 < rings.size(); ++r)
            for (int s = 0; s < 8; ++s) {
                int sn = (s + 1) % 8;
                tb.m.faces.push_back({int(rings[r][std::size_t(s)]), int(rings[r][std::size_t(sn)]),
                                      int(rings[r + 1][std::size_t(s)])});
                tb.m.faces.push_back({int(rings[r][std::size_t(sn)]), int(rings[r + 1][std::size_t(sn)]),
                                      int(rings[r + 1][std::size_t(s)])});
            }
        joint_ring[2] = rings[2];  // equator ring centers on the head joint
    }
    // small marker triangles give the face joints exact regressor targets
    for (int j : {3, 4, 5, 6, 7}) {
        Vec3 c = tb.joints[std::size_t(j)];
        double e = 0.004;
        std::size_t a = tb.add_vert(c + Vec3{e, 0, 0});
        std::size_t b = tb.add_vert(c + Vec3{-e * 0.5, e * 0.866, 0});
        std::size_t d = tb.add_vert(c + Vec3{-e * 0.5, -e * 0.866, 0});
        tb.m.faces.push_back({int(a), int(b), int(d)});
        for (std::size_t id : {a, b, d}) wrec.push_back({double(id), 2.0, 1.0});  // ride with the head
        joint_ring[std::size_t(j)] = {a, b, d};
    }

    const std::size_t V = tb.m.n_verts();
    tb.m.skin_weights.assign(V * K, 0.0);
    for (const auto& r : wrec)
        tb.m.skin_weights[std::size_t(r[0]) * K + std::size_t(r[1])] += r[2];
    tb.m.joint_regressor.assign(K * V, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
        const auto& ring = joint_ring[j];
        if (ring.empty()) throw ParseError("toy body: joint without regressor ring");
        for (std::size_t id : ring) tb.m.joint_regressor[j * V + id] = 1.0 / double(ring.size());
    }
    // two shape directions: taller, wider
    tb.m.n_shape = 2;
    tb.m.shape_basis.assign(V * 3 * 2, 0.0);
    for (std::size_t i = 0; i < V; ++i) {
        double y = tb.m.template_verts[i * 3 + 1];
        tb.m.shape_basis[(i * 3 + 1) * 2 + 0] = 0.05 * y;  // stretch in y
        tb.m.shape_basis[(i * 3 + 0) * 2 + 1] = 0.05 * tb.m.template_verts[i * 3];
        tb.m.shape_basis[(i * 3 + 2) * 2 + 1] = 0.05 * tb.m.template_verts[i * 3 + 2];
    }
    tb.m.n_pose = 0;
    tb.m.n_expr = 0;
    for (std::size_t i = 0; i < 17; ++i) {
        const char* name = coco_keypoint_names()[i];
        int jidx = -1;
        for (std::size_t j = 0; j < K; ++j)
            if (tb.m.joint_names[j] == name) jidx = int(j);
        if (jidx < 0) throw ParseError(std::string("toy body: missing joint for ") + name);
        tb.m.keypoint_map[name] = KeypointAnchor{false, jidx};
    }
    tb.m.validate();
    return tb.m;
}

inline PoseParams rest_pose(const BodyModel& model) {
    PoseParams p;
    p.beta.assign(std::size_t(model.n_shape), 0.0);
    p.psi.assign(std::size_t(model.n_expr), 0.0);
    p.joint_rots.assign(model.n_joints(), Vec3{});
    return p;
}

}  // namespace splatgen
