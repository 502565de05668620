#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "splatgen/rasterizer.hpp"

namespace splatgen {

enum class WeightMode { One, SigmaSq, SigmaOverAlpha };

/// Variance-preserving noise schedule: alpha_t^2 + sigma_t^2 = 1.
struct NoiseSchedule {
    std::vector<double> alpha_bar;  // strictly decreasing
    WeightMode weight_mode = WeightMode::One;

    std::size_t steps() const { return alpha_bar.size(); }
    double alpha(std::size_t t) const { return std::sqrt(alpha_bar.at(t)); }
    double sigma(std::size_t t) const { return std::sqrt(1.0 - alpha_bar.at(t)); }
    double weight(std::size_t t) const {
        switch (weight_mode) {
            case WeightMode::SigmaSq:
                return 1.0 - alpha_bar.at(t);
            case WeightMode::SigmaOverAlpha:
                return sigma(t) / alpha(t);
            case WeightMode::One:
            default:
                return 1.0;
        }
    }

    /// Scaled-linear beta schedule (Stable Diffusion 2.0 defaults).
    static NoiseSchedule scaled_linear(std::size_t T = 1000, double beta_start = 8.5e-4,
                                       double beta_end = 1.2e-2,
                                       WeightMode mode = WeightMode::One) {
        NoiseSchedule s;
        s.weight_mode = mode;
        s.alpha_bar.resize(T);
        double sqrt_s = std::sqrt(beta_start), sqrt_e = std::sqrt(beta_end);
        double prod = 1.0;
        for (std::size_t t = 0; t < T; ++t) {
            double b = sqrt_s + (sqrt_e - sqrt_s) * double(t) / double(T - 1);
            prod *= 1.0 - b * b;
            s.alpha_bar[t] = prod;
        }
        return s;
    }
};

enum class GuidanceMode { Vanilla, Cfg, AnnealedNegative };
enum class AnnealShape { Step, LinearRamp };

struct GuidanceConfig {
    double tau1 = 7.5;                    // classifier-score weight
    double tau2_max = 1.0;                // negative-score weight at large t
    std::size_t anneal_t = 200;           // below this, the negative score is dropped
    AnnealShape anneal_shape = AnnealShape::Step;
    std::size_t anneal_ramp_end = 400;    // for LinearRamp
    double lambda_rgb = 0.5;              // lambda_1
    double lambda_depth = 0.5;            // lambda_2
    std::size_t t_min = 20, t_max = 980;  // timestep sampling bounds
    GuidanceMode mode = GuidanceMode::AnnealedNegative;

    /// tau2 schedule: 0 at small t, tau2_max at large t, non-decreasing.
    double tau2(std::size_t t) const {
        if (anneal_shape == AnnealShape::LinearRamp) {
            if (t < anneal_t) return 0.0;
            if (t >= anneal_ramp_end) return tau2_max;
            return tau2_max * double(t - anneal_t) / double(anneal_ramp_end - anneal_t);
        }
        return t < anneal_t ? 0.0 : tau2_max;
    }

    void validate() const {
        if (!(tau1 > 0)) throw ParamError("tau1 must be positive");
        if (lambda_rgb < 0 || lambda_depth < 0) throw ParamError("branch weights must be nonnegative");
        if (t_min < 1 || t_min >= t_max) throw ParamError("timestep bounds must satisfy 1 <= t_min < t_max");
    }
};

// --------------------------------------------------------------------------
// score algebra

/// v-prediction to epsilon: eps = alpha_t * v + sigma_t * x_t.
inline Image v_to_eps(const Image& v, const Image& x_t, std::size_t t, const NoiseSchedule& s) {
    Image eps = v;
    double a = s.alpha(t), sg = s.sigma(t);
    for (std::size_t i = 0; i < eps.data.size(); ++i) eps.data[i] = a * v.data[i] + sg * x_t.data[i];
    return eps;
}

/// epsilon to the clean-sample estimate: x0 = (x_t - sigma_t * eps) / alpha_t.
/// Equivalently alpha_t * x_t - sigma_t * v under the VP constraint.
inline Image eps_to_x0(const Image& eps, const Image& x_t, std::size_t t, const NoiseSchedule& s) {
    Image x0 = eps;
    double a = s.alpha(t), sg = s.sigma(t);
    for (std::size_t i = 0; i < x0.data.size(); ++i) x0.data[i] = (x_t.data[i] - sg * eps.data[i]) / a;
    return x0;
}

/// Plain SDS residual: delta = w_t * (eps_pred - eps_noise).
inline Image sds_delta(const Image& eps_pred, const Image& eps_noise, double w_t) {
    if (eps_pred.data.size() != eps_noise.data.size()) throw ParamError("sds_delta shape mismatch");
    Image out = eps_pred;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = w_t * (eps_pred.data[i] - eps_noise.data[i]);
    return out;
}

struct CfgDecomposition {
    Image delta_g;  // generative score: eps_cond - eps_noise
    Image delta_c;  // classifier score: eps_cond - eps_uncond
    Image delta;    // delta_g + tau * delta_c
};

inline CfgDecomposition decompose_cfg(const Image& eps_cond, const Image& eps_uncond,
                                      const Image& eps_noise, double tau) {
    if (eps_cond.data.size() != eps_uncond.data.size() ||
        eps_cond.data.size() != eps_noise.data.size())
        throw ParamError("decompose_cfg shape mismatch");
    CfgDecomposition out{eps_cond, eps_cond, eps_cond};
    for (std::size_t i = 0; i < eps_cond.data.size(); ++i) {
        out.delta_g.data[i] = eps_cond.data[i] - eps_noise.data[i];
        out.delta_c.data[i] = eps_cond.data[i] - eps_uncond.data[i];
        out.delta.data[i] = out.delta_g.data[i] + tau * out.delta_c.data[i];
    }
    return out;
}

struct NegativeClassifierScores {
    Image delta_c;   // eps_cond - eps_uncond
    Image delta_n;   // eps_neg - eps_uncond
    Image delta_nc;  // delta_c - delta_n == eps_cond - eps_neg
};

inline NegativeClassifierScores negative_classifier_delta(const Image& eps_cond,
                                                          const Image& eps_uncond,
                                                          const Image& eps_neg) {
    if (eps_cond.data.size() != eps_uncond.data.size() || eps_cond.data.size() != eps_neg.data.size())
        throw ParamError("negative_classifier_delta shape mismatch");
    NegativeClassifierScores out{eps_cond, eps_cond, eps_cond};
    for (std::size_t i = 0; i < eps_cond.data.size(); ++i) {
        out.delta_c.data[i] = eps_cond.data[i] - eps_uncond.data[i];
        out.delta_n.data[i] = eps_neg.data[i] - eps_uncond.data[i];
        out.delta_nc.data[i] = out.delta_c.data[i] - out.delta_n.data[i];
    }
    return out;
}

/// Annealed combination: w_t * (tau1 * delta_c - tau2(t) * delta_n).
inline Image annealed_delta(const Image& delta_c, const Image& delta_n, std::size_t t,
                            const GuidanceConfig& config, const NoiseSchedule& schedule) {
    if (delta_c.data.size() != delta_n.data.size()) throw ParamError("annealed_delta shape mismatch");
    double w = schedule.weight(t), t2 = config.tau2(t);
    Image out = delta_c;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = w * (config.tau1 * delta_c.data[i] - t2 * delta_n.data[i]);
    return out;
}

// --------------------------------------------------------------------------
// score providers

struct ScoreRequest {
    Image x_t;       // noised RGB, H x W x 3
    Image d_t;       // noised depth, H x W
    std::size_t t = 0;
    std::string prompt;
    std::string negative_prompt;
    Image pose_map;  // H x W x 3
};

struct ScoreResponse {
    Image eps_cond_rgb, eps_uncond_rgb, eps_neg_rgb;
    Image eps_cond_depth, eps_uncond_depth, eps_neg_depth;

    void check_shapes(const ScoreRequest& req) const {
        auto same = [](const Image& a, const Image& b) {
            return a.width == b.width && a.height == b.height && a.channels == b.channels;
        };
        const char* names[6] = {"eps_cond_rgb", "eps_uncond_rgb", "eps_neg_rgb",
                                "eps_cond_depth", "eps_uncond_depth", "eps_neg_depth"};
        const Image* rgb[3] = {&eps_cond_rgb, &eps_uncond_rgb, &eps_neg_rgb};
        const Image* dep[3] = {&eps_cond_depth, &eps_uncond_depth, &eps_neg_depth};
        for (int i = 0; i < 3; ++i) {
            if (!same(*rgb[i], req.x_t))
                throw ProviderError(std::string("score response shape mismatch in ") + names[i], false);
            if (!same(*dep[i], req.d_t))
                throw ProviderError(std::string("score response shape mismatch in ") + names[i + 3], false);
        }
        for (const Image* img : {rgb[0], rgb[1], rgb[2], dep[0], dep[1], dep[2]})
            for (double v : img->data)
                if (!std::isfinite(v)) throw ProviderError("non-finite value in score response", false);
    }
};

/// A denoiser stand-in. begin_view lets analytic providers build per-view
/// targets; remote providers condition on the pose map instead and ignore it.
class ScoreProvider {
public:
    virtual ~ScoreProvider() = default;
    virtual void begin_view(const Camera&) {}
    virtual ScoreResponse score(const ScoreRequest& req, const NoiseSchedule& schedule) = 0;
};

/// Exact denoiser of a point-mass data distribution: eps = (x_t - alpha_t x*) / sigma_t.
/// Unconditional branch pulls toward uniform gray, negative branch toward the
/// inverted target, so every delta term is exercised.
class DiracProvider : public ScoreProvider {
public:
    DiracProvider(Image target_rgb, Image target_depth)
        : target_rgb_(std::move(target_rgb)), target_depth_(std::move(target_depth)) {
        for (const Image* t : {&target_rgb_, &target_depth_})
            for (double v : t->data)
                if (v < 0.0 || v > 1.0) throw ParamError("dirac targets must lie in [0,1]");
    }

    ScoreResponse score(const ScoreRequest& req, const NoiseSchedule& schedule) override {
        double a = schedule.alpha(req.t), s = schedule.sigma(req.t);
        if (s == 0) throw ParamError("dirac provider undefined at sigma_t = 0");
        auto toward = [&](const Image& x_t, const Image& target, double mix_gray, bool invert) {
            Image eps = x_t;
            for (std::size_t i = 0; i < eps.data.size(); ++i) {
                double tv = invert ? 1.0 - target.data[i] : target.data[i];
                if (mix_gray >= 0) tv = mix_gray;
                eps.data[i] = (x_t.data[i] - a * tv) / s;
            }
            return eps;
        };
        ScoreResponse resp;
        resp.eps_cond_rgb = toward(req.x_t, target_rgb_, -1, false);
        resp.eps_uncond_rgb = toward(req.x_t, target_rgb_, 0.5, false);
        resp.eps_neg_rgb = toward(req.x_t, target_rgb_, -1, true);
        resp.eps_cond_depth = toward(req.d_t, target_depth_, -1, false);
        resp.eps_uncond_depth = toward(req.d_t, target_depth_, 0.5, false);
        resp.eps_neg_depth = toward(req.d_t, target_depth_, -1, true);
        return resp;
    }

    const Image& target_rgb() const { return target_rgb_; }
    const Image& target_depth() const { return target_depth_; }

private:
    Image target_rgb_, target_depth_;
};

/// Dirac provider whose targets are renders of a reference cloud at the
/// current view; turns SDS into a multi-view reconstruction oracle.
class ReconstructionProvider : public ScoreProvider {
public:
    ReconstructionProvider(GaussianCloud reference, Vec3 background)
        : reference_(std::move(reference)), background_(background) {}

    void begin_view(const Camera& cam) override {
        RenderOutput out = render(reference_, cam, background_);
        inner_ = std::make_unique<DiracProvider>(out.rgb, out.depth);
    }

    ScoreResponse score(const ScoreRequest& req, const NoiseSchedule& schedule) override {
        if (!inner_) throw ProviderError("reconstruction provider used without begin_view", false);
        return inner_->score(req, schedule);
    }

private:
    GaussianCloud reference_;
    Vec3 background_;
    std::unique_ptr<DiracProvider> inner_;
};

// --------------------------------------------------------------------------
// dual-branch SDS step

struct DualBranchResult {
    CloudGradients grads{0};
    std::size_t t = 0;
    double adjoint_rgb_norm = 0;
    double adjoint_depth_norm = 0;
};

/// Renders the view, noises RGB and normalized depth independently, queries the
/// provider, turns the per-branch deltas into adjoints, and backpropagates.
inline DualBranchResult dual_branch_step(const GaussianCloud& cloud, const Camera& cam,
                                         ScoreProvider& provider, const NoiseSchedule& schedule,
                                         const GuidanceConfig& config, std::mt19937_64& rng,
                                         const std::string& prompt = "",
                                         const std::string& negative_prompt = "",
                                         const Image* pose_map = nullptr,
                                         const Vec3& background = Vec3{},
                                         DepthNorm depth_norm = DepthNorm::MinMax) {
    config.validate();
    RenderOutput out = render(cloud, cam, background, depth_norm);

    std::uniform_int_distribution<std::size_t> tdist(config.t_min, config.t_max - 1);
    std::size_t t = tdist(rng);
    double a = schedule.alpha(t), s = schedule.sigma(t);

    std::normal_distribution<double> normal(0.0, 1.0);
    ScoreRequest req;
    req.t = t;
    req.prompt = prompt;
    req.negative_prompt = negative_prompt;
    req.pose_map = pose_map ? *pose_map : Image(cam.width, cam.height, 3);
    Image eps_x(cam.width, cam.height, 3), eps_d(cam.width, cam.height, 1);
    for (double& v : eps_x.data) v = normal(rng);
    for (double& v : eps_d.data) v = normal(rng);
    req.x_t = out.rgb;
    for (std::size_t i = 0; i < req.x_t.data.size(); ++i)
        req.x_t.data[i] = a * out.rgb.data[i] + s * eps_x.data[i];
    req.d_t = out.depth;
    for (std::size_t i = 0; i < req.d_t.data.size(); ++i)
        req.d_t.data[i] = a * out.depth.data[i] + s * eps_d.data[i];

    provider.begin_view(cam);
    ScoreResponse resp = provider.score(req, schedule);
    resp.check_shapes(req);

    auto branch_adjoint = [&](const Image& cond, const Image& uncond, const Image& neg,
                              const Image& noise) {
        switch (config.mode) {
            case GuidanceMode::Vanilla:
                return sds_delta(cond, noise, schedule.weight(t));
            case GuidanceMode::Cfg: {
                CfgDecomposition d = decompose_cfg(cond, uncond, noise, config.tau1);
                Image adj = d.delta;
                double w = schedule.weight(t);
                for (double& v : adj.data) v *= w;
                return adj;
            }
            case GuidanceMode::AnnealedNegative:
            default: {
                NegativeClassifierScores ncs = negative_classifier_delta(cond, uncond, neg);
                return annealed_delta(ncs.delta_c, ncs.delta_n, t, config, schedule);
            }
        }
    };
    Image adj_rgb = branch_adjoint(resp.eps_cond_rgb, resp.eps_uncond_rgb, resp.eps_neg_rgb, eps_x);
    Image adj_depth =
        branch_adjoint(resp.eps_cond_depth, resp.eps_uncond_depth, resp.eps_neg_depth, eps_d);

    DualBranchResult result;
    result.t = t;
    for (double v : adj_rgb.data) result.adjoint_rgb_norm += v * v;
    for (double v : adj_depth.data) result.adjoint_depth_norm += v * v;
    result.adjoint_rgb_norm = std::sqrt(result.adjoint_rgb_norm);
    result.adjoint_depth_norm = std::sqrt(result.adjoint_depth_norm);

    for (double& v : adj_rgb.data) v *= config.lambda_rgb;
    for (double& v : adj_depth.data) v *= config.lambda_depth;
    Image dL_dalpha(cam.width, cam.height, 1);
    result.grads = render_backward(cloud, cam, out, adj_rgb, adj_depth, dL_dalpha);
    return result;
}

}  // namespace splatgen
