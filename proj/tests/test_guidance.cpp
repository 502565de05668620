#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "splatgen/guidance.hpp"

using namespace splatgen;

namespace {

Image random_image(int w, int h, int c, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
    Image img(w, h, c);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : img.data) v = u(rng);
    return img;
}

double max_abs(const Image& img) {
    double m = 0;
    for (double v : img.data) m = std::max(m, std::abs(v));
    return m;
}

struct BadShapeProvider : ScoreProvider {
    ScoreResponse score(const ScoreRequest& req, const NoiseSchedule&) override {
        ScoreResponse r;
        r.eps_cond_rgb = Image(req.x_t.width, req.x_t.height, 3);
        r.eps_uncond_rgb = Image(req.x_t.width / 2, req.x_t.height, 3);  // wrong
        r.eps_neg_rgb = r.eps_cond_rgb;
        r.eps_cond_depth = Image(req.d_t.width, req.d_t.height, 1);
        r.eps_uncond_depth = r.eps_cond_depth;
        r.eps_neg_depth = r.eps_cond_depth;
        return r;
    }
};

}  // namespace

TEST_CASE("noise schedule is variance preserving") {
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    REQUIRE(s.steps() == 1000);
    double prev = 1.0;
    for (std::size_t t = 0; t < s.steps(); ++t) {
        CHECK(s.alpha_bar[t] > 0.0);
        CHECK(s.alpha_bar[t] < prev);
        prev = s.alpha_bar[t];
        double a = s.alpha(t), sg = s.sigma(t);
        CHECK(std::abs(a * a + sg * sg - 1.0) < 1e-12);
    }
}

TEST_CASE("schedule weight modes") {
    NoiseSchedule one = NoiseSchedule::scaled_linear(100, 8.5e-4, 1.2e-2, WeightMode::One);
    NoiseSchedule ssq = NoiseSchedule::scaled_linear(100, 8.5e-4, 1.2e-2, WeightMode::SigmaSq);
    NoiseSchedule soa = NoiseSchedule::scaled_linear(100, 8.5e-4, 1.2e-2, WeightMode::SigmaOverAlpha);
    for (std::size_t t : {std::size_t(0), std::size_t(40), std::size_t(99)}) {
        CHECK(one.weight(t) == 1.0);
        CHECK(ssq.weight(t) == Catch::Approx(1.0 - ssq.alpha_bar[t]).margin(1e-15));
        CHECK(soa.weight(t) == Catch::Approx(soa.sigma(t) / soa.alpha(t)).margin(1e-15));
    }
}

TEST_CASE("prediction-space conversions invert each other") {
    std::mt19937_64 rng(21);
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t t = 1 + std::size_t(rng() % 998);
        Image x0 = random_image(4, 3, 3, rng, 0.0, 1.0);
        Image eps = random_image(4, 3, 3, rng);
        double a = s.alpha(t), sg = s.sigma(t);
        Image x_t = x0;
        for (std::size_t i = 0; i < x_t.data.size(); ++i)
            x_t.data[i] = a * x0.data[i] + sg * eps.data[i];

        // recover the clean sample from the true noise
        Image back = eps_to_x0(eps, x_t, t, s);
        for (std::size_t i = 0; i < back.data.size(); ++i)
            CHECK(std::abs(back.data[i] - x0.data[i]) < 1e-9);

        // v = alpha*eps - sigma*x0 is the prediction that maps back to eps
        Image v = eps;
        for (std::size_t i = 0; i < v.data.size(); ++i)
            v.data[i] = a * eps.data[i] - sg * x0.data[i];
        Image eps2 = v_to_eps(v, x_t, t, s);
        for (std::size_t i = 0; i < eps2.data.size(); ++i)
            CHECK(std::abs(eps2.data[i] - eps.data[i]) < 1e-9);
    }
}

TEST_CASE("plain score residual") {
    std::mt19937_64 rng(22);
    Image a = random_image(3, 3, 3, rng), b = random_image(3, 3, 3, rng);
    Image zero = sds_delta(a, a, 0.7);
    CHECK(max_abs(zero) == 0.0);
    Image d = sds_delta(a, b, 2.0);
    for (std::size_t i = 0; i < d.data.size(); ++i)
        CHECK(d.data[i] == Catch::Approx(2.0 * (a.data[i] - b.data[i])).margin(1e-15));
    Image bad(2, 2, 3);
    CHECK_THROWS_AS(sds_delta(a, bad, 1.0), ParamError);
}

TEST_CASE("guided residual decomposition is exact over many random tensors") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        Image cond = random_image(2, 2, 3, rng), uncond = random_image(2, 2, 3, rng),
              noise = random_image(2, 2, 3, rng);
        double tau = 7.5;
        CfgDecomposition d = decompose_cfg(cond, uncond, noise, tau);
        for (std::size_t i = 0; i < cond.data.size(); ++i) {
            // the standard guided form: (1+tau)*cond - tau*uncond - noise
            double expect = (1.0 + tau) * cond.data[i] - tau * uncond.data[i] - noise.data[i];
            CHECK(std::abs(d.delta.data[i] - expect) < 1e-12);
            CHECK(std::abs(d.delta.data[i] - (d.delta_g.data[i] + tau * d.delta_c.data[i])) < 1e-12);
            CHECK(std::abs(d.delta_g.data[i] - (cond.data[i] - noise.data[i])) < 1e-15);
            CHECK(std::abs(d.delta_c.data[i] - (cond.data[i] - uncond.data[i])) < 1e-15);
        }
    }
}

TEST_CASE("negative classifier score cancels the unconditional branch") {
    std::mt19937_64 rng(24);
    for (int rep = 0; rep < 1000; ++rep) {
        Image cond = random_image(2, 2, 3, rng), uncond = random_image(2, 2, 3, rng),
              neg = random_image(2, 2, 3, rng);
        NegativeClassifierScores s = negative_classifier_delta(cond, uncond, neg);
        for (std::size_t i = 0; i < cond.data.size(); ++i) {
            CHECK(std::abs(s.delta_nc.data[i] - (cond.data[i] - neg.data[i])) < 1e-12);
            CHECK(std::abs(s.delta_nc.data[i] - (s.delta_c.data[i] - s.delta_n.data[i])) < 1e-15);
        }
    }
}

TEST_CASE("negative term anneals away at small timesteps") {
    GuidanceConfig cfg;
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    std::mt19937_64 rng(25);
    Image dc = random_image(3, 2, 3, rng), dn = random_image(3, 2, 3, rng);

    SECTION("step shape") {
        Image lo = annealed_delta(dc, dn, 199, cfg, s);
        for (std::size_t i = 0; i < lo.data.size(); ++i)
            CHECK(lo.data[i] == Catch::Approx(cfg.tau1 * dc.data[i]).margin(1e-12));
        Image hi = annealed_delta(dc, dn, 200, cfg, s);
        for (std::size_t i = 0; i < hi.data.size(); ++i)
            CHECK(hi.data[i] ==
                  Catch::Approx(cfg.tau1 * dc.data[i] - cfg.tau2_max * dn.data[i]).margin(1e-12));
    }
    SECTION("linear ramp shape") {
        cfg.anneal_shape = AnnealShape::LinearRamp;
        CHECK(cfg.tau2(199) == 0.0);
        CHECK(cfg.tau2(300) == Catch::Approx(0.5 * cfg.tau2_max).margin(1e-12));
        CHECK(cfg.tau2(400) == cfg.tau2_max);
        CHECK(cfg.tau2(980) == cfg.tau2_max);
    }
    SECTION("tau2 is non-decreasing for both shapes") {
        for (AnnealShape shape : {AnnealShape::Step, AnnealShape::LinearRamp}) {
            cfg.anneal_shape = shape;
            double prev = -1.0;
            for (std::size_t t = 0; t < 1000; ++t) {
                double cur = cfg.tau2(t);
                CHECK(cur >= prev);
                CHECK(cur >= 0.0);
                CHECK(cur <= cfg.tau2_max);
                prev = cur;
            }
        }
    }
    SECTION("schedule weight multiplies the whole residual") {
        NoiseSchedule ssq = NoiseSchedule::scaled_linear(1000, 8.5e-4, 1.2e-2, WeightMode::SigmaSq);
        Image weighted = annealed_delta(dc, dn, 500, cfg, ssq);
        Image flat = annealed_delta(dc, dn, 500, cfg, s);
        double w = ssq.weight(500);
        for (std::size_t i = 0; i < weighted.data.size(); ++i)
            CHECK(weighted.data[i] == Catch::Approx(w * flat.data[i]).margin(1e-12));
    }
}

TEST_CASE("guidance config validation") {
    GuidanceConfig cfg;
    cfg.validate();
    SECTION("tau1") {
        cfg.tau1 = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ParamError);
    }
    SECTION("branch weights") {
        cfg.lambda_depth = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ParamError);
    }
    SECTION("timestep bounds") {
        cfg.t_min = 980;
        cfg.t_max = 980;
        CHECK_THROWS_AS(cfg.validate(), ParamError);
    }
}

TEST_CASE("point-mass denoiser recovers the injected noise exactly") {
    std::mt19937_64 rng(26);
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    Image target_rgb = random_image(5, 4, 3, rng, 0.0, 1.0);
    Image target_d = random_image(5, 4, 1, rng, 0.0, 1.0);
    DiracProvider provider(target_rgb, target_d);

    for (int rep = 0; rep < 20; ++rep) {
        std::size_t t = 20 + std::size_t(rng() % 900);
        double a = s.alpha(t), sg = s.sigma(t);
        Image eps = random_image(5, 4, 3, rng), eps_d = random_image(5, 4, 1, rng);
        ScoreRequest req;
        req.t = t;
        req.x_t = target_rgb;
        for (std::size_t i = 0; i < req.x_t.data.size(); ++i)
            req.x_t.data[i] = a * target_rgb.data[i] + sg * eps.data[i];
        req.d_t = target_d;
        for (std::size_t i = 0; i < req.d_t.data.size(); ++i)
            req.d_t.data[i] = a * target_d.data[i] + sg * eps_d.data[i];
        ScoreResponse resp = provider.score(req, s);
        resp.check_shapes(req);
        // conditional branch: exact noise, regardless of which noise was drawn
        for (std::size_t i = 0; i < eps.data.size(); ++i)
            CHECK(std::abs(resp.eps_cond_rgb.data[i] - eps.data[i]) < 1e-10);
        for (std::size_t i = 0; i < eps_d.data.size(); ++i)
            CHECK(std::abs(resp.eps_cond_depth.data[i] - eps_d.data[i]) < 1e-10);
        // unconditional branch points toward gray instead
        Image x0u = eps_to_x0(resp.eps_uncond_rgb, req.x_t, t, s);
        for (double v : x0u.data) CHECK(std::abs(v - 0.5) < 1e-10);
        // negative branch points toward the inverted target
        Image x0n = eps_to_x0(resp.eps_neg_rgb, req.x_t, t, s);
        for (std::size_t i = 0; i < x0n.data.size(); ++i)
            CHECK(std::abs(x0n.data[i] - (1.0 - target_rgb.data[i])) < 1e-10);
    }

    CHECK_THROWS_AS(DiracProvider(random_image(2, 2, 3, rng, 1.5, 2.0), target_d), ParamError);
}

TEST_CASE("distillation step vanishes when the target equals the render") {
    std::mt19937_64 rng(27);
    GaussianCloud cloud = oracle::random_cloud(40, rng);
    Camera cam = camera_from_spherical(2.0, 10.0, 30.0, 60.0, {}, 32, 32);
    RenderOutput out = render(cloud, cam, {});
    DiracProvider provider(out.rgb, out.depth);

    GuidanceConfig cfg;
    cfg.mode = GuidanceMode::Vanilla;  // residual is eps_pred - eps_noise
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    std::mt19937_64 step_rng(5);
    DualBranchResult r = dual_branch_step(cloud, cam, provider, s, cfg, step_rng);
    CHECK(r.adjoint_rgb_norm < 1e-8);
    CHECK(r.adjoint_depth_norm < 1e-8);
    double gmax = 0;
    for (double g : r.grads.positions) gmax = std::max(gmax, std::abs(g));
    for (double g : r.grads.f_dc) gmax = std::max(gmax, std::abs(g));
    CHECK(gmax < 1e-8);
}

TEST_CASE("distillation step is deterministic for a fixed seed") {
    std::mt19937_64 rng(28);
    GaussianCloud cloud = oracle::random_cloud(30, rng);
    GaussianCloud reference = oracle::random_cloud(30, rng);
    Camera cam = camera_from_spherical(2.0, 0.0, 45.0, 60.0, {}, 24, 24);
    ReconstructionProvider provider(reference, {});
    GuidanceConfig cfg;
    NoiseSchedule s = NoiseSchedule::scaled_linear();

    std::mt19937_64 r1(99), r2(99);
    DualBranchResult a = dual_branch_step(cloud, cam, provider, s, cfg, r1);
    DualBranchResult b = dual_branch_step(cloud, cam, provider, s, cfg, r2);
    CHECK(a.t == b.t);
    CHECK(a.grads.positions == b.grads.positions);
    CHECK(a.grads.f_dc == b.grads.f_dc);
    CHECK(a.grads.opacity_logits == b.grads.opacity_logits);
}

TEST_CASE("zero branch weights zero the gradients") {
    std::mt19937_64 rng(29);
    GaussianCloud cloud = oracle::random_cloud(20, rng);
    GaussianCloud reference = oracle::random_cloud(20, rng);
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 16, 16);
    ReconstructionProvider provider(reference, {});
    GuidanceConfig cfg;
    cfg.lambda_rgb = 0.0;
    cfg.lambda_depth = 0.0;
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    std::mt19937_64 step_rng(7);
    DualBranchResult r = dual_branch_step(cloud, cam, provider, s, cfg, step_rng);
    for (double g : r.grads.positions) CHECK(g == 0.0);
    for (double g : r.grads.f_dc) CHECK(g == 0.0);
    // the adjoint norms report the un-weighted residuals and stay nonzero
    CHECK(r.adjoint_rgb_norm > 0.0);
}

TEST_CASE("timestep sampling respects the configured bounds") {
    std::mt19937_64 rng(30);
    GaussianCloud cloud = oracle::random_cloud(5, rng);
    GaussianCloud reference = oracle::random_cloud(5, rng);
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 8, 8);
    ReconstructionProvider provider(reference, {});
    GuidanceConfig cfg;
    cfg.t_min = 100;
    cfg.t_max = 110;
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    std::mt19937_64 step_rng(8);
    for (int rep = 0; rep < 30; ++rep) {
        DualBranchResult r = dual_branch_step(cloud, cam, provider, s, cfg, step_rng);
        CHECK(r.t >= 100);
        CHECK(r.t < 110);
    }
}

TEST_CASE("malformed provider responses are rejected") {
    std::mt19937_64 rng(31);
    GaussianCloud cloud = oracle::random_cloud(5, rng);
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 8, 8);
    BadShapeProvider provider;
    GuidanceConfig cfg;
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    std::mt19937_64 step_rng(9);
    CHECK_THROWS_WITH(dual_branch_step(cloud, cam, provider, s, cfg, step_rng),
                      Catch::Matchers::ContainsSubstring("eps_uncond_rgb"));
}

TEST_CASE("reconstruction provider requires a view") {
    GaussianCloud reference;
    reference.resize(1);
    reference.rotations[0] = 1.0;
    ReconstructionProvider provider(reference, {});
    ScoreRequest req;
    req.x_t = Image(4, 4, 3);
    req.d_t = Image(4, 4, 1);
    req.t = 100;
    NoiseSchedule s = NoiseSchedule::scaled_linear();
    CHECK_THROWS_AS(provider.score(req, s), ProviderError);
}
