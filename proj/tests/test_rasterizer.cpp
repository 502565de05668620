#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "oracles.hpp"
#include "splatgen/rasterizer.hpp"

using namespace splatgen;

namespace {

GaussianCloud single_gaussian(const Vec3& pos, double log_scale, double opacity_logit,
                              const Vec3& f_dc) {
    GaussianCloud cloud;
    cloud.resize(1);
    cloud.set_position(0, pos);
    for (int c = 0; c < 3; ++c) {
        cloud.log_scales[std::size_t(c)] = log_scale;
        cloud.f_dc[std::size_t(c)] = f_dc[c];
    }
    cloud.rotations[0] = 1.0;
    cloud.opacity_logits[0] = opacity_logit;
    return cloud;
}

GaussianCloud shuffled(const GaussianCloud& cloud, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return cloud.select(idx);
}

}  // namespace

TEST_CASE("near-transparent scene renders the background") {
    std::mt19937_64 rng(3);
    GaussianCloud cloud = oracle::random_cloud(20, rng);
    for (auto& l : cloud.opacity_logits) l = -40.0;  // activated opacity ~ 4e-18
    Camera cam = camera_from_spherical(2.0, 5.0, 20.0, 60.0, {}, 48, 48);
    Vec3 bg{0.2, 0.4, 0.6};
    RenderOutput out = render(cloud, cam, bg);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            CHECK(out.rgb.at(x, y, 0) == Catch::Approx(bg.x).margin(1e-12));
            CHECK(out.rgb.at(x, y, 1) == Catch::Approx(bg.y).margin(1e-12));
            CHECK(out.rgb.at(x, y, 2) == Catch::Approx(bg.z).margin(1e-12));
            CHECK(out.alpha.at(x, y, 0) == 0.0);
            CHECK(out.depth.at(x, y, 0) == 1.0);  // background depth = far value
        }
}

TEST_CASE("single-Gaussian center pixel blend") {
    // pick an odd image size so a pixel sits exactly at the center
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 65, 65);
    double a = 0.7;
    Vec3 fdc{0.9, -0.4, 0.2};
    GaussianCloud cloud = single_gaussian({0, 0, 0}, std::log(0.05), logit(a), fdc);
    Vec3 bg{0.1, 0.1, 0.1};
    RenderOutput out = render(cloud, cam, bg);

    int cx = 32, cy = 32;
    double sigma = a;  // G = 1 exactly at the projected center
    Vec3 color = cloud.color(0);
    CHECK(out.rgb.at(cx, cy, 0) == Catch::Approx(color.x * sigma + bg.x * (1 - sigma)).margin(1e-9));
    CHECK(out.rgb.at(cx, cy, 1) == Catch::Approx(color.y * sigma + bg.y * (1 - sigma)).margin(1e-9));
    CHECK(out.rgb.at(cx, cy, 2) == Catch::Approx(color.z * sigma + bg.z * (1 - sigma)).margin(1e-9));
    CHECK(out.alpha.at(cx, cy, 0) == Catch::Approx(sigma).margin(1e-9));
    CHECK(out.depth_raw.at(cx, cy, 0) == Catch::Approx(2.0 * sigma).margin(1e-9));
}

TEST_CASE("two-Gaussian front-to-back blend matches hand evaluation") {
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 65, 65);
    GaussianCloud front = single_gaussian({0, 0, 0.3}, std::log(0.05), logit(0.6), {0.8, 0, 0});
    GaussianCloud back = single_gaussian({0, 0, -0.3}, std::log(0.05), logit(0.5), {0, 0.8, 0});
    GaussianCloud cloud = front;
    cloud.append(back);
    Vec3 bg{0, 0, 0};
    RenderOutput out = render(cloud, cam, bg);

    int cx = 32, cy = 32;
    double s1 = 0.6, s2 = 0.5;  // both means project to the center pixel
    Vec3 c1 = front.color(0), c2 = back.color(0);
    Vec3 want = c1 * s1 + c2 * (s2 * (1 - s1));
    CHECK(out.rgb.at(cx, cy, 0) == Catch::Approx(want.x).margin(1e-9));
    CHECK(out.rgb.at(cx, cy, 1) == Catch::Approx(want.y).margin(1e-9));
    CHECK(out.alpha.at(cx, cy, 0) == Catch::Approx(1 - (1 - s1) * (1 - s2)).margin(1e-9));
    double draw = 1.7 * s1 + 2.3 * s2 * (1 - s1);
    CHECK(out.depth_raw.at(cx, cy, 0) == Catch::Approx(draw).margin(1e-9));

    SECTION("storage order does not matter, bit-exactly") {
        GaussianCloud swapped = back;
        swapped.append(front);
        RenderOutput out2 = render(swapped, cam, bg);
        CHECK(out2.rgb.data == out.rgb.data);
        CHECK(out2.depth.data == out.depth.data);
        CHECK(out2.alpha.data == out.alpha.data);
    }
}

TEST_CASE("tiled renderer matches the brute-force oracle") {
    std::mt19937_64 rng(17);
    for (int scene = 0; scene < 20; ++scene) {
        std::uniform_int_distribution<std::size_t> nd(1, 1000);
        std::size_t n = nd(rng);
        GaussianCloud cloud = oracle::random_cloud(n, rng);
        Camera cam = camera_from_spherical(1.5 + 0.05 * scene, -20.0 + 2 * scene, 18.0 * scene,
                                           50.0, {}, 64, 64);
        Vec3 bg{0.1 * (scene % 3), 0.2, 0.05 * (scene % 5)};
        RenderOutput tiled = render(cloud, cam, bg);
        RenderOutput brute = oracle::brute_force_render(cloud, cam, bg);
        CHECK(oracle::max_abs_diff(tiled.rgb, brute.rgb) < 1e-6);
        CHECK(oracle::max_abs_diff(tiled.depth_raw, brute.depth_raw) < 1e-6);
        CHECK(oracle::max_abs_diff(tiled.depth, brute.depth) < 1e-6);
        CHECK(oracle::max_abs_diff(tiled.alpha, brute.alpha) < 1e-6);
    }
}

TEST_CASE("permutation invariance is bit-exact") {
    std::mt19937_64 rng(29);
    GaussianCloud cloud = oracle::random_cloud(300, rng);
    Camera cam = camera_from_spherical(2.0, 10.0, -45.0, 60.0, {}, 64, 64);
    RenderOutput a = render(cloud, cam, {});
    for (int trial = 0; trial < 3; ++trial) {
        RenderOutput b = render(shuffled(cloud, rng), cam, {});
        CHECK(a.rgb.data == b.rgb.data);
        CHECK(a.depth.data == b.depth.data);
        CHECK(a.alpha.data == b.alpha.data);
    }
}

TEST_CASE("zero-opacity Gaussians do not change the image") {
    std::mt19937_64 rng(31);
    GaussianCloud cloud = oracle::random_cloud(100, rng);
    Camera cam = camera_from_spherical(2.0, 0.0, 30.0, 60.0, {}, 64, 64);
    RenderOutput a = render(cloud, cam, {0.3, 0.3, 0.3});

    GaussianCloud extra = oracle::random_cloud(20, rng);
    for (auto& l : extra.opacity_logits) l = -17.0;  // activated < 1e-7
    GaussianCloud both = cloud;
    both.append(extra);
    RenderOutput b = render(both, cam, {0.3, 0.3, 0.3});
    CHECK(oracle::max_abs_diff(a.rgb, b.rgb) < 1e-6);
    CHECK(oracle::max_abs_diff(a.depth, b.depth) < 1e-6);
    CHECK(oracle::max_abs_diff(a.alpha, b.alpha) < 1e-6);
}

TEST_CASE("transmittance and alpha invariants") {
    std::mt19937_64 rng(37);
    GaussianCloud cloud = oracle::random_cloud(200, rng);
    Camera cam = camera_from_spherical(1.8, 12.0, 77.0, 60.0, {}, 64, 64);
    RenderOutput out = render(cloud, cam, {});
    for (std::size_t pix = 0; pix < out.final_T.size(); ++pix) {
        CHECK(out.final_T[pix] >= 0.0);
        CHECK(out.final_T[pix] <= 1.0);
        CHECK(out.alpha.data[pix] == Catch::Approx(1.0 - out.final_T[pix]).margin(1e-12));
    }
    for (double v : out.depth.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("normalized depth is invariant to color changes") {
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 64, 64);
    GaussianCloud a = single_gaussian({0, 0, 0}, std::log(0.15), 8.0, {0.9, 0.9, 0.9});
    GaussianCloud b = a;
    for (auto& v : b.f_dc) v = -0.7;
    RenderOutput ra = render(a, cam, {});
    RenderOutput rb = render(b, cam, {});
    CHECK(ra.depth.data == rb.depth.data);
}

TEST_CASE("depth normalization modes") {
    Camera cam = camera_from_spherical(2.0, 0.0, 0.0, 60.0, {}, 64, 64);
    GaussianCloud near_g = single_gaussian({0.2, 0, 0.4}, std::log(0.08), 9.0, {0.5, 0, 0});
    GaussianCloud far_g = single_gaussian({-0.2, 0, -0.4}, std::log(0.08), 9.0, {0, 0.5, 0});
    GaussianCloud cloud = near_g;
    cloud.append(far_g);

    SECTION("minmax maps the closest foreground pixel to 0 and farthest to 1") {
        RenderOutput out = render(cloud, cam, {});
        REQUIRE(out.has_foreground);
        double lo = 2.0, hi = -1.0;
        for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
            if (!out.foreground[pix]) continue;
            lo = std::min(lo, out.depth.data[pix]);
            hi = std::max(hi, out.depth.data[pix]);
        }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
    SECTION("nearfar uses the camera clip range") {
        RenderOutput out = render(cloud, cam, {}, DepthNorm::NearFar);
        for (std::size_t pix = 0; pix < out.foreground.size(); ++pix) {
            if (!out.foreground[pix]) continue;
            double want = (out.depth_raw.data[pix] - cam.near) / (cam.far - cam.near);
            CHECK(out.depth.data[pix] == Catch::Approx(std::clamp(want, 0.0, 1.0)).margin(1e-12));
        }
    }
    SECTION("single flat depth degenerates to 0.5") {
        RenderOutput out = render(single_gaussian({0, 0, 0}, std::log(4.0), 30.0, {}), cam, {});
        // a huge fully-opaque Gaussian: foreground pixels exist, depths nearly equal;
        // exact equality only when one pixel dominates, so just check the range holds
        for (std::size_t pix = 0; pix < out.foreground.size(); ++pix)
            if (out.foreground[pix]) {
                CHECK(out.depth.data[pix] >= 0.0);
                CHECK(out.depth.data[pix] <= 1.0);
            }
    }
}

TEST_CASE("rendering is deterministic across thread counts") {
    std::mt19937_64 rng(41);
    GaussianCloud cloud = oracle::random_cloud(500, rng);
    Camera cam = camera_from_spherical(2.0, -8.0, 140.0, 60.0, {}, 96, 96);

    int saved = thread_limit();
    thread_limit() = 1;
    RenderOutput a = render(cloud, cam, {0.2, 0.2, 0.2});
    thread_limit() = 8;
    RenderOutput b = render(cloud, cam, {0.2, 0.2, 0.2});
    thread_limit() = saved;
    CHECK(a.rgb.data == b.rgb.data);
    CHECK(a.depth.data == b.depth.data);
    CHECK(a.alpha.data == b.alpha.data);
}

TEST_CASE("concatenating clouds renders the union") {
    std::mt19937_64 rng(43);
    GaussianCloud a = oracle::random_cloud(60, rng);
    GaussianCloud b = oracle::random_cloud(60, rng);
    GaussianCloud ab = a;
    ab.append(b);
    GaussianCloud ba = b;
    ba.append(a);
    Camera cam = camera_from_spherical(2.0, 0.0, 60.0, 60.0, {}, 64, 64);
    RenderOutput r1 = render(ab, cam, {});
    RenderOutput r2 = render(ba, cam, {});
    CHECK(r1.rgb.data == r2.rgb.data);
}
