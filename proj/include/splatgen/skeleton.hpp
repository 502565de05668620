#pragma once

#include <array>
#include <cmath>

#include "splatgen/body.hpp"
#include "splatgen/image.hpp"

namespace splatgen {

enum class ViewClass { Frontal, RightSide, LeftSide, Back };

/// View class from azimuth: frontal |az| <= 60, right-side (60, 120],
/// left-side [-120, -60), back |az| > 120.
inline ViewClass view_class(double azimuth) {
    double az = std::fmod(azimuth, 360.0);
    if (az > 180.0) az -= 360.0;
    if (az <= -180.0) az += 360.0;
    if (std::abs(az) <= 60.0) return ViewClass::Frontal;
    if (az > 60.0 && az <= 120.0) return ViewClass::RightSide;
    if (az < -60.0 && az >= -120.0) return ViewClass::LeftSide;
    return ViewClass::Back;
}

/// Keypoint visibility under the view-dependent occlusion rules.
/// COCO order: nose, l/r eye, l/r ear, then body joints.
inline std::array<bool, 17> visible_keypoints(ViewClass vc) {
    std::array<bool, 17> vis;
    vis.fill(true);
    switch (vc) {
        case ViewClass::Frontal:
            break;
        case ViewClass::RightSide:
            vis[1] = false;  // left eye
            vis[3] = false;  // left ear
            break;
        case ViewClass::LeftSide:
            vis[2] = false;  // right eye
            vis[4] = false;  // right ear
            break;
        case ViewClass::Back:
            for (int i = 0; i < 5; ++i) vis[std::size_t(i)] = false;  // all face keypoints
            break;
    }
    return vis;
}

/// Disc colors per COCO keypoint (components drawn from {0, 85, 170, 255}).
inline const std::array<std::array<int, 3>, 17>& keypoint_colors() {
    static const std::array<std::array<int, 3>, 17> colors = {{
        {255, 0, 0},    {255, 85, 0},   {255, 170, 0},  {255, 255, 0},  {170, 255, 0},
        {85, 255, 0},   {0, 255, 0},    {0, 255, 85},   {0, 255, 170},  {0, 255, 255},
        {0, 170, 255},  {0, 85, 255},   {0, 0, 255},    {85, 0, 255},   {170, 0, 255},
        {255, 0, 170},  {255, 0, 85},
    }};
    return colors;
}

/// Limb segments (pairs of COCO keypoint indices), OpenPose-style skeleton.
inline const std::array<std::array<int, 2>, 16>& skeleton_limbs() {
    static const std::array<std::array<int, 2>, 16> limbs = {{
        {0, 1}, {0, 2}, {1, 3}, {2, 4},          // face
        {5, 6},                                  // shoulders
        {5, 7}, {7, 9}, {6, 8}, {8, 10},         // arms
        {5, 11}, {6, 12}, {11, 12},              // trunk
        {11, 13}, {13, 15}, {12, 14}, {14, 16},  // legs
    }};
    return limbs;
}

namespace detail {

// every keypoint color has a 255 component, so halved limb colors never collide
inline std::array<int, 3> limb_color(int endpoint_keypoint) {
    auto c = keypoint_colors()[std::size_t(endpoint_keypoint)];
    return {c[0] / 2, c[1] / 2, c[2] / 2};
}

inline void draw_disc(Image& img, const Vec2& center, double radius, const std::array<int, 3>& color) {
    int x0 = std::max(0, int(std::floor(center.x - radius)));
    int x1 = std::min(img.width - 1, int(std::ceil(center.x + radius)));
    int y0 = std::max(0, int(std::floor(center.y - radius)));
    int y1 = std::min(img.height - 1, int(std::ceil(center.y + radius)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x - center.x, dy = y - center.y;
            if (dx * dx + dy * dy > radius * radius) continue;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[std::size_t(c)] / 255.0;
        }
}

inline void draw_segment(Image& img, const Vec2& a, const Vec2& b, double half_width,
                         const std::array<int, 3>& color) {
    double x0d = std::min(a.x, b.x) - half_width, x1d = std::max(a.x, b.x) + half_width;
    double y0d = std::min(a.y, b.y) - half_width, y1d = std::max(a.y, b.y) + half_width;
    int x0 = std::max(0, int(std::floor(x0d))), x1 = std::min(img.width - 1, int(std::ceil(x1d)));
    int y0 = std::max(0, int(std::floor(y0d))), y1 = std::min(img.height - 1, int(std::ceil(y1d)));
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            Vec2 p{double(x), double(y)};
            double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
            Vec2 closest = a + ab * t;
            Vec2 d = p - closest;
            if (d.dot(d) > half_width * half_width) continue;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = color[std::size_t(c)] / 255.0;
        }
}

}  // namespace detail

/// OpenPose-style conditioning map: colored limb segments and keypoint discs
/// on a black canvas, with view-dependent keypoint culling.
inline Image render_skeleton(const BodyModel& model, const PoseParams& params, const Camera& cam) {
    Image img(cam.width, cam.height, 3, 0.0);
    auto kps = keypoint_positions(model, params);
    auto vis = visible_keypoints(view_class(cam.azimuth));

    std::array<Vec2, 17> px;
    std::array<bool, 17> on_screen;
    for (std::size_t i = 0; i < 17; ++i) {
        Projected pr = project_point(cam, kps[i]);
        px[i] = pr.pixel;
        on_screen[i] = pr.renderable;
    }
    // thickness 4 px at 512, scaled with resolution
    double unit = std::max(1.0, 4.0 * cam.height / 512.0);
    for (const auto& limb : skeleton_limbs()) {
        int a = limb[0], b = limb[1];
        if (!vis[std::size_t(a)] || !vis[std::size_t(b)]) continue;
        if (!on_screen[std::size_t(a)] || !on_screen[std::size_t(b)]) continue;
        detail::draw_segment(img, px[std::size_t(a)], px[std::size_t(b)], unit * 0.5,
                             detail::limb_color(b));
    }
    for (std::size_t i = 0; i < 17; ++i) {
        if (!vis[i] || !on_screen[i]) continue;
        detail::draw_disc(img, px[i], unit, keypoint_colors()[i]);
    }
    return img;
}

}  // namespace splatgen
