#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splatgen/config.hpp"
#include "splatgen/remote.hpp"

namespace sg = splatgen;

namespace {

struct CameraFlags {
    double distance = 2.0, elevation = 0.0, azimuth = 0.0, fovy = 60.0;
    int size = 512;
    std::vector<double> background{1.0, 1.0, 1.0};  // white previews

    void attach(CLI::App* app) {
        app->add_option("--distance", distance, "camera distance");
        app->add_option("--elevation", elevation, "elevation in degrees");
        app->add_option("--azimuth", azimuth, "azimuth in degrees, 0 = frontal");
        app->add_option("--fovy", fovy, "vertical field of view in degrees");
        app->add_option("--size", size, "square image size in pixels");
        app->add_option("--background", background, "background color r g b")->expected(3);
    }
    sg::Camera camera(const sg::Vec3& target = {}) const {
        return sg::camera_from_spherical(distance, elevation, azimuth, fovy, target, size, size);
    }
    sg::Vec3 bg() const { return {background[0], background[1], background[2]}; }
};

std::string strip_ext(const std::string& path) {
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void write_render_set(const sg::RenderOutput& out, const std::string& stem) {
    sg::write_png_rgb(out.rgb, stem + "_rgb.png");
    sg::write_png_gray16(out.depth, stem + "_depth.png");
    sg::write_png_gray16(out.alpha, stem + "_alpha.png");
}

void turntable_strip(const sg::GaussianCloud& cloud, const sg::Vec3& target, double distance,
                     int size, const sg::Vec3& background, const std::string& path) {
    const int n = 8;
    sg::Image strip(size * n, size, 3);
    for (int k = 0; k < n; ++k) {
        sg::Camera cam =
            sg::camera_from_spherical(distance, 10.0, 360.0 * k / n, 60.0, target, size, size);
        sg::RenderOutput out = sg::render(cloud, cam, background);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < 3; ++c)
                    strip.at(k * size + x, y, c) = out.rgb.at(x, y, c);
    }
    sg::write_png_rgb(strip, path);
}

sg::Vec3 cloud_center(const sg::GaussianCloud& cloud) {
    if (cloud.size() == 0) return {};
    sg::Vec3 lo = cloud.position(0), hi = lo;
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        sg::Vec3 p = cloud.position(i);
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    return (lo + hi) * 0.5;
}

double psnr(const sg::Image& a, const sg::Image& b) {
    double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= double(a.data.size());
    return mse <= 0 ? 99.0 : 10.0 * std::log10(1.0 / mse);
}

int run(int argc, char** argv) {
    CLI::App app{"3D Gaussian splat generator driven by score distillation"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (default: SPLATGEN_THREADS or all cores)");

    // --- toybody ---------------------------------------------------------
    auto* c_toy = app.add_subcommand("toybody", "write the built-in capsule body model");
    std::string toy_out = "toy_body.json", toy_obj;
    c_toy->add_option("--out", toy_out, "output body container path");
    c_toy->add_option("--obj", toy_obj, "also export the rest-pose mesh as OBJ");

    // --- init ------------------------------------------------------------
    auto* c_init = app.add_subcommand("init", "sample a Gaussian cloud on the body surface");
    std::string init_body, init_out = "init.ply";
    std::size_t init_count = 100000;
    std::uint64_t init_seed = 0;
    c_init->add_option("--body", init_body, "body model container")->required();
    c_init->add_option("--count", init_count, "number of Gaussians");
    c_init->add_option("--out", init_out, "output PLY path");
    c_init->add_option("--seed", init_seed, "sampling seed");

    // --- render ----------------------------------------------------------
    auto* c_render = app.add_subcommand("render", "render a Gaussian cloud to rgb/depth/alpha PNGs");
    std::string render_cloud, render_out = "render";
    std::string render_depth_norm = "minmax";
    CameraFlags render_cam;
    c_render->add_option("--cloud", render_cloud, "input PLY")->required();
    c_render->add_option("--out", render_out, "output stem (writes <stem>_{rgb,depth,alpha}.png)");
    c_render->add_option("--depth-norm", render_depth_norm, "minmax | nearfar")
        ->check(CLI::IsMember({"minmax", "nearfar"}));
    render_cam.attach(c_render);

    // --- skeleton --------------------------------------------------------
    auto* c_skel = app.add_subcommand("skeleton", "render the view-culled keypoint/limb pose map");
    std::string skel_body, skel_out = "skeleton.png";
    CameraFlags skel_cam;
    c_skel->add_option("--body", skel_body, "body model container")->required();
    c_skel->add_option("--out", skel_out, "output PNG");
    skel_cam.attach(c_skel);

    // --- optimize --------------------------------------------------------
    auto* c_opt = app.add_subcommand("optimize", "run the score-distillation training loop");
    std::string opt_config, opt_resume;
    bool opt_dry = false;
    c_opt->add_option("config", opt_config, "run config JSON")->required();
    c_opt->add_flag("--dry-run", opt_dry, "validate config, print resolved defaults, exit");
    c_opt->add_option("--resume", opt_resume, "checkpoint stem to resume from");

    // --- prune -----------------------------------------------------------
    auto* c_prune = app.add_subcommand("prune", "remove Gaussians above a scale threshold");
    std::string prune_cloud, prune_out = "pruned.ply";
    double prune_threshold = 0.008;
    c_prune->add_option("--cloud", prune_cloud, "input PLY")->required();
    c_prune->add_option("--scale-threshold", prune_threshold, "max activated scale to keep");
    c_prune->add_option("--out", prune_out, "output PLY");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems share the parameter-error code
    }
    if (threads > 0) sg::thread_limit() = threads;

    if (*c_toy) {
        sg::BodyModel body = sg::make_toy_body();
        sg::save_body(body, toy_out);
        if (!toy_obj.empty()) sg::export_obj(body, sg::rest_pose(body), toy_obj);
        std::cout << "wrote " << toy_out << " (" << body.template_verts.size() << " vertices, "
                  << body.parent.size() << " joints)\n";
    } else if (*c_init) {
        if (init_count == 0) throw sg::ParamError("--count must be positive");
        sg::BodyModel body = sg::load_body(init_body);
        std::mt19937_64 rng(init_seed);
        sg::GaussianCloud cloud = sg::init_cloud(body, sg::rest_pose(body), init_count, rng);
        sg::write_ply(cloud, init_out);
        // frontal silhouette sanity image next to the cloud
        sg::Camera cam = sg::camera_from_spherical(2.0, 0.0, 0.0, 60.0, cloud_center(cloud), 256, 256);
        sg::RenderOutput out = sg::render(cloud, cam, {1, 1, 1});
        sg::write_png_gray16(out.alpha, strip_ext(init_out) + "_silhouette.png");
        std::cout << "wrote " << init_out << " (" << cloud.size() << " Gaussians)\n";
    } else if (*c_render) {
        sg::GaussianCloud cloud = sg::read_ply(render_cloud);
        sg::Camera cam = render_cam.camera(cloud_center(cloud));
        sg::DepthNorm dn =
            render_depth_norm == "nearfar" ? sg::DepthNorm::NearFar : sg::DepthNorm::MinMax;
        write_render_set(sg::render(cloud, cam, render_cam.bg(), dn), render_out);
        std::cout << "wrote " << render_out << "_{rgb,depth,alpha}.png\n";
    } else if (*c_skel) {
        sg::BodyModel body = sg::load_body(skel_body);
        sg::PoseParams pose = sg::rest_pose(body);
        // the pose map lives in the normalized body frame; center the camera there
        sg::BodyFrame frame = sg::body_frame(body, pose);
        sg::SkinResult posed = sg::skin(body, pose);
        sg::Vec3 lo{1e30, 1e30, 1e30}, hi = lo * -1.0;
        for (const auto& p : posed.vertices) {
            sg::Vec3 q = frame.apply(p);
            lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
            hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
        }
        sg::Camera cam = skel_cam.camera((lo + hi) * 0.5);
        sg::write_png_rgb(sg::render_skeleton(body, pose, cam), skel_out);
        std::cout << "wrote " << skel_out << "\n";
    } else if (*c_opt) {
        sg::RunConfig rc = sg::load_run_config(opt_config);
        if (opt_dry) {
            std::cout << sg::run_config_to_json(rc).dump(2) << "\n";
            return 0;
        }
        sg::BodyModel body = sg::load_body(rc.body_path);
        std::unique_ptr<sg::ScoreProvider> provider;
        sg::GaussianCloud reference;
        if (rc.provider == sg::ProviderKind::Analytic) {
            reference = sg::read_ply(rc.reference_path);
            provider = std::make_unique<sg::ReconstructionProvider>(reference, rc.train.background);
        } else {
            // split http://host:port
            std::string ep = rc.endpoint;
            auto scheme = ep.find("://");
            if (scheme != std::string::npos) ep = ep.substr(scheme + 3);
            auto colon = ep.find(':');
            if (colon == std::string::npos)
                throw sg::ParamError("endpoint must look like host:port");
            provider = std::make_unique<sg::RemoteProvider>(ep.substr(0, colon),
                                                            std::stoi(ep.substr(colon + 1)));
        }
        std::filesystem::create_directories(rc.train.out_dir);
        std::ofstream(rc.train.out_dir + "/config.json") << sg::run_config_to_json(rc).dump(2) << "\n";
        sg::TrainResult result = sg::train(rc.train, body, *provider, opt_resume);
        sg::write_ply(result.cloud, rc.train.out_dir + "/final.ply");
        int strip_size = std::min(rc.train.resolution, 256);
        turntable_strip(result.cloud, cloud_center(result.cloud),
                        0.5 * (rc.train.distance.lo + rc.train.distance.hi), strip_size,
                        rc.train.background, rc.train.out_dir + "/turntable.png");
        if (rc.provider == sg::ProviderKind::Analytic) {
            // held-out view: an azimuth no training camera is pinned to
            sg::Camera held = sg::camera_from_spherical(
                0.5 * (rc.train.distance.lo + rc.train.distance.hi), 12.0, 37.0, 55.0,
                cloud_center(reference), rc.train.resolution, rc.train.resolution);
            sg::RenderOutput got = sg::render(result.cloud, held, rc.train.background);
            sg::RenderOutput want = sg::render(reference, held, rc.train.background);
            double p = psnr(got.rgb, want.rgb);
            std::ofstream metrics(result.metrics_path, std::ios::app);
            metrics << "{\"final_psnr\":" << p << "}\n";
            std::cout << "final_psnr " << p << "\n";
        }
        std::cout << "wrote " << rc.train.out_dir << "\n";
    } else if (*c_prune) {
        sg::GaussianCloud cloud = sg::read_ply(prune_cloud);
        sg::GaussianCloud kept = sg::prune_by_size(cloud, prune_threshold);
        sg::write_ply(kept, prune_out);
        std::cout << "kept " << kept.size() << " of " << cloud.size() << " Gaussians\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sg::ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sg::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sg::CollapseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const sg::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
