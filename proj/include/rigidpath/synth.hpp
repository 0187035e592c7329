#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rigidpath/geometry.hpp"
#include "rigidpath/io.hpp"
#include "rigidpath/parallel.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath::synth {

// World-to-camera (or body-to-world) rigid transform: x' = R x + t.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct PointCloudSpec {
    int point_count = 0;
    Eigen::Vector3d box_min = Eigen::Vector3d::Zero(); // sampling volume, local coords
    Eigen::Vector3d box_max = Eigen::Vector3d::Zero();
    double turnover = 0.0;       // per-frame probability a live track is dropped
    double birth_stagger = 0.0;  // fraction of points whose track starts at a random frame
    Rgb base_color{0.5, 0.5, 0.5};
    double color_jitter = 0.08;
    double nonrigid_drift = 0.0; // world units/frame of per-point random walk; 0 = rigid
};

struct BodySpec {
    PointCloudSpec cloud;
    std::vector<Pose> world_from_body; // one pose per frame; repeat a pose to hold still
};

struct SceneSpec {
    int frame_width = 640;
    int frame_height = 480;
    int frame_count = 100;
    double focal = 500.0;
    double principal_x = 320.0;
    double principal_y = 240.0;
    std::vector<Pose> camera; // world-to-camera per frame
    PointCloudSpec background; // box in world coordinates
    std::vector<BodySpec> bodies;
    double noise_px = 0.0;      // tracking noise std dev
    double occlusion_radius = 5.0; // px; background hidden behind a nearer body point

    Eigen::Matrix3d intrinsics() const {
        Eigen::Matrix3d k;
        k << focal, 0, principal_x, 0, focal, principal_y, 0, 0, 1;
        return k;
    }
};

struct GroundTruth {
    std::vector<int> body_of_track; // aligned with the emitted trajectories; -1 = background
    double focal = 0;
    double principal_x = 0, principal_y = 0;
    std::vector<Pose> camera;
    std::vector<std::vector<Pose>> bodies; // world_from_body per frame
    std::vector<bool> body_is_rigid;

    bool is_background(std::size_t track) const { return body_of_track[track] < 0; }

    // camera_from_group composition at one frame (background group = -1).
    Pose group_pose(int body, int frame) const {
        const Pose& cam = camera[static_cast<std::size_t>(frame)];
        if (body < 0) return cam;
        const Pose& wb = bodies[static_cast<std::size_t>(body)][static_cast<std::size_t>(frame)];
        Pose p;
        p.rotation = cam.rotation * wb.rotation;
        p.translation = cam.rotation * wb.translation + cam.translation;
        return p;
    }

    // True F for a rigid group between frames j and k, same normalization as the
    // estimator output: F = K^-T [t]x R K^-1 of the relative pose.
    Eigen::Matrix3d true_fundamental(int body, int frame_j, int frame_k) const {
        const Pose pj = group_pose(body, frame_j);
        const Pose pk = group_pose(body, frame_k);
        const Eigen::Matrix3d r_rel = pk.rotation * pj.rotation.transpose();
        const Eigen::Vector3d t_rel = pk.translation - r_rel * pj.translation;
        Eigen::Matrix3d tx;
        tx << 0, -t_rel.z(), t_rel.y(), t_rel.z(), 0, -t_rel.x(), -t_rel.y(), t_rel.x(), 0;
        Eigen::Matrix3d k;
        k << focal, 0, principal_x, 0, focal, principal_y, 0, 0, 1;
        const Eigen::Matrix3d k_inv = k.inverse();
        Eigen::Matrix3d f = k_inv.transpose() * tx * r_rel * k_inv;
        rigidpath::detail::normalize_representation(f);
        return f;
    }
};

struct RenderResult {
    TrajectorySet set;
    GroundTruth truth;
    std::vector<std::string> warnings;
};

namespace detail {

struct ProjectedPoint {
    double x = 0, y = 0, depth = 0;
    bool in_view = false;
};

inline ProjectedPoint project(const SceneSpec& spec, const Pose& cam, const Eigen::Vector3d& world) {
    const Eigen::Vector3d c = cam.rotation * world + cam.translation;
    ProjectedPoint p;
    if (c.z() < 1e-3) return p;
    p.depth = c.z();
    p.x = spec.focal * c.x() / c.z() + spec.principal_x;
    p.y = spec.focal * c.y() / c.z() + spec.principal_y;
    p.in_view = p.x >= 0 && p.x <= spec.frame_width && p.y >= 0 && p.y <= spec.frame_height;
    return p;
}

// Per-frame hash grid over foreground projections, used for the z-test that
// terminates occluded background tracks.
class OcclusionGrid {
public:
    OcclusionGrid(double cell, int width, int height)
        : cell_(std::max(cell, 1.0)),
          cols_(static_cast<int>(width / cell_) + 2),
          rows_(static_cast<int>(height / cell_) + 2),
          buckets_(static_cast<std::size_t>(cols_ * rows_)) {}

    void insert(double x, double y, double depth) {
        const int c = clampi(static_cast<int>(x / cell_), 0, cols_ - 1);
        const int r = clampi(static_cast<int>(y / cell_), 0, rows_ - 1);
        buckets_[static_cast<std::size_t>(r * cols_ + c)].push_back({x, y, depth});
    }

    bool occludes(double x, double y, double depth, double radius) const {
        const int c0 = clampi(static_cast<int>((x - radius) / cell_), 0, cols_ - 1);
        const int c1 = clampi(static_cast<int>((x + radius) / cell_), 0, cols_ - 1);
        const int r0 = clampi(static_cast<int>((y - radius) / cell_), 0, rows_ - 1);
        const int r1 = clampi(static_cast<int>((y + radius) / cell_), 0, rows_ - 1);
        const double r2 = radius * radius;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                for (const Entry& e : buckets_[static_cast<std::size_t>(r * cols_ + c)]) {
                    const double dx = e.x - x, dy = e.y - y;
                    if (dx * dx + dy * dy < r2 && e.depth < depth) return true;
                }
        return false;
    }

private:
    struct Entry {
        double x, y, depth;
    };
    static int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

    double cell_;
    int cols_, rows_;
    std::vector<std::vector<Entry>> buckets_;
};

struct PointSchedule {
    int birth = 0;
    int death = 0; // exclusive
};

inline PointSchedule sample_schedule(std::mt19937_64& rng, const PointCloudSpec& cloud, int frames) {
    PointSchedule s;
    if (cloud.birth_stagger > 0 &&
        std::uniform_real_distribution<double>(0, 1)(rng) < cloud.birth_stagger)
        s.birth = std::uniform_int_distribution<int>(0, frames - 1)(rng);
    s.death = frames;
    if (cloud.turnover > 0) {
        std::geometric_distribution<int> life(cloud.turnover);
        s.death = std::min(frames, s.birth + 2 + life(rng));
    }
    return s;
}

inline Rgb sample_color(std::mt19937_64& rng, const PointCloudSpec& cloud) {
    std::uniform_real_distribution<double> jitter(-cloud.color_jitter, cloud.color_jitter);
    Rgb c;
    for (int i = 0; i < 3; ++i) c[i] = std::clamp(cloud.base_color[i] + jitter(rng), 0.0, 1.0);
    return c;
}

} // namespace detail

// Projects every scheduled point through the camera path, terminates tracks at
// occlusion / frame exit / turnover, applies tracking noise, and emits each
// point's first visible run of >= 2 frames as one trajectory.
inline RenderResult render_scene(const SceneSpec& spec, std::uint64_t seed) {
    if (spec.camera.size() != static_cast<std::size_t>(spec.frame_count))
        throw std::invalid_argument("scene spec needs one camera pose per frame");
    for (const BodySpec& b : spec.bodies)
        if (b.world_from_body.size() != static_cast<std::size_t>(spec.frame_count))
            throw std::invalid_argument("body needs one pose per frame");

    RenderResult out;
    out.set.meta = {spec.frame_width, spec.frame_height, spec.frame_count};
    out.set.has_colors = true;
    out.truth.focal = spec.focal;
    out.truth.principal_x = spec.principal_x;
    out.truth.principal_y = spec.principal_y;
    out.truth.camera = spec.camera;
    for (const BodySpec& b : spec.bodies) {
        out.truth.bodies.push_back(b.world_from_body);
        out.truth.body_is_rigid.push_back(b.cloud.nonrigid_drift == 0.0);
    }

    double camera_travel = 0.0;
    for (std::size_t f = 1; f < spec.camera.size(); ++f) {
        const Eigen::Vector3d c0 =
            -spec.camera[f - 1].rotation.transpose() * spec.camera[f - 1].translation;
        const Eigen::Vector3d c1 = -spec.camera[f].rotation.transpose() * spec.camera[f].translation;
        camera_travel += (c1 - c0).norm();
    }
    if (camera_travel < 1e-9 && spec.background.turnover > 0)
        out.warnings.push_back("static camera with feature turnover: background motion is unobservable");

    std::mt19937_64 rng(mix_seed(seed));
    const int frames = spec.frame_count;

    struct LivePoint {
        Eigen::Vector3d local;
        int body; // -1 background
        detail::PointSchedule schedule;
        Rgb color;
        std::uint64_t noise_seed;
    };
    std::vector<LivePoint> points;

    auto sample_cloud = [&](const PointCloudSpec& cloud, int body) {
        std::uniform_real_distribution<double> ux(cloud.box_min.x(), cloud.box_max.x());
        std::uniform_real_distribution<double> uy(cloud.box_min.y(), cloud.box_max.y());
        std::uniform_real_distribution<double> uz(cloud.box_min.z(), cloud.box_max.z());
        for (int i = 0; i < cloud.point_count; ++i) {
            LivePoint p;
            p.local = {ux(rng), uy(rng), uz(rng)};
            p.body = body;
            p.schedule = detail::sample_schedule(rng, cloud, frames);
            p.color = detail::sample_color(rng, cloud);
            p.noise_seed = rng();
            points.push_back(std::move(p));
        }
    };
    sample_cloud(spec.background, -1);
    for (std::size_t b = 0; b < spec.bodies.size(); ++b)
        sample_cloud(spec.bodies[b].cloud, static_cast<int>(b));

    // Foreground projections first: they drive the occlusion z-test below.
    std::vector<detail::OcclusionGrid> grids(
        static_cast<std::size_t>(frames),
        detail::OcclusionGrid(2.0 * spec.occlusion_radius, spec.frame_width, spec.frame_height));
    std::vector<std::vector<detail::ProjectedPoint>> proj(
        points.size(), std::vector<detail::ProjectedPoint>(static_cast<std::size_t>(frames)));

    for (std::size_t i = 0; i < points.size(); ++i) {
        const LivePoint& p = points[i];
        std::mt19937_64 drift_rng(p.noise_seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double drift = p.body >= 0 ? spec.bodies[static_cast<std::size_t>(p.body)].cloud.nonrigid_drift
                                         : spec.background.nonrigid_drift;
        Eigen::Vector3d local = p.local;
        for (int f = 0; f < frames; ++f) {
            if (drift > 0 && f > 0)
                local += drift * Eigen::Vector3d(gauss(drift_rng), gauss(drift_rng), gauss(drift_rng));
            Eigen::Vector3d world = local;
            if (p.body >= 0) {
                const Pose& wb = spec.bodies[static_cast<std::size_t>(p.body)]
                                     .world_from_body[static_cast<std::size_t>(f)];
                world = wb.rotation * local + wb.translation;
            }
            const auto pp = detail::project(spec, spec.camera[static_cast<std::size_t>(f)], world);
            proj[i][static_cast<std::size_t>(f)] = pp;
            if (p.body >= 0 && pp.depth > 0)
                grids[static_cast<std::size_t>(f)].insert(pp.x, pp.y, pp.depth);
        }
    }

    int next_id = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const LivePoint& p = points[i];
        std::mt19937_64 noise_rng(mix_seed(p.noise_seed));
        std::normal_distribution<double> gauss(0.0, spec.noise_px);

        Trajectory t;
        t.id = -1;
        bool done = false;
        for (int f = p.schedule.birth; f < frames && !done; ++f) {
            const auto& pp = proj[i][static_cast<std::size_t>(f)];
            bool visible = pp.in_view && f < p.schedule.death;
            if (visible && p.body < 0 &&
                grids[static_cast<std::size_t>(f)].occludes(pp.x, pp.y, pp.depth, spec.occlusion_radius))
                visible = false;
            if (visible) {
                if (t.id < 0) {
                    t.id = next_id;
                    t.start_frame = f;
                }
                Vec2 q{pp.x, pp.y};
                if (spec.noise_px > 0) {
                    q.x += gauss(noise_rng);
                    q.y += gauss(noise_rng);
                }
                q.x = std::clamp(q.x, 0.0, static_cast<double>(spec.frame_width));
                q.y = std::clamp(q.y, 0.0, static_cast<double>(spec.frame_height));
                t.points.push_back(q);
                t.colors.push_back(p.color);
            } else if (t.id >= 0) {
                done = true; // track ended; a re-found point would be a new feature
            }
        }
        if (t.id >= 0 && t.points.size() >= 2) {
            ++next_id;
            out.truth.body_of_track.push_back(p.body);
            out.set.trajs.push_back(std::move(t));
        }
    }
    return out;
}

struct Scenario {
    std::string name;
    SceneSpec spec;
    bool expected_fail = false;
    std::string notes;
};

namespace detail {

inline std::vector<Pose> linear_camera(int frames, const Eigen::Vector3d& start,
                                       const Eigen::Vector3d& velocity, double yaw_rate = 0.0) {
    std::vector<Pose> poses(static_cast<std::size_t>(frames));
    for (int f = 0; f < frames; ++f) {
        const double yaw = yaw_rate * f;
        Eigen::Matrix3d r = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
        const Eigen::Vector3d center = start + velocity * f;
        poses[static_cast<std::size_t>(f)].rotation = r;
        poses[static_cast<std::size_t>(f)].translation = -r * center;
    }
    return poses;
}

// Body path from per-frame velocities; zero velocity holds the pose still.
inline std::vector<Pose> body_path(int frames, const Eigen::Vector3d& start,
                                   const std::vector<std::pair<FrameWindow, Eigen::Vector3d>>& phases,
                                   double spin_rate = 0.0) {
    std::vector<Pose> poses(static_cast<std::size_t>(frames));
    Eigen::Vector3d pos = start;
    double spin = 0.0;
    for (int f = 0; f < frames; ++f) {
        Eigen::Vector3d vel = Eigen::Vector3d::Zero();
        bool moving = false;
        for (const auto& [win, v] : phases)
            if (win.contains(f)) {
                vel = v;
                moving = true;
            }
        if (f > 0) {
            pos += vel;
            if (moving) spin += spin_rate;
        }
        poses[static_cast<std::size_t>(f)].rotation =
            Eigen::AngleAxisd(spin, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        poses[static_cast<std::size_t>(f)].translation = pos;
    }
    return poses;
}

} // namespace detail

// Fixed named scenes used by the test and evaluation harness.
inline std::vector<Scenario> scenario_library() {
    std::vector<Scenario> lib;
    const int frames = 100;

    { // Foreground covers most of the image every frame; the background still
      // accumulates the majority of trajectories through feature turnover.
        Scenario sc;
        sc.name = "large-foreground";
        SceneSpec& s = sc.spec;
        s.frame_count = frames;
        s.noise_px = 0.3;
        s.camera = detail::linear_camera(frames, {0, 0, 0}, {0.20, 0, 0});
        s.background.point_count = 6000;
        s.background.box_min = {-8, -7, 12};
        s.background.box_max = {32, 7, 26};
        s.background.turnover = 0.015;
        s.background.birth_stagger = 0.35;
        s.background.base_color = {0.45, 0.42, 0.36};
        BodySpec body;
        body.cloud.point_count = 1700;
        body.cloud.box_min = {-2.6, -2.3, -0.25};
        body.cloud.box_max = {2.6, 2.3, 0.25};
        body.cloud.base_color = {0.75, 0.2, 0.15};
        body.world_from_body = detail::body_path(
            frames, {2.2, 0, 6.0}, {{{0, frames - 1}, {0.185, 0.006, 0.0}}}, 0.0025);
        s.bodies.push_back(std::move(body));
        sc.notes = "foreground area majority per frame, background cumulative majority";
        lib.push_back(std::move(sc));
    }

    { // Foreground body parks during the middle third of the video.
        Scenario sc;
        sc.name = "intermittent";
        SceneSpec& s = sc.spec;
        s.frame_count = frames;
        s.noise_px = 0.25;
        s.camera = detail::linear_camera(frames, {0, 0, 0}, {0.13, 0, 0});
        s.background.point_count = 3500;
        s.background.box_min = {-6, -6, 10};
        s.background.box_max = {22, 6, 22};
        s.background.turnover = 0.012;
        s.background.birth_stagger = 0.3;
        s.background.base_color = {0.4, 0.45, 0.5};
        BodySpec body;
        body.cloud.point_count = 900;
        body.cloud.box_min = {-1.3, -1.1, -0.2};
        body.cloud.box_max = {1.3, 1.1, 0.2};
        body.cloud.base_color = {0.15, 0.6, 0.2};
        body.world_from_body = detail::body_path(
            frames, {1.2, 0.3, 5.5},
            {{{0, 32}, {0.16, -0.01, 0.0}}, {{66, frames - 1}, {0.16, 0.012, 0.0}}});
        s.bodies.push_back(std::move(body));
        sc.notes = "body static for frames 33..65; locally indistinguishable from background";
        lib.push_back(std::move(sc));
    }

    { // Background depth spans [5, 100] world units: a 20x depth ratio.
        Scenario sc;
        sc.name = "deep-background";
        SceneSpec& s = sc.spec;
        s.frame_count = frames;
        s.noise_px = 0.2;
        s.camera = detail::linear_camera(frames, {0, 0, 0}, {0.16, 0, 0}, 0.0004);
        s.background.point_count = 4200;
        s.background.box_min = {-10, -12, 5};
        s.background.box_max = {28, 12, 100};
        s.background.turnover = 0.012;
        s.background.birth_stagger = 0.3;
        s.background.base_color = {0.5, 0.4, 0.3};
        BodySpec body;
        body.cloud.point_count = 450;
        body.cloud.box_min = {-0.8, -0.7, -0.2};
        body.cloud.box_max = {0.8, 0.7, 0.2};
        body.cloud.base_color = {0.2, 0.3, 0.7};
        body.world_from_body = detail::body_path(
            frames, {1.5, -0.4, 6.0}, {{{0, frames - 1}, {0.14, 0.015, 0.01}}});
        s.bodies.push_back(std::move(body));
        sc.notes = "no over-segmentation expected despite 20x depth variation";
        lib.push_back(std::move(sc));
    }

    { // Camera on a tripod, large rigid foreground sweeping through. The pure
      // translation of the foreground satisfies static points too, so the
      // epipolar test cannot separate the groups.
        Scenario sc;
        sc.name = "near-static-camera";
        sc.expected_fail = true;
        SceneSpec& s = sc.spec;
        s.frame_count = frames;
        s.noise_px = 0.15;
        s.camera = detail::linear_camera(frames, {0, 0, 0}, {0.0006, 0, 0});
        s.background.point_count = 2200;
        s.background.box_min = {-7, -6, 14};
        s.background.box_max = {7, 6, 30};
        s.background.turnover = 0.02;
        s.background.birth_stagger = 0.4;
        s.background.base_color = {0.5, 0.5, 0.45};
        BodySpec body;
        body.cloud.point_count = 2600;
        body.cloud.box_min = {-2.8, -2.2, -0.3};
        body.cloud.box_max = {2.8, 2.2, 0.3};
        body.cloud.base_color = {0.65, 0.55, 0.2};
        body.cloud.turnover = 0.01;
        body.cloud.birth_stagger = 0.3;
        body.world_from_body = detail::body_path(
            frames, {-1.5, 0.2, 6.5}, {{{0, frames - 1}, {0.035, 0.0, 0.0}}});
        s.bodies.push_back(std::move(body));
        sc.notes = "rigid translating foreground + static camera; expected to fail";
        lib.push_back(std::move(sc));
    }

    { // Short-lived features on a non-rigid surface (river-like drift). Their
      // 2-3 frame tracks rarely violate the epipolar constraint.
        Scenario sc;
        sc.name = "short-lifetime-nonrigid";
        sc.expected_fail = true;
        SceneSpec& s = sc.spec;
        s.frame_count = frames;
        s.noise_px = 0.2;
        s.camera = detail::linear_camera(frames, {0, 0, 0}, {0.14, 0, 0});
        s.background.point_count = 1400;
        s.background.box_min = {-6, -6, 11};
        s.background.box_max = {22, -0.5, 21};
        s.background.turnover = 0.012;
        s.background.birth_stagger = 0.3;
        s.background.base_color = {0.45, 0.4, 0.35};
        BodySpec river;
        river.cloud.point_count = 5200;
        river.cloud.box_min = {-6, 0.5, 11};
        river.cloud.box_max = {22, 5.5, 16};
        river.cloud.base_color = {0.25, 0.45, 0.65};
        river.cloud.turnover = 0.38;
        river.cloud.birth_stagger = 0.95;
        river.cloud.nonrigid_drift = 0.012;
        river.world_from_body = detail::body_path(frames, {0, 0, 0}, {});
        s.bodies.push_back(std::move(river));
        sc.notes = "median track length <= 3; drifting features pass the epipolar test";
        lib.push_back(std::move(sc));
    }
    return lib;
}

inline const Scenario& find_scenario(std::span<const Scenario> lib, const std::string& name) {
    for (const Scenario& sc : lib)
        if (sc.name == name) return sc;
    throw std::invalid_argument("unknown scenario: " + name);
}

} // namespace rigidpath::synth
