#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <set>

#include "rigidpath/clips.hpp"
#include "rigidpath/synth.hpp"

using namespace rigidpath;

namespace {

synth::SceneSpec translating_background(int frames = 20, int points = 300) {
    synth::SceneSpec spec;
    spec.frame_count = frames;
    spec.camera = synth::detail::linear_camera(frames, {0, 0, 0}, {0.2, 0.01, 0.0});
    spec.background.point_count = points;
    spec.background.box_min = {-4, -3, 8};
    spec.background.box_max = {8, 3, 18};
    return spec;
}

} // namespace

TEST_CASE("static camera and static world produce constant trajectories") {
    synth::SceneSpec spec = translating_background();
    spec.camera = synth::detail::linear_camera(spec.frame_count, {0, 0, 0}, {0, 0, 0});
    const auto r = synth::render_scene(spec, 5);
    REQUIRE(!r.set.trajs.empty());
    for (const Trajectory& t : r.set.trajs)
        for (const Vec2& p : t.points) {
            CHECK(p.x == t.points[0].x);
            CHECK(p.y == t.points[0].y);
        }
}

TEST_CASE("noise-free matches satisfy the true epipolar identity") {
    const auto r = synth::render_scene(translating_background(), 7);
    REQUIRE(r.set.trajs.size() > 100);

    double worst = 0;
    for (const Trajectory& t : r.set.trajs) {
        for (int j = t.start_frame; j <= t.end_frame(); ++j)
            for (int k = j + 1; k <= std::min(t.end_frame(), j + 5); ++k) {
                const Eigen::Matrix3d f = r.truth.true_fundamental(-1, j, k);
                const Vec2 a = t.at_frame(j), b = t.at_frame(k);
                const Eigen::Vector3d pa(a.x, a.y, 1.0), pb(b.x, b.y, 1.0);
                worst = std::max(worst, std::abs(pb.dot(f * pa)));
            }
    }
    CHECK(worst < 1e-9);

    // and in pixel units under the geometric error
    for (const Trajectory& t : r.set.trajs) {
        if (t.length() < 2) continue;
        const Eigen::Matrix3d f = r.truth.true_fundamental(-1, t.start_frame, t.start_frame + 1);
        CHECK(geometric_error(t.at_frame(t.start_frame), t.at_frame(t.start_frame + 1), f) < 1e-9);
    }
}

TEST_CASE("rendering is deterministic under a seed") {
    const synth::SceneSpec spec = translating_background();
    const auto a = synth::render_scene(spec, 99);
    const auto b = synth::render_scene(spec, 99);
    REQUIRE(a.set.trajs.size() == b.set.trajs.size());
    for (std::size_t i = 0; i < a.set.trajs.size(); ++i) {
        CHECK(a.set.trajs[i].start_frame == b.set.trajs[i].start_frame);
        REQUIRE(a.set.trajs[i].points.size() == b.set.trajs[i].points.size());
        for (std::size_t k = 0; k < a.set.trajs[i].points.size(); ++k) {
            CHECK(a.set.trajs[i].points[k].x == b.set.trajs[i].points[k].x);
            CHECK(a.set.trajs[i].points[k].y == b.set.trajs[i].points[k].y);
        }
    }
    const auto c = synth::render_scene(spec, 100);
    CHECK(c.set.trajs.size() != 0);
}

TEST_CASE("labels partition the emitted trajectories") {
    auto spec = translating_background();
    synth::BodySpec body;
    body.cloud.point_count = 80;
    body.cloud.box_min = {-0.5, -0.5, -0.2};
    body.cloud.box_max = {0.5, 0.5, 0.2};
    body.world_from_body =
        synth::detail::body_path(spec.frame_count, {1.0, 0, 5.0}, {{{0, 19}, {0.12, 0, 0}}});
    spec.bodies.push_back(body);

    const auto r = synth::render_scene(spec, 11);
    REQUIRE(r.truth.body_of_track.size() == r.set.trajs.size());
    std::size_t bg = 0, fg = 0;
    for (std::size_t i = 0; i < r.set.trajs.size(); ++i) {
        const int label = r.truth.body_of_track[i];
        CHECK(label >= -1);
        CHECK(label < 1);
        if (label < 0) ++bg;
        else ++fg;
    }
    CHECK(bg + fg == r.set.trajs.size());
    CHECK(bg > 0);
    CHECK(fg > 0);

    // Tracks have unique ids, >= 2 points, and in-bounds positions.
    std::set<int> ids;
    for (const Trajectory& t : r.set.trajs) {
        CHECK(ids.insert(t.id).second);
        CHECK(t.points.size() >= 2);
        CHECK(t.end_frame() < spec.frame_count);
        for (const Vec2& p : t.points) {
            CHECK(p.x >= 0);
            CHECK(p.x <= spec.frame_width);
            CHECK(p.y >= 0);
            CHECK(p.y <= spec.frame_height);
        }
    }
}

TEST_CASE("static camera with turnover is allowed but flagged") {
    synth::SceneSpec spec = translating_background();
    spec.camera = synth::detail::linear_camera(spec.frame_count, {0, 0, 0}, {0, 0, 0});
    spec.background.turnover = 0.05;
    const auto r = synth::render_scene(spec, 13);
    REQUIRE(!r.warnings.empty());
}

TEST_CASE("scenario library carries the five named scenes") {
    const auto lib = synth::scenario_library();
    REQUIRE(lib.size() == 5);
    CHECK_NOTHROW(synth::find_scenario(lib, "large-foreground"));
    CHECK_NOTHROW(synth::find_scenario(lib, "intermittent"));
    CHECK_NOTHROW(synth::find_scenario(lib, "deep-background"));
    CHECK_NOTHROW(synth::find_scenario(lib, "near-static-camera"));
    CHECK_NOTHROW(synth::find_scenario(lib, "short-lifetime-nonrigid"));
    CHECK_THROWS_AS(synth::find_scenario(lib, "nope"), std::invalid_argument);

    CHECK(synth::find_scenario(lib, "near-static-camera").expected_fail);
    CHECK(synth::find_scenario(lib, "short-lifetime-nonrigid").expected_fail);
    CHECK_FALSE(synth::find_scenario(lib, "large-foreground").expected_fail);

    const auto& deep = synth::find_scenario(lib, "deep-background").spec;
    CHECK(deep.background.box_min.z() == 5.0);
    CHECK(deep.background.box_max.z() == 100.0);
}

TEST_CASE("large-foreground keeps the background as cumulative majority") {
    const auto lib = synth::scenario_library();
    const auto r = synth::render_scene(synth::find_scenario(lib, "large-foreground").spec, 1);
    std::size_t bg = 0, fg = 0;
    for (int label : r.truth.body_of_track) (label < 0 ? bg : fg)++;
    INFO("bg=" << bg << " fg=" << fg);
    CHECK(bg > fg);

    // Foreground spans the majority of the image area in every frame: check the
    // bounding box of visible body features.
    const auto& spec = synth::find_scenario(lib, "large-foreground").spec;
    std::vector<double> min_x(100, 1e9), max_x(100, -1e9), min_y(100, 1e9), max_y(100, -1e9);
    for (std::size_t i = 0; i < r.set.trajs.size(); ++i) {
        if (r.truth.body_of_track[i] < 0) continue;
        const Trajectory& t = r.set.trajs[i];
        for (int f = t.start_frame; f <= t.end_frame(); ++f) {
            const Vec2 p = t.at_frame(f);
            min_x[f] = std::min(min_x[f], p.x);
            max_x[f] = std::max(max_x[f], p.x);
            min_y[f] = std::min(min_y[f], p.y);
            max_y[f] = std::max(max_y[f], p.y);
        }
    }
    for (int f = 0; f < 100; ++f) {
        const double area = (max_x[f] - min_x[f]) * (max_y[f] - min_y[f]);
        CHECK(area > 0.5 * spec.frame_width * spec.frame_height);
    }
}

TEST_CASE("intermittent body is static for at least one whole clip") {
    const auto lib = synth::scenario_library();
    const auto& sc = synth::find_scenario(lib, "intermittent");
    const auto r = synth::render_scene(sc.spec, 2);

    const auto clips = generate_clips(r.set.trajs, r.set.meta);
    INFO("clips=" << clips.size());
    CHECK(clips.size() >= 5);
    CHECK(clips.size() <= 15);
    bool inside_static = false;
    for (const Clip& c : clips)
        if (c.window.first >= 33 && c.window.last <= 65) inside_static = true;
    CHECK(inside_static);

    // The body's world pose really is constant over the static phase.
    const auto& poses = sc.spec.bodies[0].world_from_body;
    for (int f = 34; f <= 65; ++f) {
        CHECK((poses[f].translation - poses[33].translation).norm() == 0.0);
        CHECK((poses[f].rotation - poses[33].rotation).norm() == 0.0);
    }
}

TEST_CASE("default clip parameters give 5-15 clips on the standard scenes") {
    const auto lib = synth::scenario_library();
    for (const char* name : {"large-foreground", "deep-background"}) {
        const auto r = synth::render_scene(synth::find_scenario(lib, name).spec, 3);
        const auto clips = generate_clips(r.set.trajs, r.set.meta);
        INFO(name << ": clips=" << clips.size() << " trajs=" << r.set.trajs.size());
        CHECK(clips.size() >= 5);
        CHECK(clips.size() <= 15);
    }
}
