#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "rigidpath/geometry.hpp"
#include "rigidpath/synth.hpp"

using namespace rigidpath;

namespace {

// Independent two-view oracle: random relative pose, random 3D points, pinhole
// projection. Everything here is computed from first principles in the test.
struct TwoView {
    std::vector<Vec2> pts_j, pts_k;
    Eigen::Matrix3d f_true;
};

TwoView make_two_view(std::mt19937_64& rng, int n_points, bool pure_translation = false) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::Matrix3d k;
    k << 500, 0, 320, 0, 500, 240, 0, 0, 1;

    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    if (!pure_translation) {
        const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
        r = Eigen::AngleAxisd(0.08 * u(rng), axis).toRotationMatrix();
    }
    Eigen::Vector3d t(0.6 + 0.2 * u(rng), pure_translation ? 0.0 : 0.2 * u(rng),
                      pure_translation ? 0.0 : 0.1 * u(rng));

    TwoView view;
    Eigen::Matrix3d tx;
    tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
    view.f_true = k.inverse().transpose() * tx * r * k.inverse();
    view.f_true /= view.f_true.norm();

    while (static_cast<int>(view.pts_j.size()) < n_points) {
        const Eigen::Vector3d p(4.0 * u(rng), 3.0 * u(rng), 8.0 + 3.0 * u(rng));
        const Eigen::Vector3d q = r * p + t;
        if (q.z() < 0.5) continue;
        const Eigen::Vector3d a = k * (p / p.z());
        const Eigen::Vector3d b = k * (q / q.z());
        view.pts_j.push_back({a.x(), a.y()});
        view.pts_k.push_back({b.x(), b.y()});
    }
    return view;
}

} // namespace

TEST_CASE("geometric error is the point-to-epipolar-line distance") {
    Eigen::Matrix3d f;
    f << 0, 0, 0, 0, 0, -1, 0, 1, 0;

    CHECK(geometric_error({1, 2}, {5, 2}, f) == 0.0);
    CHECK_THAT(geometric_error({1, 2}, {5, 3}, f), Catch::Matchers::WithinAbs(1.0, 1e-15));

    GeometryParams params;
    const double off = params.epsilon_f + 0.01;
    CHECK(geometric_error({1, 2}, {5, 2 + off}, f) > params.epsilon_f);
}

TEST_CASE("geometric error is invariant to the scale of F") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::Matrix3d f;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) f(i, j) = u(rng);
        const Vec2 pj{300 * u(rng) + 320, 200 * u(rng) + 240};
        const Vec2 pk{300 * u(rng) + 320, 200 * u(rng) + 240};
        const double c = u(rng) * 10 + 10.5;
        const double e1 = geometric_error(pj, pk, f);
        const double e2 = geometric_error(pj, pk, Eigen::Matrix3d(c * f));
        CHECK_THAT(e2, Catch::Matchers::WithinRel(e1, 1e-9));
    }
}

TEST_CASE("degenerate epipolar line maps to +inf, never NaN") {
    Eigen::Matrix3d f;
    f << 0, 0, 0, 0, 0, 0, 0, 0, 1; // any p_j gives line (0,0,1)
    const double e = geometric_error({10, 20}, {30, 40}, f);
    CHECK(std::isinf(e));
    CHECK_FALSE(std::isnan(e));
}

TEST_CASE("eight noise-free correspondences recover F to sub-microunit error") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const TwoView view = make_two_view(rng, 8);
        const Eigen::Matrix3d f = estimate_fundamental(view.pts_j, view.pts_k);
        double max_err = 0;
        for (std::size_t i = 0; i < view.pts_j.size(); ++i)
            max_err = std::max(max_err, geometric_error(view.pts_j[i], view.pts_k[i], f));
        CHECK(max_err < 1e-6);

        // rank-2 and unit-norm representation invariants
        CHECK(std::abs(f.determinant()) < 1e-10);
        CHECK_THAT(f.norm(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("pure-translation pair is recovered exactly") {
    std::mt19937_64 rng(23);
    const TwoView view = make_two_view(rng, 8, /*pure_translation=*/true);
    const Eigen::Matrix3d f = estimate_fundamental(view.pts_j, view.pts_k);
    for (std::size_t i = 0; i < view.pts_j.size(); ++i)
        CHECK(geometric_error(view.pts_j[i], view.pts_k[i], f) < 1e-6);
}

TEST_CASE("degenerate configurations raise degeneracy errors") {
    SECTION("all points identical") {
        std::vector<Vec2> same(8, Vec2{100, 100});
        CHECK_THROWS_AS(estimate_fundamental(same, same), degeneracy_error);
    }
    SECTION("collinear points") {
        std::vector<Vec2> a, b;
        for (int i = 0; i < 8; ++i) {
            a.push_back({50.0 + 10 * i, 60.0 + 5 * i});
            b.push_back({55.0 + 10 * i, 61.0 + 5 * i});
        }
        CHECK_THROWS_AS(estimate_fundamental(a, b), degeneracy_error);
    }
    SECTION("fewer than 8 matches is a precondition violation") {
        std::vector<Vec2> a(7, Vec2{1, 1});
        CHECK_THROWS_AS(estimate_fundamental(a, a), std::invalid_argument);
    }
}

TEST_CASE("estimation from many noisy matches stays within the inlier band") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        TwoView view = make_two_view(rng, 200);
        for (auto& p : view.pts_k) {
            p.x += noise(rng);
            p.y += noise(rng);
        }
        const Eigen::Matrix3d f = estimate_fundamental(view.pts_j, view.pts_k);
        int inside = 0;
        for (std::size_t i = 0; i < view.pts_j.size(); ++i)
            if (geometric_error(view.pts_j[i], view.pts_k[i], f) < 1.5) ++inside;
        CHECK(inside > 190);
    }
}

namespace {

// Six-frame rigid scene via the synth oracle; returns trajectories of the
// background plus the true per-pair matrices as a RigidMotion.
struct OracleClip {
    std::vector<Trajectory> trajs;
    RigidMotion motion;
    synth::GroundTruth truth;
};

OracleClip make_oracle_clip(std::uint64_t seed, double noise = 0.0) {
    synth::SceneSpec spec;
    spec.frame_count = 6;
    spec.noise_px = noise;
    spec.camera = synth::detail::linear_camera(6, {0, 0, 0}, {0.25, 0.02, 0.0});
    spec.background.point_count = 120;
    spec.background.box_min = {-4, -3, 8};
    spec.background.box_max = {5, 3, 16};
    const auto r = synth::render_scene(spec, seed);

    OracleClip oc;
    oc.trajs = r.set.trajs;
    oc.truth = r.truth;
    oc.motion.window = {0, 5};
    for_each_frame_pair(oc.motion.window, 5, [&](int j, int k) {
        oc.motion.matrices.push_back({j, k, r.truth.true_fundamental(-1, j, k)});
    });
    return oc;
}

} // namespace

TEST_CASE("background trajectories are members of their own true motion") {
    const OracleClip oc = make_oracle_clip(41);
    GeometryParams params;
    int full_length = 0;
    for (const Trajectory& t : oc.trajs) {
        if (t.start_frame != 0 || t.length() != 6) continue;
        ++full_length;
        const auto stats = membership_stats(t, oc.motion.matrices, params);
        CHECK(stats.tested == static_cast<int>(oc.motion.matrices.size()));
        CHECK(stats.mean_error() < 1e-6);
        CHECK(is_member(t, oc.motion, params));
    }
    CHECK(full_length > 50);
}

TEST_CASE("exactly half positive matches is not membership") {
    // 15 pairs in a 6-frame window with r=5; craft a trajectory whose error is
    // tiny on some pairs and huge on others by bending it mid-way.
    const OracleClip oc = make_oracle_clip(43);
    GeometryParams params;
    Trajectory bent = oc.trajs.front();
    for (const Trajectory& t : oc.trajs)
        if (t.start_frame == 0 && t.length() == 6) {
            bent = t;
            break;
        }
    for (std::size_t i = 3; i < bent.points.size(); ++i) bent.points[i].y += 40.0;
    const auto stats = membership_stats(bent, oc.motion.matrices, params);
    CHECK(static_cast<double>(stats.positive) <= 0.5 * stats.tested + 1);
    CHECK_FALSE(is_member(bent, oc.motion, params));
}

TEST_CASE("a single-frame trajectory is untestable and never a member") {
    const OracleClip oc = make_oracle_clip(47);
    GeometryParams params;
    Trajectory stub;
    stub.id = 9999;
    stub.start_frame = 2;
    stub.points.push_back({100, 100});
    const auto stats = membership_stats(stub, oc.motion.matrices, params);
    CHECK(stats.tested == 0);
    CHECK_FALSE(is_member(stub, oc.motion, params));
}

TEST_CASE("raising epsilon_f never demotes a member") {
    const OracleClip oc = make_oracle_clip(53, /*noise=*/0.8);
    GeometryParams tight;
    tight.epsilon_f = 1.0;
    GeometryParams loose;
    loose.epsilon_f = 2.5;
    for (const Trajectory& t : oc.trajs)
        if (is_member(t, oc.motion, tight)) CHECK(is_member(t, oc.motion, loose));
}

TEST_CASE("frame pair enumeration covers gaps 1..r inside the window") {
    int count = 0;
    int max_gap_seen = 0;
    for_each_frame_pair({10, 19}, 5, [&](int j, int k) {
        CHECK(j >= 10);
        CHECK(k <= 19);
        CHECK(j < k);
        max_gap_seen = std::max(max_gap_seen, k - j);
        ++count;
    });
    CHECK(max_gap_seen == 5);
    CHECK(count == 9 + 8 + 7 + 6 + 5);
}
