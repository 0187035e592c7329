#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rigidpath/clips.hpp"

using namespace rigidpath;

namespace {

Trajectory span_traj(int id, int start, int len) {
    Trajectory t;
    t.id = id;
    t.start_frame = start;
    for (int i = 0; i < len; ++i) t.points.push_back({50.0 + i, 50.0});
    return t;
}

// Independent step-by-step simulation of the expansion rule, counting
// visibility classes by direct scan instead of prefix sums.
struct RefClip {
    int first, last;
    bool forced;
};

std::vector<RefClip> reference_clips(std::span<const Trajectory> trajs, const VideoMeta& meta,
                                     const ClipParams& params) {
    auto ratio_ok = [&](int s, int e) {
        long full = 0, visible = 0;
        for (const Trajectory& t : trajs) {
            const bool overlap = t.start_frame <= e && t.end_frame() >= s;
            if (!overlap) continue;
            ++visible;
            if (t.start_frame <= s && t.end_frame() >= e) ++full;
        }
        return visible > 0 &&
               static_cast<double>(full) >= params.full_ratio * static_cast<double>(visible);
    };

    std::vector<RefClip> clips;
    int s = 0;
    const int end = meta.frame_count - 1;
    while (true) {
        const int max_e = std::min(end, s + params.max_len - 1);
        const int min_e = std::min(end, s + params.min_len - 1);
        int e = s + 1;
        bool forced;
        if (!ratio_ok(s, e)) {
            e = min_e;
            forced = true;
        } else {
            while (e < max_e && ratio_ok(s, e + 1)) ++e;
            if (e < min_e) {
                e = min_e;
                forced = true;
            } else {
                forced = e >= max_e;
            }
        }
        clips.push_back({s, e, forced});
        if (e == end) break;
        int next = (s + e) / 2;
        if (next <= s) next = s + 1;
        s = next;
    }
    return clips;
}

} // namespace

TEST_CASE("all-full-length input yields a single clip over the whole video") {
    VideoMeta meta{100, 100, 50};
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 10; ++i) trajs.push_back(span_traj(i, 0, 50));
    ClipParams params;
    params.max_len = 200;
    const auto clips = generate_clips(trajs, meta, params);
    REQUIRE(clips.size() == 1);
    CHECK(clips[0].window.first == 0);
    CHECK(clips[0].window.last == 49);
    CHECK(clips[0].full_tracks.size() == 10);
}

TEST_CASE("two-frame video yields the single clip [0,1]") {
    VideoMeta meta{100, 100, 2};
    std::vector<Trajectory> trajs{span_traj(0, 0, 2)};
    const auto clips = generate_clips(trajs, meta);
    REQUIRE(clips.size() == 1);
    CHECK(clips[0].window.first == 0);
    CHECK(clips[0].window.last == 1);
    CHECK(clips[0].forced); // closed at the video end, below min_len
}

TEST_CASE("lattice turnover input matches the scripted reference simulation") {
    VideoMeta meta{100, 100, 100};
    std::vector<Trajectory> trajs;
    int id = 0;
    for (int start = 0; start <= 90; start += 5) trajs.push_back(span_traj(id++, start, 10));

    const auto clips = generate_clips(trajs, meta);
    const auto ref = reference_clips(trajs, meta, ClipParams{});
    REQUIRE(clips.size() == ref.size());
    for (std::size_t i = 0; i < clips.size(); ++i) {
        CHECK(clips[i].window.first == ref[i].first);
        CHECK(clips[i].window.last == ref[i].last);
        CHECK(clips[i].forced == ref[i].forced);
    }
}

TEST_CASE("random inputs match the reference and keep the invariants") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const int frames = std::uniform_int_distribution<int>(2, 150)(rng);
        VideoMeta meta{100, 100, frames};
        std::vector<Trajectory> trajs;
        const int n = std::uniform_int_distribution<int>(1, 60)(rng);
        for (int i = 0; i < n; ++i) {
            const int start = std::uniform_int_distribution<int>(0, frames - 1)(rng);
            const int len = std::uniform_int_distribution<int>(1, frames - start)(rng);
            trajs.push_back(span_traj(i, start, len));
        }

        const auto clips = generate_clips(trajs, meta);
        const auto ref = reference_clips(trajs, meta, ClipParams{});
        REQUIRE(clips.size() == ref.size());
        for (std::size_t i = 0; i < clips.size(); ++i) {
            CHECK(clips[i].window.first == ref[i].first);
            CHECK(clips[i].window.last == ref[i].last);
        }

        // Coverage and overlap invariants.
        CHECK(clips.front().window.first == 0);
        CHECK(clips.back().window.last == frames - 1);
        for (std::size_t i = 1; i < clips.size(); ++i) {
            CHECK(clips[i].window.first <= clips[i - 1].window.last); // >= 1 frame overlap
            CHECK(clips[i].window.first > clips[i - 1].window.first); // progress
        }
        for (const Clip& c : clips) {
            CHECK(c.window.last > c.window.first);
            if (!c.forced) {
                const long full = static_cast<long>(c.full_tracks.size());
                const long vis = full + static_cast<long>(c.partial_tracks.size());
                CHECK(static_cast<double>(full) >= 0.8 * static_cast<double>(vis));
            }
        }

        // Determinism.
        const auto again = generate_clips(trajs, meta);
        REQUIRE(again.size() == clips.size());
        for (std::size_t i = 0; i < clips.size(); ++i)
            CHECK(again[i].window.first == clips[i].window.first);
    }
}

TEST_CASE("slower turnover never shortens clips") {
    VideoMeta meta{100, 100, 100};
    auto lattice = [&](int lifetime) {
        std::vector<Trajectory> trajs;
        int id = 0;
        for (int start = 0; start <= 99; start += 5)
            trajs.push_back(span_traj(id++, start, std::min(lifetime, 100 - start)));
        return trajs;
    };
    const auto fast = lattice(10);
    const auto slow = lattice(25);

    const auto clips_fast = generate_clips(fast, meta);
    const auto clips_slow = generate_clips(slow, meta);
    CHECK(clips_slow.size() <= clips_fast.size());
    CHECK(clips_slow[0].window.length() >= clips_fast[0].window.length());

    // Expansion from identical start frames is monotone in trajectory lifetime.
    detail::WindowCounter counter_fast(fast, meta.frame_count);
    detail::WindowCounter counter_slow(slow, meta.frame_count);
    for (int s = 0; s + 1 < meta.frame_count; s += 7) {
        const auto a = detail::expand_window(counter_fast, s, meta.frame_count, ClipParams{});
        const auto b = detail::expand_window(counter_slow, s, meta.frame_count, ClipParams{});
        CHECK(b.last >= a.last);
    }
}

TEST_CASE("video shorter than min_len force-closes a single whole-video clip") {
    VideoMeta meta{100, 100, 3};
    std::vector<Trajectory> trajs{span_traj(0, 0, 2), span_traj(1, 1, 2)};
    const auto clips = generate_clips(trajs, meta);
    REQUIRE(clips.size() == 1);
    CHECK(clips[0].window.first == 0);
    CHECK(clips[0].window.last == 2);
    CHECK(clips[0].forced);
}

TEST_CASE("severe turnover force-closes at min length") {
    VideoMeta meta{100, 100, 40};
    // Tracks of 2 frames each: the full-length ratio fails for every 2-frame window.
    std::vector<Trajectory> trajs;
    int id = 0;
    for (int start = 0; start + 1 < 40; ++start)
        for (int k = 0; k < 3; ++k) trajs.push_back(span_traj(id++, start, 2));
    const auto clips = generate_clips(trajs, meta);
    CHECK(clips.front().forced);
    CHECK(clips.front().force_reason == ForceReason::MinLength);
    CHECK(clips.front().window.length() == 5);
    CHECK(clips.back().window.last == 39);
}

TEST_CASE("preconditions") {
    VideoMeta meta{100, 100, 1};
    std::vector<Trajectory> trajs{span_traj(0, 0, 1)};
    CHECK_THROWS_AS(generate_clips(trajs, meta), pipeline_error);
    VideoMeta ok{100, 100, 10};
    CHECK_THROWS_AS(generate_clips(std::vector<Trajectory>{}, ok), pipeline_error);
}
