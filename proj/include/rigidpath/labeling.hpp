#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "rigidpath/clips.hpp"
#include "rigidpath/geometry.hpp"
#include "rigidpath/motion_graph.hpp"
#include "rigidpath/parallel.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

struct FilterParams {
    double neighbor_dist_frac = 0.05; // of frame width: spatio-temporal neighbor cutoff
    double sigma_d_frac = 0.02;       // of frame width
    double sigma_c = 0.18;
    double threshold = 0.5;
};

// Background motion model spanning the whole video; frame pairs without enough
// reliable support are omitted.
struct GlobalBackgroundMotion {
    std::vector<FundamentalMatrix> matrices;
    std::vector<int> reliable_ids;
    int usable_pairs = 0;
    int total_pairs = 0;
};

// Tracks whose every overlapped clip lists them as a member of the path's
// chosen candidate. These are the only tracks trusted to fit the global model.
inline std::vector<int> reliable_background_ids(const MotionPath& path,
                                                std::span<const std::vector<RigidMotion>> layers,
                                                std::span<const Clip> clips,
                                                std::span<const Trajectory> trajs) {
    std::vector<char> covered(trajs.size(), 1);
    std::vector<char> member(trajs.size());
    for (std::size_t q = 0; q < clips.size(); ++q) {
        const RigidMotion& chosen = layers[q][static_cast<std::size_t>(path.node_per_clip[q])];
        std::fill(member.begin(), member.end(), 0);
        for (int id : chosen.members) member[static_cast<std::size_t>(id)] = 1;
        const FrameWindow& w = clips[q].window;
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            const bool overlaps = trajs[i].start_frame <= w.last && trajs[i].end_frame() >= w.first;
            if (overlaps && !member[i]) covered[i] = 0;
        }
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < trajs.size(); ++i)
        if (covered[i]) out.push_back(static_cast<int>(i));
    if (out.empty())
        throw pipeline_error("no reliable background trajectory is covered by the dominant path");
    return out;
}

inline GlobalBackgroundMotion fit_global_motion(std::span<const Trajectory> trajs,
                                                std::span<const int> reliable_ids,
                                                const VideoMeta& meta,
                                                const GeometryParams& params) {
    GlobalBackgroundMotion model;
    model.reliable_ids.assign(reliable_ids.begin(), reliable_ids.end());

    const FrameWindow whole{0, meta.frame_count - 1};
    std::vector<Vec2> pts_j, pts_k;
    for_each_frame_pair(whole, params.max_frame_gap, [&](int j, int k) {
        ++model.total_pairs;
        pts_j.clear();
        pts_k.clear();
        for (int id : reliable_ids) {
            const Trajectory& t = trajs[static_cast<std::size_t>(id)];
            if (!t.visible_at(j) || !t.visible_at(k)) continue;
            pts_j.push_back(t.at_frame(j));
            pts_k.push_back(t.at_frame(k));
        }
        if (pts_j.size() < 8) return;
        auto f = detail::fit_fundamental(pts_j, pts_k, params);
        if (!f) return;
        model.matrices.push_back({j, k, *f});
        ++model.usable_pairs;
    });

    if (model.usable_pairs * 2 < model.total_pairs)
        throw pipeline_error("global background motion under-constrained: " +
                             std::to_string(model.usable_pairs) + " of " +
                             std::to_string(model.total_pairs) +
                             " frame pairs have 8 reliable trajectories");
    return model;
}

// Stage `global`: every track is labeled by the membership test against the
// whole-video background model.
inline std::vector<char> label_all(std::span<const Trajectory> trajs,
                                   const GlobalBackgroundMotion& model,
                                   const GeometryParams& params, unsigned threads = 0) {
    std::vector<char> labels(trajs.size(), 0);
    parallel_for(trajs.size(), threads, [&](std::size_t i) {
        labels[i] =
            is_positive_majority(membership_stats(trajs[i], model.matrices, params), params) ? 1 : 0;
    });
    return labels;
}

namespace detail {

struct NeighborStats {
    std::uint32_t a, b;
    double weight;
};

// Candidate pairs from a per-frame hash grid with cell size = the neighbor
// cutoff, so any pair within the cutoff in some shared frame is found.
inline std::vector<std::uint64_t> neighbor_pairs(std::span<const Trajectory> trajs,
                                                 const VideoMeta& meta, double radius) {
    std::vector<std::uint64_t> keys;
    const int cols = static_cast<int>(meta.frame_width / radius) + 2;
    const int rows = static_cast<int>(meta.frame_height / radius) + 2;
    std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(cols * rows));
    std::vector<std::size_t> used;
    std::unordered_set<std::uint64_t> seen;

    std::vector<std::vector<std::uint32_t>> by_start(static_cast<std::size_t>(meta.frame_count));
    for (std::size_t i = 0; i < trajs.size(); ++i)
        by_start[static_cast<std::size_t>(trajs[i].start_frame)].push_back(
            static_cast<std::uint32_t>(i));
    std::vector<std::uint32_t> alive;

    for (int f = 0; f < meta.frame_count; ++f) {
        for (std::uint32_t i : by_start[static_cast<std::size_t>(f)]) alive.push_back(i);
        std::erase_if(alive, [&](std::uint32_t i) { return !trajs[i].visible_at(f); });

        for (std::size_t b : used) buckets[b].clear();
        used.clear();
        auto bucket_of = [&](const Vec2& p) {
            const int c = std::clamp(static_cast<int>(p.x / radius), 0, cols - 1);
            const int r = std::clamp(static_cast<int>(p.y / radius), 0, rows - 1);
            return static_cast<std::size_t>(r * cols + c);
        };
        for (std::uint32_t i : alive) {
            const std::size_t b = bucket_of(trajs[i].at_frame(f));
            if (buckets[b].empty()) used.push_back(b);
            buckets[b].push_back(i);
        }
        const double r2 = radius * radius;
        for (std::uint32_t i : alive) {
            const Vec2 p = trajs[i].at_frame(f);
            const int c0 = std::clamp(static_cast<int>(p.x / radius) - 1, 0, cols - 1);
            const int c1 = std::clamp(static_cast<int>(p.x / radius) + 1, 0, cols - 1);
            const int r0 = std::clamp(static_cast<int>(p.y / radius) - 1, 0, rows - 1);
            const int r1 = std::clamp(static_cast<int>(p.y / radius) + 1, 0, rows - 1);
            for (int r = r0; r <= r1; ++r)
                for (int c = c0; c <= c1; ++c)
                    for (std::uint32_t j : buckets[static_cast<std::size_t>(r * cols + c)]) {
                        if (j <= i) continue;
                        const Vec2 q = trajs[j].at_frame(f);
                        const double dx = p.x - q.x, dy = p.y - q.y;
                        if (dx * dx + dy * dy >= r2) continue;
                        seen.insert((static_cast<std::uint64_t>(i) << 32) | j);
                    }
        }
    }
    keys.assign(seen.begin(), seen.end());
    std::sort(keys.begin(), keys.end());
    return keys;
}

} // namespace detail

// Stage `filtered`: one pass of the neighborhood label filter. Pairs sharing a
// frame within the distance cutoff vote with spatial and color affinity; a
// track flips to background only if the normalized vote exceeds the threshold.
inline std::vector<char> filter_labels(std::span<const Trajectory> trajs, const VideoMeta& meta,
                                       std::span<const char> labels, const FilterParams& params,
                                       unsigned threads = 0) {
    const double radius = params.neighbor_dist_frac * meta.frame_width;
    const double sigma_d = params.sigma_d_frac * meta.frame_width;
    const std::vector<std::uint64_t> pairs = detail::neighbor_pairs(trajs, meta, radius);

    std::vector<detail::NeighborStats> stats(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t n) {
        const std::uint32_t i = static_cast<std::uint32_t>(pairs[n] >> 32);
        const std::uint32_t j = static_cast<std::uint32_t>(pairs[n] & 0xffffffffu);
        const Trajectory& a = trajs[i];
        const Trajectory& b = trajs[j];
        const int first = std::max(a.start_frame, b.start_frame);
        const int last = std::min(a.end_frame(), b.end_frame());
        double max_d2 = 0.0;
        double color_sum = 0.0;
        const bool colored = !a.colors.empty() && !b.colors.empty();
        for (int f = first; f <= last; ++f) {
            const Vec2 p = a.at_frame(f), q = b.at_frame(f);
            const double dx = p.x - q.x, dy = p.y - q.y;
            max_d2 = std::max(max_d2, dx * dx + dy * dy);
            if (colored) {
                const Rgb& ca = a.colors[static_cast<std::size_t>(f - a.start_frame)];
                const Rgb& cb = b.colors[static_cast<std::size_t>(f - b.start_frame)];
                const double dr = ca[0] - cb[0], dg = ca[1] - cb[1], db = ca[2] - cb[2];
                color_sum += std::sqrt(dr * dr + dg * dg + db * db);
            }
        }
        double w = std::exp(-max_d2 / (2.0 * sigma_d * sigma_d));
        if (colored) {
            const double dc = color_sum / (last - first + 1);
            w *= std::exp(-dc * dc / (2.0 * params.sigma_c * params.sigma_c));
        }
        stats[n] = {i, j, w};
    });

    std::vector<double> vote(trajs.size(), 0.0);
    std::vector<double> total(trajs.size(), 0.0);
    for (const detail::NeighborStats& s : stats) {
        vote[s.a] += s.weight * (labels[s.b] ? 1.0 : 0.0);
        total[s.a] += s.weight;
        vote[s.b] += s.weight * (labels[s.a] ? 1.0 : 0.0);
        total[s.b] += s.weight;
    }

    std::vector<char> out(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (total[i] == 0.0)
            out[i] = labels[i]; // isolated track keeps its global label
        else
            out[i] = vote[i] / total[i] > params.threshold ? 1 : 0;
    }
    return out;
}

} // namespace rigidpath
