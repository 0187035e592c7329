#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rigidpath/clips.hpp"
#include "rigidpath/geometry.hpp"
#include "rigidpath/parallel.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

struct RansacParams {
    int iterations = 500;
    int sample_size = 8;
    double inlier_ratio_accept = 0.8; // accept a cell motion above this consensus
    std::uint64_t rng_seed = 1;
    int max_combo = 3;           // combine up to this many cells
    int combo_budget = 200;      // random cell combinations per clip
    int combo_enum_cap = 200;    // cap on the enumerated consistent pairs/triples
    bool adaptive_stop = true;   // standard confidence-based early exit
    double adaptive_confidence = 0.995;
    double combo_consistency = 0.5; // cross-membership ratio gating combinations
};

struct GridParams {
    double cell_size = 0.0;      // L in px; <= 0 picks frame_width / 5
    double overlap_ratio = 0.3;
};

// Overlapping square cells tiling a frame. Origins are spaced L*(1-overlap);
// rectangles are clipped to the image, so every pixel is covered.
struct CellGrid {
    struct Cell {
        double x0, y0, x1, y1;
        bool contains(const Vec2& p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
    };
    double cell_size = 0;
    double overlap_ratio = 0;
    std::vector<Cell> cells;

    static CellGrid build(const VideoMeta& meta, const GridParams& params) {
        CellGrid g;
        g.cell_size = params.cell_size > 0 ? params.cell_size : meta.frame_width / 5.0;
        g.overlap_ratio = params.overlap_ratio;
        const double step = g.cell_size * (1.0 - params.overlap_ratio);
        const double w = meta.frame_width, h = meta.frame_height;
        for (double y = 0; y < h; y += step)
            for (double x = 0; x < w; x += step)
                g.cells.push_back({x, y, std::min(x + g.cell_size, w), std::min(y + g.cell_size, h)});
        return g;
    }
};

namespace detail {

// Fit F for every frame pair in the window (gap <= r) from the given tracks.
// strict: any per-pair failure rejects the whole fit (RANSAC hypotheses).
// Otherwise pairs without 8 matches or with degenerate data are omitted.
inline std::optional<std::vector<FundamentalMatrix>> fit_motion(std::span<const Trajectory> trajs,
                                                                std::span<const int> track_ids,
                                                                const FrameWindow& window,
                                                                const GeometryParams& params,
                                                                bool strict) {
    std::vector<FundamentalMatrix> matrices;
    std::vector<Vec2> pts_j, pts_k;
    bool failed = false;
    for_each_frame_pair(window, params.max_frame_gap, [&](int j, int k) {
        if (failed) return;
        pts_j.clear();
        pts_k.clear();
        for (int id : track_ids) {
            const Trajectory& t = trajs[static_cast<std::size_t>(id)];
            if (!t.visible_at(j) || !t.visible_at(k)) continue;
            pts_j.push_back(t.at_frame(j));
            pts_k.push_back(t.at_frame(k));
        }
        if (pts_j.size() < 8) {
            if (strict) failed = true;
            return;
        }
        auto f = fit_fundamental(pts_j, pts_k, params);
        if (!f) {
            if (strict) failed = true;
            return;
        }
        matrices.push_back({j, k, *f});
    });
    if (failed || matrices.empty()) return std::nullopt;
    return matrices;
}

// Membership check for a full-length track: every matrix is tested, so the
// verdict is decided as soon as enough negatives accumulate.
inline bool full_length_member(const Trajectory& traj, std::span<const FundamentalMatrix> matrices,
                               const GeometryParams& params) {
    const int total = static_cast<int>(matrices.size());
    if (total < params.min_tested_pairs) return false;
    const double need = params.theta_member * total;
    int positive = 0, done = 0;
    for (const FundamentalMatrix& fm : matrices) {
        const double err = geometric_error(traj.at_frame(fm.frame_j), traj.at_frame(fm.frame_k), fm.m);
        ++done;
        if (err < params.epsilon_f) ++positive;
        if (positive > need) return true;
        if (positive + (total - done) <= need) return false;
    }
    return static_cast<double>(positive) > need;
}

struct RansacOutcome {
    std::vector<FundamentalMatrix> matrices;
    std::vector<int> inliers; // subset of the candidate pool, sorted
    int best_count = 0;
    int iterations_run = 0;
};

inline int adaptive_iteration_bound(double inlier_ratio, int sample_size, double confidence,
                                    int max_iterations) {
    if (inlier_ratio <= 0) return max_iterations;
    const double w = std::pow(std::min(inlier_ratio, 1.0), sample_size);
    if (w >= 1.0) return 1;
    const double denom = std::log1p(-std::min(w, 1.0 - 1e-12));
    const double n = std::log(1.0 - confidence) / denom;
    if (!std::isfinite(n) || n >= static_cast<double>(max_iterations)) return max_iterations;
    return std::max(1, static_cast<int>(std::ceil(n)));
}

// Plain RANSAC over a pool of (mostly full-length) tracks inside one window.
inline std::optional<RansacOutcome> ransac_motion(std::span<const Trajectory> trajs,
                                                  std::span<const int> pool,
                                                  const FrameWindow& window, bool pool_full_length,
                                                  const GeometryParams& geometry,
                                                  const RansacParams& params, std::uint64_t seed) {
    const int n = static_cast<int>(pool.size());
    if (n < params.sample_size) return std::nullopt;

    std::mt19937_64 rng(seed);
    std::vector<int> scratch(pool.begin(), pool.end());
    std::vector<int> sample(static_cast<std::size_t>(params.sample_size));
    std::vector<FundamentalMatrix> best_matrices;
    int best_count = 0;
    int bound = params.iterations;
    int it = 0;
    for (; it < bound; ++it) {
        for (int s = 0; s < params.sample_size; ++s) {
            std::uniform_int_distribution<int> pick(s, n - 1);
            std::swap(scratch[static_cast<std::size_t>(s)], scratch[static_cast<std::size_t>(pick(rng))]);
            sample[static_cast<std::size_t>(s)] = scratch[static_cast<std::size_t>(s)];
        }
        auto matrices = fit_motion(trajs, sample, window, geometry, /*strict=*/pool_full_length);
        if (!matrices) continue;

        int count = 0;
        if (pool_full_length) {
            for (int id : pool)
                if (full_length_member(trajs[static_cast<std::size_t>(id)], *matrices, geometry)) ++count;
        } else {
            for (int id : pool)
                if (is_positive_majority(
                        membership_stats(trajs[static_cast<std::size_t>(id)], *matrices, geometry),
                        geometry))
                    ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_matrices = std::move(*matrices);
            if (params.adaptive_stop)
                bound = std::min(bound,
                                 it + 1 + adaptive_iteration_bound(static_cast<double>(count) / n,
                                                                   params.sample_size,
                                                                   params.adaptive_confidence,
                                                                   params.iterations));
        }
    }
    if (best_count == 0) return std::nullopt;

    RansacOutcome out;
    out.best_count = best_count;
    out.iterations_run = it;
    for (int id : pool)
        if (is_positive_majority(
                membership_stats(trajs[static_cast<std::size_t>(id)], best_matrices, geometry), geometry))
            out.inliers.push_back(id);

    // Final model: refit every pair on the full inlier set.
    auto refit = fit_motion(trajs, out.inliers, window, geometry, /*strict=*/false);
    out.matrices = refit ? std::move(*refit) : std::move(best_matrices);
    return out;
}

} // namespace detail

// RANSAC inside one cell (or cell union). Accepts only if the best consensus
// exceeds the acceptance ratio of the cell's full-length tracks.
inline std::optional<RigidMotion> propose_cell_motion(std::span<const Trajectory> trajs,
                                                      const Clip& clip,
                                                      std::span<const int> cell_track_ids,
                                                      const GeometryParams& geometry,
                                                      const RansacParams& params,
                                                      std::uint64_t seed) {
    auto outcome = detail::ransac_motion(trajs, cell_track_ids, clip.window,
                                         /*pool_full_length=*/true, geometry, params, seed);
    if (!outcome) return std::nullopt;
    if (static_cast<double>(outcome->best_count) <=
        params.inlier_ratio_accept * static_cast<double>(cell_track_ids.size()))
        return std::nullopt;

    RigidMotion motion;
    motion.clip_index = clip.index;
    motion.window = clip.window;
    motion.matrices = std::move(outcome->matrices);
    motion.members = std::move(outcome->inliers);
    return motion;
}

namespace detail {

// Re-test every track visible in the clip and store the per-member mean
// geometric error used later for graph weighting. Tracks without testable
// pairs under an empty model get the heavy-discount error 2*epsilon_f.
inline void extend_membership(std::span<const Trajectory> trajs, const Clip& clip,
                              RigidMotion& motion, const GeometryParams& geometry) {
    motion.members.clear();
    motion.member_mean_error.clear();
    auto consider = [&](int id) {
        const Trajectory& t = trajs[static_cast<std::size_t>(id)];
        if (motion.matrices.empty()) { // degenerate fallback model: keep everything
            motion.members.push_back(id);
            motion.member_mean_error.push_back(2.0 * geometry.epsilon_f);
            return;
        }
        const MembershipStats stats = membership_stats(t, motion.matrices, geometry);
        if (!is_positive_majority(stats, geometry)) return;
        motion.members.push_back(id);
        motion.member_mean_error.push_back(stats.mean_error());
    };
    for (int id : clip.full_tracks) consider(id);
    for (int id : clip.partial_tracks) consider(id);
    // full/partial lists are sorted and disjoint, but their concatenation is not
    std::vector<std::size_t> order(motion.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return motion.members[a] < motion.members[b]; });
    std::vector<int> members(order.size());
    std::vector<double> errs(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        members[i] = motion.members[order[i]];
        errs[i] = motion.member_mean_error[order[i]];
    }
    motion.members = std::move(members);
    motion.member_mean_error = std::move(errs);
}

inline double jaccard(std::span<const int> a, std::span<const int> b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) { ++inter; ++i; ++j; }
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Share of `ids` (capped sample) that pass the membership test under `matrices`.
inline double cross_membership(std::span<const Trajectory> trajs, std::span<const int> ids,
                               std::span<const FundamentalMatrix> matrices,
                               const GeometryParams& geometry) {
    if (ids.empty() || matrices.empty()) return 0.0;
    const std::size_t cap = 64;
    const std::size_t step = std::max<std::size_t>(1, ids.size() / cap);
    std::size_t tested = 0, passed = 0;
    for (std::size_t i = 0; i < ids.size(); i += step) {
        ++tested;
        if (is_positive_majority(
                membership_stats(trajs[static_cast<std::size_t>(ids[i])], matrices, geometry), geometry))
            ++passed;
    }
    return static_cast<double>(passed) / static_cast<double>(tested);
}

} // namespace detail

// Propose the motion candidate set of one clip: RANSAC per cell, then on
// combinations of cells with mutually consistent accepted motions, membership
// extension to every visible track, and near-duplicate removal. A clip where
// nothing is accepted gets a single best-effort global motion so the graph
// always has one node per clip.
inline std::vector<RigidMotion> propose_clip_candidates(std::span<const Trajectory> trajs,
                                                        const Clip& clip, const CellGrid& grid,
                                                        const GeometryParams& geometry,
                                                        const RansacParams& params,
                                                        unsigned threads = 0,
                                                        bool* used_fallback = nullptr) {
    // Full-length tracks per cell, keyed by their position at the clip's start frame.
    std::vector<std::vector<int>> cell_tracks(grid.cells.size());
    for (int id : clip.full_tracks) {
        const Vec2 p = trajs[static_cast<std::size_t>(id)].at_frame(clip.window.first);
        for (std::size_t c = 0; c < grid.cells.size(); ++c)
            if (grid.cells[c].contains(p)) cell_tracks[c].push_back(id);
    }

    std::vector<std::optional<RigidMotion>> per_cell(grid.cells.size());
    parallel_for(grid.cells.size(), threads, [&](std::size_t c) {
        if (cell_tracks[c].size() < static_cast<std::size_t>(params.sample_size)) return;
        per_cell[c] = propose_cell_motion(trajs, clip, cell_tracks[c], geometry, params,
                                          derive_seed(params.rng_seed, static_cast<std::uint64_t>(clip.index), c));
        if (per_cell[c]) per_cell[c]->origin = "cell:" + std::to_string(c);
    });

    std::vector<std::size_t> accepted;
    for (std::size_t c = 0; c < grid.cells.size(); ++c)
        if (per_cell[c]) accepted.push_back(c);

    // Pairwise consistency of accepted cell motions: mutual >= 50% cross-membership.
    const std::size_t na = accepted.size();
    std::vector<char> consistent(na * na, 0);
    {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t b = a + 1; b < na; ++b) pairs.emplace_back(a, b);
        std::vector<char> result(pairs.size(), 0);
        parallel_for(pairs.size(), threads, [&](std::size_t i) {
            const auto [a, b] = pairs[i];
            const RigidMotion& ma = *per_cell[accepted[a]];
            const RigidMotion& mb = *per_cell[accepted[b]];
            const bool ok =
                detail::cross_membership(trajs, ma.members, mb.matrices, geometry) >= params.combo_consistency &&
                detail::cross_membership(trajs, mb.members, ma.matrices, geometry) >= params.combo_consistency;
            result[i] = ok ? 1 : 0;
        });
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto [a, b] = pairs[i];
            consistent[a * na + b] = consistent[b * na + a] = result[i];
        }
    }

    // Combination work list: enumerated consistent pairs/triples (capped), plus a
    // budget of random combinations of accepted cells. Combinations whose cells
    // disagree pairwise cannot reach the acceptance ratio and are skipped.
    std::vector<std::vector<std::size_t>> combos;
    std::set<std::vector<std::size_t>> seen;
    auto push_combo = [&](std::vector<std::size_t> cells) {
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        if (cells.size() < 2) return;
        if (seen.insert(cells).second) combos.push_back(std::move(cells));
    };
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = a + 1; b < na; ++b) {
            if (!consistent[a * na + b]) continue;
            push_combo({accepted[a], accepted[b]});
            if (params.max_combo >= 3)
                for (std::size_t c = b + 1; c < na; ++c)
                    if (consistent[a * na + c] && consistent[b * na + c])
                        push_combo({accepted[a], accepted[b], accepted[c]});
        }
    std::mt19937_64 combo_rng(derive_seed(params.rng_seed, static_cast<std::uint64_t>(clip.index), 0x636f6d626fULL));
    if (static_cast<int>(combos.size()) > params.combo_enum_cap) {
        std::shuffle(combos.begin(), combos.end(), combo_rng);
        combos.resize(static_cast<std::size_t>(params.combo_enum_cap));
    }
    if (na >= 2) {
        std::uniform_int_distribution<std::size_t> pick(0, na - 1);
        for (int i = 0; i < params.combo_budget; ++i) {
            const int size = params.max_combo >= 3 && (combo_rng() & 1) ? 3 : 2;
            std::vector<std::size_t> ords;
            for (int s = 0; s < size; ++s) ords.push_back(pick(combo_rng));
            std::sort(ords.begin(), ords.end());
            ords.erase(std::unique(ords.begin(), ords.end()), ords.end());
            if (ords.size() < 2) continue;
            bool all_consistent = true;
            for (std::size_t a = 0; a < ords.size() && all_consistent; ++a)
                for (std::size_t b = a + 1; b < ords.size(); ++b)
                    if (!consistent[ords[a] * na + ords[b]]) {
                        all_consistent = false;
                        break;
                    }
            if (!all_consistent) continue;
            std::vector<std::size_t> cells;
            for (std::size_t o : ords) cells.push_back(accepted[o]);
            push_combo(std::move(cells));
        }
    }

    std::vector<std::optional<RigidMotion>> per_combo(combos.size());
    parallel_for(combos.size(), threads, [&](std::size_t i) {
        std::vector<int> union_ids;
        for (std::size_t c : combos[i])
            union_ids.insert(union_ids.end(), cell_tracks[c].begin(), cell_tracks[c].end());
        std::sort(union_ids.begin(), union_ids.end());
        union_ids.erase(std::unique(union_ids.begin(), union_ids.end()), union_ids.end());
        if (union_ids.size() < static_cast<std::size_t>(params.sample_size)) return;
        per_combo[i] = propose_cell_motion(trajs, clip, union_ids, geometry, params,
                                           derive_seed(params.rng_seed,
                                                       static_cast<std::uint64_t>(clip.index),
                                                       0x10000ULL + i));
        if (per_combo[i]) {
            std::string tag = "combo:";
            for (std::size_t k = 0; k < combos[i].size(); ++k)
                tag += (k ? "+" : "") + std::to_string(combos[i][k]);
            per_combo[i]->origin = std::move(tag);
        }
    });

    std::vector<RigidMotion> candidates;
    for (auto& m : per_cell)
        if (m) candidates.push_back(std::move(*m));
    for (auto& m : per_combo)
        if (m) candidates.push_back(std::move(*m));

    if (used_fallback) *used_fallback = false;
    if (candidates.empty()) {
        if (used_fallback) *used_fallback = true;
        // Global best-effort motion with the acceptance test waived.
        std::vector<int> pool = clip.full_tracks;
        bool full_length = true;
        if (pool.size() < static_cast<std::size_t>(params.sample_size)) {
            pool.insert(pool.end(), clip.partial_tracks.begin(), clip.partial_tracks.end());
            std::sort(pool.begin(), pool.end());
            full_length = false;
        }
        RigidMotion motion;
        motion.clip_index = clip.index;
        motion.window = clip.window;
        motion.origin = "global-fallback";
        auto outcome = detail::ransac_motion(trajs, pool, clip.window, full_length, geometry, params,
                                             derive_seed(params.rng_seed,
                                                         static_cast<std::uint64_t>(clip.index),
                                                         0xfa11baccULL));
        if (outcome) {
            motion.matrices = std::move(outcome->matrices);
        } else {
            // Not even a sampled model: fit each pair on everything visible.
            auto lenient = detail::fit_motion(trajs, pool, clip.window, geometry, /*strict=*/false);
            if (lenient) motion.matrices = std::move(*lenient);
        }
        candidates.push_back(std::move(motion));
    }

    parallel_for(candidates.size(), threads,
                 [&](std::size_t i) { detail::extend_membership(trajs, clip, candidates[i], geometry); });

    // Near-duplicates collapse onto the largest member set.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].members.size() > candidates[b].members.size();
    });
    std::vector<RigidMotion> unique_set;
    for (std::size_t idx : order) {
        bool duplicate = false;
        for (const RigidMotion& kept : unique_set)
            if (detail::jaccard(candidates[idx].members, kept.members) > 0.9) {
                duplicate = true;
                break;
            }
        if (!duplicate) unique_set.push_back(std::move(candidates[idx]));
    }
    return unique_set;
}

} // namespace rigidpath
