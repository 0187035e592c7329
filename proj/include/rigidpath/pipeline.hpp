#pragma once

#include <algorithm>
#include <chrono>
#include <span>
#include <vector>

#include "rigidpath/candidates.hpp"
#include "rigidpath/clips.hpp"
#include "rigidpath/config.hpp"
#include "rigidpath/io.hpp"
#include "rigidpath/labeling.hpp"
#include "rigidpath/metrics.hpp"
#include "rigidpath/motion_graph.hpp"

namespace rigidpath {

struct PipelineResult {
    std::vector<Clip> clips;
    std::vector<double> credit; // sub-trajectory value 1/N per track
    MotionGraph graph;
    MotionPath path;
    GlobalBackgroundMotion background;
    std::vector<char> labels_path;     // background = entirely covered by the path
    std::vector<char> labels_global;   // after the whole-video consistency stage
    std::vector<char> labels_filtered; // final
    MetricsReport report;              // stage metrics filled in only with ground truth
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Detectors for the documented failure preconditions: a camera that barely
// moves leaves a large share of tracks with near-zero image motion, and
// non-rigid surfaces shed very short tracks.
inline void detect_input_flags(std::span<const Trajectory> trajs, MetricsReport& report) {
    std::size_t slow = 0;
    std::vector<int> lengths;
    lengths.reserve(trajs.size());
    for (const Trajectory& t : trajs) {
        lengths.push_back(t.length());
        if (t.length() < 2) continue;
        double travel = 0;
        for (std::size_t i = 1; i < t.points.size(); ++i)
            travel += std::hypot(t.points[i].x - t.points[i - 1].x,
                                 t.points[i].y - t.points[i - 1].y);
        if (travel / (t.length() - 1) < 0.2) ++slow;
    }
    report.flag_near_static_camera =
        trajs.size() > 0 && static_cast<double>(slow) >= 0.2 * static_cast<double>(trajs.size());
    std::nth_element(lengths.begin(), lengths.begin() + lengths.size() / 2, lengths.end());
    report.flag_short_tracks = !lengths.empty() && lengths[lengths.size() / 2] <= 3;
}

} // namespace detail

inline PipelineResult run_pipeline(const PipelineConfig& config, const TrajectorySet& input) {
    const auto t_start = std::chrono::steady_clock::now();
    PipelineResult r;
    RansacParams ransac = config.ransac;
    ransac.rng_seed = config.rng_seed;
    const unsigned threads = config.threads;

    detail::detect_input_flags(input.trajs, r.report);
    r.report.n_trajectories = static_cast<long>(input.trajs.size());

    auto t0 = std::chrono::steady_clock::now();
    r.clips = generate_clips(input.trajs, input.meta, config.clips);
    r.credit = sub_trajectory_credit(input.trajs, r.clips);
    r.report.n_clips = static_cast<long>(r.clips.size());
    r.report.runtime_clips_ms = detail::ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const CellGrid grid = CellGrid::build(input.meta, config.grid);
    std::vector<std::vector<RigidMotion>> candidates(r.clips.size());
    for (std::size_t q = 0; q < r.clips.size(); ++q) {
        bool fallback = false;
        candidates[q] = propose_clip_candidates(input.trajs, r.clips[q], grid, config.geometry,
                                                ransac, threads, &fallback);
        if (fallback) r.report.flag_global_fallback = true;
    }
    r.report.runtime_candidates_ms = detail::ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    r.graph = build_graph(std::move(candidates), input.trajs, r.credit, config.graph, threads);
    r.path = dominant_path(r.graph);
    r.report.flag_bridged_path = r.path.bridged;
    r.report.n_candidates = static_cast<long>(r.graph.node_count());
    r.report.n_edges = static_cast<long>(r.graph.edge_count());
    r.report.runtime_graph_ms = detail::ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const std::vector<int> reliable =
        reliable_background_ids(r.path, r.graph.layers, r.clips, input.trajs);
    r.labels_path.assign(input.trajs.size(), 0);
    for (int id : reliable) r.labels_path[static_cast<std::size_t>(id)] = 1;
    r.background = fit_global_motion(input.trajs, reliable, input.meta, config.geometry);
    r.labels_global = label_all(input.trajs, r.background, config.geometry, threads);
    r.report.runtime_labeling_ms = detail::ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    r.labels_filtered =
        filter_labels(input.trajs, input.meta, r.labels_global, config.filter, threads);
    r.report.runtime_filter_ms = detail::ms_since(t0);

    r.report.runtime_total_ms = detail::ms_since(t_start);
    return r;
}

// Fill in the per-stage quality numbers against ground-truth labels.
inline void score_against_truth(PipelineResult& r, std::span<const char> truth) {
    r.report.path = evaluate(r.labels_path, truth);
    r.report.global = evaluate(r.labels_global, truth);
    r.report.filtered = evaluate(r.labels_filtered, truth);
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["precision"] = m.filtered.precision;
    j["recall"] = m.filtered.recall;
    j["f_score"] = m.filtered.f_score;
    j["precision_global"] = m.global.precision;
    j["recall_global"] = m.global.recall;
    j["f_score_global"] = m.global.f_score;
    j["precision_path"] = m.path.precision;
    j["recall_path"] = m.path.recall;
    j["f_score_path"] = m.path.f_score;
    j["n_trajectories"] = m.n_trajectories;
    j["n_clips"] = m.n_clips;
    j["n_candidates"] = m.n_candidates;
    j["n_edges"] = m.n_edges;
    j["runtime_clips_ms"] = m.runtime_clips_ms;
    j["runtime_candidates_ms"] = m.runtime_candidates_ms;
    j["runtime_graph_ms"] = m.runtime_graph_ms;
    j["runtime_labeling_ms"] = m.runtime_labeling_ms;
    j["runtime_filter_ms"] = m.runtime_filter_ms;
    j["runtime_total_ms"] = m.runtime_total_ms;
    j["flag_near_static_camera"] = m.flag_near_static_camera;
    j["flag_short_tracks"] = m.flag_short_tracks;
    j["flag_bridged_path"] = m.flag_bridged_path;
    j["flag_global_fallback"] = m.flag_global_fallback;
    return j;
}

} // namespace rigidpath
