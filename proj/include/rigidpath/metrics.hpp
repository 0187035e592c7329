#pragma once

#include <span>

namespace rigidpath {

// Background identification quality, background = positive class.
struct StageMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

inline StageMetrics evaluate(std::span<const char> labels, std::span<const char> truth) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] && truth[i]) ++tp;
        else if (labels[i] && !truth[i]) ++fp;
        else if (!labels[i] && truth[i]) ++fn;
    }
    StageMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f_score = m.precision + m.recall > 0
                    ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                    : 0.0;
    return m;
}

struct MetricsReport {
    StageMetrics path;     // labels straight off the dominant path
    StageMetrics global;   // after the whole-video consistency stage
    StageMetrics filtered; // final labels
    long n_trajectories = 0;
    long n_clips = 0;
    long n_candidates = 0;
    long n_edges = 0;
    double runtime_clips_ms = 0;
    double runtime_candidates_ms = 0;
    double runtime_graph_ms = 0;
    double runtime_labeling_ms = 0;
    double runtime_filter_ms = 0;
    double runtime_total_ms = 0;
    bool flag_near_static_camera = false;
    bool flag_short_tracks = false;
    bool flag_bridged_path = false;
    bool flag_global_fallback = false;

    bool any_flag() const {
        return flag_near_static_camera || flag_short_tracks || flag_bridged_path ||
               flag_global_fallback;
    }
};

} // namespace rigidpath
