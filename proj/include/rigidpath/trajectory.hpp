#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "rigidpath/errors.hpp"

namespace rigidpath {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

using Rgb = std::array<double, 3>; // channels in [0,1]

struct VideoMeta {
    int frame_width = 0;
    int frame_height = 0;
    int frame_count = 0;
};

// A tracked feature: consecutive per-frame positions starting at start_frame.
// Tracks are gap-free; a feature lost and re-found gets a new id.
struct Trajectory {
    int id = 0;
    int start_frame = 0;
    std::vector<Vec2> points;
    std::vector<Rgb> colors; // empty, or one entry per point

    int end_frame() const { return start_frame + static_cast<int>(points.size()) - 1; }
    int length() const { return static_cast<int>(points.size()); }

    bool visible_at(int frame) const {
        return frame >= start_frame && frame <= end_frame();
    }
    const Vec2& at_frame(int frame) const {
        return points[static_cast<std::size_t>(frame - start_frame)];
    }
};

// Inclusive frame range [first, last].
struct FrameWindow {
    int first = 0;
    int last = 0;

    int length() const { return last - first + 1; }
    bool contains(int frame) const { return frame >= first && frame <= last; }
    int midpoint() const { return (first + last) / 2; }
};

enum class VisibilityIndicator : int {
    Invisible = -1,
    Partial = 0,
    Full = 1,
};

inline VisibilityIndicator classify_visibility(const Trajectory& traj, const FrameWindow& window,
                                               const VideoMeta& meta) {
    if (window.first > window.last || window.first < 0 || window.last >= meta.frame_count)
        throw bounds_error("window [" + std::to_string(window.first) + "," +
                           std::to_string(window.last) + "] outside video of " +
                           std::to_string(meta.frame_count) + " frames");
    const int lo = std::max(traj.start_frame, window.first);
    const int hi = std::min(traj.end_frame(), window.last);
    if (lo > hi) return VisibilityIndicator::Invisible;
    if (traj.start_frame <= window.first && traj.end_frame() >= window.last)
        return VisibilityIndicator::Full;
    return VisibilityIndicator::Partial;
}

// Credit a trajectory contributes to one of the N clips it overlaps.
struct SubTrajectoryValue {
    int trajectory_id = 0;
    int clip_index = 0;
    double value = 0.0; // 1/N
};

} // namespace rigidpath
