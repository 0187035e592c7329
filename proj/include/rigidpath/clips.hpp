#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "rigidpath/errors.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

struct ClipParams {
    int min_len = 5;        // shortest window; clips are force-closed here if the
                            // full-length ratio fails already at two frames
    int max_len = 60;       // cap against unbounded windows under a static camera
    double full_ratio = 0.8;
};

enum class ForceReason : int { None = 0, MinLength, MaxLength, VideoEnd };

// One overlapping frame window plus the visibility classes of the tracks in it.
// Track references are indices into the trajectory vector the clip was built from.
struct Clip {
    int index = 0;
    FrameWindow window;
    std::vector<int> full_tracks;    // indicator Full, sorted
    std::vector<int> partial_tracks; // indicator Partial, sorted
    bool forced = false;             // window ended at a bound, not by the ratio rule
    ForceReason force_reason = ForceReason::None;
};

namespace detail {

// Per-start-frame expansion state: counts of visible / full-length tracks for
// windows [start, e], e in [start+1, frame_count-1].
class WindowCounter {
public:
    WindowCounter(std::span<const Trajectory> trajs, int frame_count)
        : frame_count_(frame_count), start_le_(frame_count, 0), end_le_(frame_count, 0) {
        for (const Trajectory& t : trajs) {
            ++start_le_[t.start_frame];
            ++end_le_[t.end_frame()];
        }
        for (int f = 1; f < frame_count; ++f) {
            start_le_[f] += start_le_[f - 1];
            end_le_[f] += end_le_[f - 1];
        }
        for (const Trajectory& t : trajs) {
            starts_.push_back(t.start_frame);
            ends_.push_back(t.end_frame());
        }
    }

    // Rebuild the suffix histogram of end frames over tracks with start <= s.
    void set_start(int s) {
        start_ = s;
        full_from_.assign(frame_count_ + 1, 0);
        for (std::size_t i = 0; i < starts_.size(); ++i)
            if (starts_[i] <= s) ++full_from_[ends_[i]];
        for (int f = frame_count_ - 1; f >= 0; --f) full_from_[f] += full_from_[f + 1];
    }

    long visible(int e) const { // tracks overlapping [start_, e]
        long gone = start_ > 0 ? end_le_[start_ - 1] : 0;
        return start_le_[e] - gone;
    }
    long full(int e) const { return full_from_[e]; } // start <= start_ and end >= e

    bool ratio_ok(int e, double min_ratio) const {
        const long vis = visible(e);
        if (vis == 0) return false;
        return static_cast<double>(full(e)) >= min_ratio * static_cast<double>(vis);
    }

private:
    int frame_count_;
    int start_ = 0;
    std::vector<long> start_le_, end_le_, full_from_;
    std::vector<int> starts_, ends_;
};

struct Expansion {
    int last = 0;
    bool forced = false;
    ForceReason reason = ForceReason::None;
};

// Grow [start, e] frame by frame while the full-length ratio holds; stop at the
// first violation or at a bound. Windows that never satisfy the ratio are forced
// up to min_len.
inline Expansion expand_window(WindowCounter& counter, int start, int frame_count,
                               const ClipParams& params) {
    counter.set_start(start);
    const int last_frame = frame_count - 1;
    const int max_e = std::min(last_frame, start + params.max_len - 1);
    const int min_e = std::min(last_frame, start + params.min_len - 1);

    int e = start + 1;
    if (!counter.ratio_ok(e, params.full_ratio))
        return {min_e, true, ForceReason::MinLength};

    while (e < max_e && counter.ratio_ok(e + 1, params.full_ratio)) ++e;

    if (e < min_e) return {min_e, true, ForceReason::MinLength};
    if (e < max_e) return {e, false, ForceReason::None}; // stopped by the ratio rule
    if (e == last_frame) return {e, true, ForceReason::VideoEnd};
    return {e, true, ForceReason::MaxLength};
}

} // namespace detail

// Partition the video into overlapping clips: clip 0 starts at frame 0, each clip
// is the maximal window satisfying the full-length ratio (clamped to
// [min_len, max_len] and the video end), and each next clip starts at the
// midpoint frame of the previous one.
inline std::vector<Clip> generate_clips(std::span<const Trajectory> trajs, const VideoMeta& meta,
                                        const ClipParams& params = {}) {
    if (meta.frame_count < 2) throw pipeline_error("cannot build clips: video has fewer than 2 frames");
    if (trajs.empty()) throw pipeline_error("cannot build clips: no trajectories");

    detail::WindowCounter counter(trajs, meta.frame_count);
    std::vector<Clip> clips;
    int start = 0;
    while (true) {
        const auto exp = detail::expand_window(counter, start, meta.frame_count, params);
        Clip clip;
        clip.index = static_cast<int>(clips.size());
        clip.window = {start, exp.last};
        clip.forced = exp.forced;
        clip.force_reason = exp.reason;
        for (int i = 0; i < static_cast<int>(trajs.size()); ++i) {
            switch (classify_visibility(trajs[i], clip.window, meta)) {
                case VisibilityIndicator::Full: clip.full_tracks.push_back(i); break;
                case VisibilityIndicator::Partial: clip.partial_tracks.push_back(i); break;
                case VisibilityIndicator::Invisible: break;
            }
        }
        clips.push_back(std::move(clip));
        if (exp.last == meta.frame_count - 1) break;
        int next = clips.back().window.midpoint();
        if (next <= start) next = start + 1; // 2-frame window: midpoint == start
        start = next;
    }
    return clips;
}

// Number of clips each track overlaps (indicator != Invisible), indexed like trajs.
inline std::vector<int> clip_span_counts(std::span<const Trajectory> trajs,
                                         std::span<const Clip> clips) {
    std::vector<int> n(trajs.size(), 0);
    for (const Clip& c : clips) {
        for (int i : c.full_tracks) ++n[i];
        for (int i : c.partial_tracks) ++n[i];
    }
    return n;
}

// Per-track credit 1/N for each of the N clips it overlaps, indexed like trajs.
inline std::vector<double> sub_trajectory_credit(std::span<const Trajectory> trajs,
                                                 std::span<const Clip> clips) {
    std::vector<int> n = clip_span_counts(trajs, clips);
    std::vector<double> v(trajs.size(), 0.0);
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == 0)
            throw pipeline_error("trajectory " + std::to_string(trajs[i].id) +
                                 " overlaps no clip; clips must cover the video");
        v[i] = 1.0 / static_cast<double>(n[i]);
    }
    return v;
}

// Spec-facing view of the credits: one entry per (trajectory, clip) pair.
inline std::vector<SubTrajectoryValue> sub_trajectory_values(std::span<const Trajectory> trajs,
                                                             std::span<const Clip> clips) {
    std::vector<double> credit = sub_trajectory_credit(trajs, clips);
    std::vector<SubTrajectoryValue> out;
    for (const Clip& c : clips) {
        auto emit = [&](int i) { out.push_back({trajs[i].id, c.index, credit[i]}); };
        for (int i : c.full_tracks) emit(i);
        for (int i : c.partial_tracks) emit(i);
    }
    return out;
}

} // namespace rigidpath
