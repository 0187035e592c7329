#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rigidpath/errors.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

struct TrajectorySet {
    VideoMeta meta;
    std::vector<Trajectory> trajs;
    bool has_colors = false;
};

namespace detail {

class LineTokens {
public:
    LineTokens(std::string_view line, long line_no) : rest_(line), line_no_(line_no) {}

    bool done() {
        skip_ws();
        return rest_.empty();
    }

    std::string_view next(const char* what) {
        skip_ws();
        if (rest_.empty())
            throw parse_error(std::string("missing ") + what, line_no_);
        std::size_t end = 0;
        while (end < rest_.size() && !std::isspace(static_cast<unsigned char>(rest_[end]))) ++end;
        std::string_view tok = rest_.substr(0, end);
        rest_.remove_prefix(end);
        return tok;
    }

    long next_int(const char* what) {
        std::string_view tok = next(what);
        long value = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw parse_error(std::string("bad integer for ") + what + ": '" + std::string(tok) + "'",
                              line_no_);
        return value;
    }

    double next_double(const char* what) {
        std::string_view tok = next(what);
        double value = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw parse_error(std::string("bad number for ") + what + ": '" + std::string(tok) + "'",
                              line_no_);
        return value;
    }

private:
    void skip_ws() {
        while (!rest_.empty() && std::isspace(static_cast<unsigned char>(rest_.front())))
            rest_.remove_prefix(1);
    }

    std::string_view rest_;
    long line_no_;
};

inline void append_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v); // shortest exact round-trip
    (void)ec;
    out.append(buf, p);
}

} // namespace detail

// Trajectory file: `TRAJ1 <w> <h> <frame_count> [RGB]` then one line per track:
// `<id> <start_frame> <n> x0 y0 [r0 g0 b0] x1 y1 ...`.
inline TrajectorySet read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pipeline_error("cannot open trajectory file: " + path);

    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw parse_error("empty file, expected TRAJ1 header", 1);
    ++line_no;
    detail::LineTokens header(line, line_no);
    if (header.next("magic") != "TRAJ1")
        throw parse_error("expected TRAJ1 header", line_no);

    TrajectorySet set;
    set.meta.frame_width = static_cast<int>(header.next_int("frame_width"));
    set.meta.frame_height = static_cast<int>(header.next_int("frame_height"));
    set.meta.frame_count = static_cast<int>(header.next_int("frame_count"));
    if (set.meta.frame_width <= 0 || set.meta.frame_height <= 0 || set.meta.frame_count <= 0)
        throw parse_error("video dimensions must be strictly positive", line_no);
    if (!header.done()) {
        if (header.next("header flag") != "RGB")
            throw parse_error("unexpected token after frame_count (only RGB is allowed)", line_no);
        set.has_colors = true;
        if (!header.done()) throw parse_error("trailing tokens after RGB", line_no);
    }

    std::unordered_set<int> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        detail::LineTokens tok(line, line_no);
        if (tok.done()) continue; // blank line

        Trajectory t;
        t.id = static_cast<int>(tok.next_int("id"));
        t.start_frame = static_cast<int>(tok.next_int("start_frame"));
        const long n = tok.next_int("point count");
        if (!seen_ids.insert(t.id).second)
            throw parse_error("duplicate trajectory id " + std::to_string(t.id), line_no);
        if (n < 1) throw parse_error("point count must be >= 1", line_no);
        if (t.start_frame < 0 || t.start_frame + n - 1 >= set.meta.frame_count)
            throw parse_error("trajectory frames [" + std::to_string(t.start_frame) + "," +
                                  std::to_string(t.start_frame + n - 1) + "] exceed video of " +
                                  std::to_string(set.meta.frame_count) + " frames",
                              line_no);

        t.points.reserve(static_cast<std::size_t>(n));
        if (set.has_colors) t.colors.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) {
            Vec2 p;
            p.x = tok.next_double("x");
            p.y = tok.next_double("y");
            if (p.x < 0 || p.x > set.meta.frame_width || p.y < 0 || p.y > set.meta.frame_height)
                throw parse_error("point " + std::to_string(i) + " outside image bounds", line_no);
            t.points.push_back(p);
            if (set.has_colors) {
                Rgb c{tok.next_double("r"), tok.next_double("g"), tok.next_double("b")};
                for (double v : c)
                    if (v < 0.0 || v > 1.0)
                        throw parse_error("color channel outside [0,1]", line_no);
                t.colors.push_back(c);
            }
        }
        if (!tok.done())
            throw parse_error("more values than the declared point count " + std::to_string(n),
                              line_no);
        set.trajs.push_back(std::move(t));
    }
    return set;
}

inline void write_trajectories(const std::string& path, const TrajectorySet& set) {
    std::ofstream out(path);
    if (!out) throw pipeline_error("cannot open for writing: " + path);

    std::string buf;
    buf += "TRAJ1 " + std::to_string(set.meta.frame_width) + ' ' +
           std::to_string(set.meta.frame_height) + ' ' + std::to_string(set.meta.frame_count);
    if (set.has_colors) buf += " RGB";
    buf += '\n';
    out << buf;

    for (const Trajectory& t : set.trajs) {
        buf.clear();
        buf += std::to_string(t.id) + ' ' + std::to_string(t.start_frame) + ' ' +
               std::to_string(t.points.size());
        for (std::size_t i = 0; i < t.points.size(); ++i) {
            buf += ' ';
            detail::append_double(buf, t.points[i].x);
            buf += ' ';
            detail::append_double(buf, t.points[i].y);
            if (set.has_colors) {
                for (double v : t.colors[i]) {
                    buf += ' ';
                    detail::append_double(buf, v);
                }
            }
        }
        buf += '\n';
        out << buf;
    }
    if (!out) throw pipeline_error("write failed: " + path);
}

// Label file: one `<id> <0|1>` line per trajectory, 1 = background.
inline void write_labels(const std::string& path, std::span<const Trajectory> trajs,
                         std::span<const char> background) {
    std::ofstream out(path);
    if (!out) throw pipeline_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < trajs.size(); ++i)
        out << trajs[i].id << ' ' << (background[i] ? 1 : 0) << '\n';
    if (!out) throw pipeline_error("write failed: " + path);
}

inline std::unordered_map<int, bool> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pipeline_error("cannot open label file: " + path);
    std::unordered_map<int, bool> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::LineTokens tok(line, line_no);
        if (tok.done()) continue;
        const int id = static_cast<int>(tok.next_int("id"));
        const long label = tok.next_int("label");
        if (label != 0 && label != 1) throw parse_error("label must be 0 or 1", line_no);
        if (!tok.done()) throw parse_error("trailing tokens after label", line_no);
        if (!labels.emplace(id, label == 1).second)
            throw parse_error("duplicate id " + std::to_string(id), line_no);
    }
    return labels;
}

} // namespace rigidpath
