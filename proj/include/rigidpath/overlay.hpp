#pragma once

#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "rigidpath/errors.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

// Binary PPM frame with labeled feature markers: background red, everything
// else green. Mirrors the usual inspection rendering for these pipelines.
inline void export_frame(const std::string& path, std::span<const Trajectory> trajs,
                         const VideoMeta& meta, std::span<const char> background, int frame,
                         int marker_radius = 2) {
    if (frame < 0 || frame >= meta.frame_count)
        throw bounds_error("frame " + std::to_string(frame) + " outside video of " +
                           std::to_string(meta.frame_count) + " frames");
    const int w = meta.frame_width, h = meta.frame_height;
    std::vector<unsigned char> img(static_cast<std::size_t>(w) * h * 3, 255);
    auto draw = [&](const Vec2& p, unsigned char r, unsigned char g, unsigned char b) {
        const int cx = static_cast<int>(p.x), cy = static_cast<int>(p.y);
        for (int dy = -marker_radius; dy <= marker_radius; ++dy)
            for (int dx = -marker_radius; dx <= marker_radius; ++dx) {
                if (dx * dx + dy * dy > marker_radius * marker_radius) continue;
                const int x = cx + dx, y = cy + dy;
                if (x < 0 || x >= w || y < 0 || y >= h) continue;
                unsigned char* px = &img[(static_cast<std::size_t>(y) * w + x) * 3];
                px[0] = r;
                px[1] = g;
                px[2] = b;
            }
    };
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (!trajs[i].visible_at(frame)) continue;
        if (background[i]) draw(trajs[i].at_frame(frame), 220, 40, 40);
        else draw(trajs[i].at_frame(frame), 40, 190, 60);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pipeline_error("cannot open for writing: " + path);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!out) throw pipeline_error("write failed: " + path);
}

inline void export_overlay(const std::string& dir, std::span<const Trajectory> trajs,
                           const VideoMeta& meta, std::span<const char> background) {
    for (int f = 0; f < meta.frame_count; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "/frame_%04d.ppm", f);
        export_frame(dir + name, trajs, meta, background, f);
    }
}

} // namespace rigidpath
