#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rigidpath/candidates.hpp"
#include "rigidpath/clips.hpp"
#include "rigidpath/errors.hpp"
#include "rigidpath/geometry.hpp"
#include "rigidpath/labeling.hpp"
#include "rigidpath/motion_graph.hpp"

namespace rigidpath {

// Every knob of the pipeline with its published default.
struct PipelineConfig {
    GeometryParams geometry;
    RansacParams ransac;
    ClipParams clips;
    GridParams grid;
    GraphParams graph;
    FilterParams filter;
    std::uint64_t rng_seed = 1;
    unsigned threads = 0; // 0 = hardware concurrency
};

namespace detail {

template <typename T>
void get_if_present(const nlohmann::ordered_json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

} // namespace detail

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["geometry"] = {{"max_frame_gap", c.geometry.max_frame_gap},
                     {"epsilon_f", c.geometry.epsilon_f},
                     {"theta_member", c.geometry.theta_member},
                     {"min_tested_pairs", c.geometry.min_tested_pairs},
                     {"max_condition", c.geometry.max_condition},
                     {"collinearity_frac", c.geometry.collinearity_frac},
                     {"collinearity_tol", c.geometry.collinearity_tol}};
    j["ransac"] = {{"iterations", c.ransac.iterations},
                   {"sample_size", c.ransac.sample_size},
                   {"inlier_ratio_accept", c.ransac.inlier_ratio_accept},
                   {"max_combo", c.ransac.max_combo},
                   {"combo_budget", c.ransac.combo_budget},
                   {"combo_enum_cap", c.ransac.combo_enum_cap},
                   {"adaptive_stop", c.ransac.adaptive_stop},
                   {"adaptive_confidence", c.ransac.adaptive_confidence},
                   {"combo_consistency", c.ransac.combo_consistency}};
    j["clips"] = {{"min_len", c.clips.min_len},
                  {"max_len", c.clips.max_len},
                  {"full_ratio", c.clips.full_ratio}};
    j["grid"] = {{"cell_size", c.grid.cell_size}, {"overlap_ratio", c.grid.overlap_ratio}};
    j["graph"] = {{"sigma", c.graph.sigma}};
    j["filter"] = {{"neighbor_dist_frac", c.filter.neighbor_dist_frac},
                   {"sigma_d_frac", c.filter.sigma_d_frac},
                   {"sigma_c", c.filter.sigma_c},
                   {"threshold", c.filter.threshold}};
    j["rng_seed"] = c.rng_seed;
    j["threads"] = c.threads;
    return j;
}

inline PipelineConfig config_from_json(const nlohmann::ordered_json& j) {
    PipelineConfig c;
    if (auto it = j.find("geometry"); it != j.end()) {
        detail::get_if_present(*it, "max_frame_gap", c.geometry.max_frame_gap);
        detail::get_if_present(*it, "epsilon_f", c.geometry.epsilon_f);
        detail::get_if_present(*it, "theta_member", c.geometry.theta_member);
        detail::get_if_present(*it, "min_tested_pairs", c.geometry.min_tested_pairs);
        detail::get_if_present(*it, "max_condition", c.geometry.max_condition);
        detail::get_if_present(*it, "collinearity_frac", c.geometry.collinearity_frac);
        detail::get_if_present(*it, "collinearity_tol", c.geometry.collinearity_tol);
    }
    if (auto it = j.find("ransac"); it != j.end()) {
        detail::get_if_present(*it, "iterations", c.ransac.iterations);
        detail::get_if_present(*it, "sample_size", c.ransac.sample_size);
        detail::get_if_present(*it, "inlier_ratio_accept", c.ransac.inlier_ratio_accept);
        detail::get_if_present(*it, "max_combo", c.ransac.max_combo);
        detail::get_if_present(*it, "combo_budget", c.ransac.combo_budget);
        detail::get_if_present(*it, "combo_enum_cap", c.ransac.combo_enum_cap);
        detail::get_if_present(*it, "adaptive_stop", c.ransac.adaptive_stop);
        detail::get_if_present(*it, "adaptive_confidence", c.ransac.adaptive_confidence);
        detail::get_if_present(*it, "combo_consistency", c.ransac.combo_consistency);
    }
    if (auto it = j.find("clips"); it != j.end()) {
        detail::get_if_present(*it, "min_len", c.clips.min_len);
        detail::get_if_present(*it, "max_len", c.clips.max_len);
        detail::get_if_present(*it, "full_ratio", c.clips.full_ratio);
    }
    if (auto it = j.find("grid"); it != j.end()) {
        detail::get_if_present(*it, "cell_size", c.grid.cell_size);
        detail::get_if_present(*it, "overlap_ratio", c.grid.overlap_ratio);
    }
    if (auto it = j.find("graph"); it != j.end())
        detail::get_if_present(*it, "sigma", c.graph.sigma);
    if (auto it = j.find("filter"); it != j.end()) {
        detail::get_if_present(*it, "neighbor_dist_frac", c.filter.neighbor_dist_frac);
        detail::get_if_present(*it, "sigma_d_frac", c.filter.sigma_d_frac);
        detail::get_if_present(*it, "sigma_c", c.filter.sigma_c);
        detail::get_if_present(*it, "threshold", c.filter.threshold);
    }
    detail::get_if_present(j, "rng_seed", c.rng_seed);
    detail::get_if_present(j, "threads", c.threads);
    return c;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pipeline_error("cannot open config file: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("config: ") + e.what(), 1);
    }
    return config_from_json(j);
}

inline void save_config(const std::string& path, const PipelineConfig& c) {
    std::ofstream out(path);
    if (!out) throw pipeline_error("cannot open for writing: " + path);
    out << to_json(c).dump(2) << '\n';
}

} // namespace rigidpath
