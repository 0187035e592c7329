#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rigidpath/candidates.hpp"
#include "rigidpath/clips.hpp"
#include "rigidpath/geometry.hpp"
#include "rigidpath/parallel.hpp"

namespace rigidpath {

struct GraphParams {
    double sigma = 0.15; // of the geometric-error weighting G = exp(-g^2 / 2 sigma^2)
};

// exp(-g^2 / (2 sigma^2)) for a member's mean geometric error.
inline double error_weight(double mean_error, const GraphParams& params) {
    const double z = mean_error / params.sigma;
    return std::exp(-0.5 * z * z);
}

struct GraphEdge {
    int from = 0; // candidate index in clip q
    int to = 0;   // candidate index in clip q+1
    double weight = 0.0;
};

// Layered DAG skeleton the path search runs on. Kept separate from the motion
// candidates so the search can be exercised on synthetic graphs directly.
struct LayeredGraph {
    std::vector<int> layer_sizes;
    std::vector<double> omega0;                 // start value per layer-0 node
    std::vector<std::vector<GraphEdge>> edges;  // edges[q]: layer q -> q+1
    std::vector<std::vector<long>> node_mass;   // member counts, for bridging
};

struct MotionGraph {
    std::vector<std::vector<RigidMotion>> layers; // candidates per clip
    LayeredGraph core;

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.size();
        return n;
    }
    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& e : core.edges) n += e.size();
        return n;
    }
};

struct MotionPath {
    std::vector<int> node_per_clip;
    double score = 0.0;
    bool bridged = false;
};

// Edge weight of Eq-style trajectory counting: common members keep their clip
// credit, members newly appearing in the next clip add theirs, all weighted by
// the geometric-error term under the *next* motion.
inline double edge_weight(const RigidMotion& prev, const RigidMotion& next,
                          std::span<const Trajectory> trajs, std::span<const double> credit,
                          const GraphParams& params, bool* has_common = nullptr) {
    double weight = 0.0;
    bool common = false;
    std::size_t i = 0, j = 0;
    while (i < prev.members.size() && j < next.members.size()) {
        if (prev.members[i] == next.members[j]) {
            common = true;
            const int id = next.members[j];
            weight += error_weight(next.member_mean_error[j], params) * credit[static_cast<std::size_t>(id)];
            ++i;
            ++j;
        } else if (prev.members[i] < next.members[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    for (std::size_t k = 0; k < next.members.size(); ++k) {
        const int id = next.members[k];
        const int start = trajs[static_cast<std::size_t>(id)].start_frame;
        // Newly appeared: starts inside the next window, after the previous one.
        if (start > prev.window.last && next.window.contains(start))
            weight += error_weight(next.member_mean_error[k], params) * credit[static_cast<std::size_t>(id)];
    }
    if (has_common) *has_common = common;
    return common ? weight : 0.0;
}

// Start value: credit of the motion's own members, error-weighted.
inline double start_value(const RigidMotion& motion, std::span<const double> credit,
                          const GraphParams& params) {
    double omega = 0.0;
    for (std::size_t k = 0; k < motion.members.size(); ++k)
        omega += error_weight(motion.member_mean_error[k], params) *
                 credit[static_cast<std::size_t>(motion.members[k])];
    return omega;
}

// Nodes are the per-clip candidates; a directed edge joins candidates of
// consecutive clips that share at least one member track.
inline MotionGraph build_graph(std::vector<std::vector<RigidMotion>> candidates,
                               std::span<const Trajectory> trajs, std::span<const double> credit,
                               const GraphParams& params = {}, unsigned threads = 0) {
    MotionGraph graph;
    graph.layers = std::move(candidates);
    for (std::size_t q = 0; q < graph.layers.size(); ++q)
        if (graph.layers[q].empty())
            throw pipeline_error("clip " + std::to_string(q) + " has no motion candidates");

    graph.core.layer_sizes.reserve(graph.layers.size());
    for (const auto& layer : graph.layers) {
        graph.core.layer_sizes.push_back(static_cast<int>(layer.size()));
        std::vector<long> mass;
        for (const RigidMotion& m : layer) mass.push_back(static_cast<long>(m.members.size()));
        graph.core.node_mass.push_back(std::move(mass));
    }
    for (const RigidMotion& m : graph.layers.front())
        graph.core.omega0.push_back(start_value(m, credit, params));

    graph.core.edges.resize(graph.layers.empty() ? 0 : graph.layers.size() - 1);
    for (std::size_t q = 0; q + 1 < graph.layers.size(); ++q) {
        const auto& from_layer = graph.layers[q];
        const auto& to_layer = graph.layers[q + 1];
        std::vector<GraphEdge> all(from_layer.size() * to_layer.size());
        parallel_for(all.size(), threads, [&](std::size_t i) {
            const int a = static_cast<int>(i / to_layer.size());
            const int b = static_cast<int>(i % to_layer.size());
            bool common = false;
            const double w = edge_weight(from_layer[static_cast<std::size_t>(a)],
                                         to_layer[static_cast<std::size_t>(b)], trajs, credit,
                                         params, &common);
            all[i] = {common ? a : -1, b, w};
        });
        for (const GraphEdge& e : all)
            if (e.from >= 0) graph.core.edges[q].push_back(e);
    }
    return graph;
}

// Dynamic program over the layered DAG: the best score reaching each node is
// the max over incoming edges, seeded with the layer-0 start values. Ties
// prefer the earlier layer-0 candidate, then the earlier predecessor. A layer
// with no reachable incoming edge is bridged with a zero-weight edge between
// the largest-membership nodes.
inline MotionPath dominant_path(const LayeredGraph& graph) {
    const std::size_t layers = graph.layer_sizes.size();
    if (layers == 0) throw pipeline_error("empty motion graph");
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    struct Cell {
        double score = kNegInf;
        int start = -1;
        int pred = -1;
    };
    std::vector<std::vector<Cell>> dp(layers);
    dp[0].resize(static_cast<std::size_t>(graph.layer_sizes[0]));
    for (std::size_t j = 0; j < dp[0].size(); ++j)
        dp[0][j] = {graph.omega0[j], static_cast<int>(j), -1};

    MotionPath path;
    for (std::size_t q = 1; q < layers; ++q) {
        dp[q].resize(static_cast<std::size_t>(graph.layer_sizes[q]));
        auto relax = [&](const GraphEdge& e) {
            const Cell& src = dp[q - 1][static_cast<std::size_t>(e.from)];
            if (src.score == kNegInf) return;
            Cell& dst = dp[q][static_cast<std::size_t>(e.to)];
            const double cand = src.score + e.weight;
            if (cand > dst.score ||
                (cand == dst.score &&
                 (src.start < dst.start || (src.start == dst.start && e.from < dst.pred))))
                dst = {cand, src.start, e.from};
        };
        for (const GraphEdge& e : graph.edges[q - 1]) relax(e);

        const bool reachable =
            std::any_of(dp[q].begin(), dp[q].end(), [&](const Cell& c) { return c.score != kNegInf; });
        if (!reachable) {
            // Disconnected layer: force one zero-weight edge between the
            // largest-membership reachable node and the largest-membership
            // target so the pipeline stays total. Flagged to the caller.
            path.bridged = true;
            int best_from = -1;
            long best_mass = -1;
            for (std::size_t n = 0; n < dp[q - 1].size(); ++n) {
                if (dp[q - 1][n].score == kNegInf) continue;
                const long mass = graph.node_mass[q - 1][n];
                if (mass > best_mass) {
                    best_mass = mass;
                    best_from = static_cast<int>(n);
                }
            }
            int best_to = 0;
            best_mass = -1;
            for (std::size_t n = 0; n < dp[q].size(); ++n)
                if (graph.node_mass[q][n] > best_mass) {
                    best_mass = graph.node_mass[q][n];
                    best_to = static_cast<int>(n);
                }
            relax({best_from, best_to, 0.0});
        }
    }

    int end = -1;
    Cell best;
    for (std::size_t k = 0; k < dp[layers - 1].size(); ++k) {
        const Cell& c = dp[layers - 1][k];
        if (c.score == kNegInf) continue;
        if (end < 0 || c.score > best.score ||
            (c.score == best.score && c.start < best.start))
            best = c, end = static_cast<int>(k);
    }
    if (end < 0) throw pipeline_error("no spanning motion path");

    path.score = best.score;
    path.node_per_clip.assign(layers, 0);
    int node = end;
    for (std::size_t q = layers; q-- > 0;) {
        path.node_per_clip[q] = node;
        node = dp[q][static_cast<std::size_t>(node)].pred;
    }
    return path;
}

inline MotionPath dominant_path(const MotionGraph& graph) { return dominant_path(graph.core); }

} // namespace rigidpath
