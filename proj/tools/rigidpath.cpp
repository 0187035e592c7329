#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rigidpath/config.hpp"
#include "rigidpath/io.hpp"
#include "rigidpath/overlay.hpp"
#include "rigidpath/pipeline.hpp"
#include "rigidpath/synth.hpp"

namespace {

constexpr int kExitParseError = 2;
constexpr int kExitPipelineError = 3;
constexpr int kExitAssumptionFlags = 4;

void dump_clips(const rigidpath::PipelineResult& r) {
    for (const rigidpath::Clip& c : r.clips)
        std::printf("%d %d %d %d\n", c.index, c.window.first, c.window.last, c.forced ? 1 : 0);
}

void dump_candidates(const rigidpath::PipelineResult& r, const rigidpath::CellGrid& grid) {
    for (const auto& layer : r.graph.layers)
        for (const rigidpath::RigidMotion& m : layer) {
            std::string origin_cell = "-";
            if (m.origin.rfind("cell:", 0) == 0) {
                const std::size_t c = std::stoul(m.origin.substr(5));
                origin_cell = std::to_string(static_cast<int>(grid.cells[c].x0)) + "," +
                              std::to_string(static_cast<int>(grid.cells[c].y0));
            }
            std::printf("%d %s %zu %s\n", m.clip_index, origin_cell.c_str(), m.members.size(),
                        m.origin.c_str());
        }
}

void dump_graph(const rigidpath::PipelineResult& r, const rigidpath::PipelineConfig& config) {
    for (std::size_t q = 0; q < r.graph.layers.size(); ++q)
        for (std::size_t n = 0; n < r.graph.layers[q].size(); ++n) {
            const auto& m = r.graph.layers[q][n];
            std::printf("NODE %zu %zu %zu %.9g\n", q, n, m.members.size(),
                        rigidpath::start_value(m, r.credit, config.graph));
        }
    for (std::size_t q = 0; q < r.graph.core.edges.size(); ++q)
        for (const rigidpath::GraphEdge& e : r.graph.core.edges[q])
            std::printf("EDGE %zu %d %d %.9g\n", q, e.from, e.to, e.weight);
}

int run_command(const std::string& input_path, const std::string& config_path,
                const std::string& output_path, const std::string& truth_path,
                const std::string& metrics_path, const std::string& overlay_dir, long seed,
                int threads, bool opt_dump_clips, bool opt_dump_candidates, bool opt_dump_graph,
                bool opt_dump_stages) {
    rigidpath::PipelineConfig config;
    if (!config_path.empty()) config = rigidpath::load_config(config_path);
    if (seed >= 0) config.rng_seed = static_cast<std::uint64_t>(seed);
    if (threads >= 0) config.threads = static_cast<unsigned>(threads);

    const rigidpath::TrajectorySet input = rigidpath::read_trajectories(input_path);
    if (input.trajs.empty()) throw rigidpath::parse_error("trajectory file has no trajectories", 1);

    rigidpath::PipelineResult result = rigidpath::run_pipeline(config, input);

    rigidpath::write_labels(output_path, input.trajs, result.labels_filtered);
    if (opt_dump_stages) {
        rigidpath::write_labels(output_path + ".path", input.trajs, result.labels_path);
        rigidpath::write_labels(output_path + ".global", input.trajs, result.labels_global);
    }

    if (!truth_path.empty()) {
        const auto truth_by_id = rigidpath::read_labels(truth_path);
        std::vector<char> truth(input.trajs.size(), 0);
        for (std::size_t i = 0; i < input.trajs.size(); ++i) {
            auto it = truth_by_id.find(input.trajs[i].id);
            if (it == truth_by_id.end())
                throw rigidpath::pipeline_error("ground truth is missing trajectory id " +
                                                std::to_string(input.trajs[i].id));
            truth[i] = it->second ? 1 : 0;
        }
        rigidpath::score_against_truth(result, truth);
        std::fprintf(stderr, "precision=%.4f recall=%.4f f=%.4f\n", result.report.filtered.precision,
                     result.report.filtered.recall, result.report.filtered.f_score);
    }
    if (!metrics_path.empty()) {
        std::ofstream out(metrics_path);
        if (!out) throw rigidpath::pipeline_error("cannot open for writing: " + metrics_path);
        out << rigidpath::report_to_json(result.report).dump(2) << '\n';
    }
    if (!overlay_dir.empty()) {
        std::filesystem::create_directories(overlay_dir);
        rigidpath::export_overlay(overlay_dir, input.trajs, input.meta, result.labels_filtered);
    }

    if (opt_dump_clips) dump_clips(result);
    if (opt_dump_candidates)
        dump_candidates(result, rigidpath::CellGrid::build(input.meta, config.grid));
    if (opt_dump_graph) dump_graph(result, config);

    if (result.report.any_flag()) {
        std::fprintf(stderr, "assumption flags:%s%s%s%s\n",
                     result.report.flag_near_static_camera ? " near-static-camera" : "",
                     result.report.flag_short_tracks ? " short-tracks" : "",
                     result.report.flag_bridged_path ? " bridged-path" : "",
                     result.report.flag_global_fallback ? " global-fallback" : "");
        return kExitAssumptionFlags;
    }
    return 0;
}

int synth_command(const std::string& scenario_name, long seed, const std::string& out_dir) {
    const auto library = rigidpath::synth::scenario_library();
    const rigidpath::synth::Scenario& sc = rigidpath::synth::find_scenario(library, scenario_name);
    const auto result = rigidpath::synth::render_scene(sc.spec, static_cast<std::uint64_t>(seed));
    for (const std::string& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    std::filesystem::create_directories(out_dir);
    rigidpath::write_trajectories(out_dir + "/trajectories.txt", result.set);
    std::vector<char> truth(result.set.trajs.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
        truth[i] = result.truth.is_background(i) ? 1 : 0;
    rigidpath::write_labels(out_dir + "/ground_truth.txt", result.set.trajs, truth);
    std::fprintf(stderr, "%s: %zu trajectories, %d frames%s\n", sc.name.c_str(),
                 result.set.trajs.size(), sc.spec.frame_count,
                 sc.expected_fail ? " (expected-fail scenario)" : "");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Static-background trajectory identification via dominant rigid motion"};
    app.require_subcommand(1);

    std::string input_path, config_path, output_path, truth_path, metrics_path, overlay_dir;
    long seed = -1;
    int threads = -1;
    bool opt_clips = false, opt_candidates = false, opt_graph = false, opt_stages = false;

    CLI::App* run = app.add_subcommand("run", "Label the background trajectories of one video");
    run->add_option("--input", input_path, "Trajectory file")->required();
    run->add_option("--config", config_path, "JSON config; defaults are used when omitted");
    run->add_option("--output", output_path, "Output label file")->required();
    run->add_option("--ground-truth", truth_path, "Ground-truth label file for scoring");
    run->add_option("--metrics", metrics_path, "Write a metrics JSON report here");
    run->add_option("--seed", seed, "Override the config RNG seed");
    run->add_option("--threads", threads, "Override the config thread count");
    run->add_option("--overlay", overlay_dir, "Write per-frame PPM overlays to this directory");
    run->add_flag("--dump-clips", opt_clips, "Print clip windows: index first last forced");
    run->add_flag("--dump-candidates", opt_candidates, "Print per-clip candidates");
    run->add_flag("--dump-graph", opt_graph, "Print NODE/EDGE lines of the motion graph");
    run->add_flag("--dump-stages", opt_stages, "Also write per-stage label files");

    std::string scenario, out_dir;
    long synth_seed = 1;
    CLI::App* synth = app.add_subcommand("synth", "Render a named synthetic scenario");
    synth->add_option("--scenario", scenario, "Scenario name")->required();
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_command(input_path, config_path, output_path, truth_path, metrics_path,
                               overlay_dir, seed, threads, opt_clips, opt_candidates, opt_graph,
                               opt_stages);
        return synth_command(scenario, synth_seed, out_dir);
    } catch (const rigidpath::parse_error& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitParseError;
    } catch (const rigidpath::pipeline_error& e) {
        std::fprintf(stderr, "pipeline error: %s\n", e.what());
        return kExitPipelineError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitPipelineError;
    }
}
