// Batch front-end for the multi-station UAV sensing simulator: scene
// generation, echo synthesis, detection, fusion, CRLB maps, selection
// training and Monte Carlo campaigns, all writing analysis-ready files.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "uavsim/config.hpp"
#include "uavsim/crlb.hpp"
#include "uavsim/harness.hpp"
#include "uavsim/io.hpp"

namespace fs = std::filesystem;
using namespace uavsim;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string scene_path;
    std::string model_path;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RootConfig load_or_default(const CommonArgs& args) {
    if (!args.config_path.empty()) return load_config(args.config_path);
    return RootConfig{};
}

Scene obtain_scene(const CommonArgs& args, const RootConfig& cfg) {
    if (!args.scene_path.empty()) return load_scene(args.scene_path);
    return make_scene(cfg.scene, args.seed, cfg.waveform.wavelength());
}

Recognizer obtain_recognizer(const CommonArgs& args, const RootConfig& cfg) {
    Recognizer rec;
    rec.segment_count = cfg.segment_count;
    if (!args.model_path.empty()) {
        rec.model = svm_from_json(json::parse(read_text_file(args.model_path)));
    } else {
        rec = train_recognizer(cfg.waveform, cfg.scene.noise_power,
                               derive_seed(args.seed, 0x3ec0u));
        rec.segment_count = cfg.segment_count;
    }
    return rec;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.output_dir);
    return (fs::path(args.output_dir) / name).string();
}

int cmd_scene(const CommonArgs& args) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    save_scene(scene, out_path(args, "scene.json"));
    std::cout << "wrote scene.json (" << scene.stations.size() << " stations, "
              << scene.uavs.size() << " uavs, " << scene.reflectors.size() << " reflectors)\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    const PipelineConfig pipe = cfg.pipeline();
    save_scene(scene, out_path(args, "scene.json"));
    for (const auto& bs : scene.stations) {
        auto paths = enumerate_paths(scene, bs, pipe.noise_power, cfg.waveform.wavelength(),
                                     pipe.paths);
        std::vector<PropagationPath> usable;
        const double max_range = 0.99 * cfg.waveform.unambiguous_range();
        for (const auto& p : paths)
            if (p.apparent_range <= max_range) usable.push_back(p);
        const EchoCube cube = synthesize_if_cube(usable, cfg.waveform, bs, pipe.noise_power,
                                                 derive_seed(args.seed, 0xc0beu + bs.id));
        const std::string stem = "cube_bs" + std::to_string(bs.id);
        save_cube(cube, out_path(args, stem + ".bin"), out_path(args, stem + ".json"));
    }
    std::cout << "wrote " << scene.stations.size() << " echo cubes\n";
    return 0;
}

int cmd_detect(const CommonArgs& args) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    const PipelineConfig pipe = cfg.pipeline();
    const Recognizer rec = obtain_recognizer(args, cfg);

    std::vector<Detection> all;
    for (std::size_t n = 0; n < scene.stations.size(); ++n) {
        const auto obs = observe_station(scene, static_cast<int>(n), pipe, rec, args.seed);
        all.insert(all.end(), obs.detections.begin(), obs.detections.end());
    }
    write_text_file(out_path(args, "detections.csv"), detections_to_csv(all));
    write_text_file(out_path(args, "model.json"), to_json(rec.model).dump(2) + "\n");
    if (!rec.corpus_features.empty())
        write_text_file(out_path(args, "features.csv"),
                        features_to_csv(rec.corpus_features, rec.corpus_labels));
    std::cout << "wrote detections.csv (" << all.size() << " detections)\n";
    return 0;
}

int cmd_fuse(const CommonArgs& args) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    const PipelineConfig pipe = cfg.pipeline();
    const Recognizer rec = obtain_recognizer(args, cfg);

    std::vector<int> active(scene.stations.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = static_cast<int>(i);
    const PipelineResult result = run_pipeline(scene, active, pipe, rec, args.seed);

    std::vector<Detection> all;
    for (const auto& obs : result.observations)
        all.insert(all.end(), obs.detections.begin(), obs.detections.end());
    write_text_file(out_path(args, "detections.csv"), detections_to_csv(all));

    GridSpec spec;
    spec.origin = {0.0, 0.0};
    spec.cell_size = pipe.grid_cell;
    spec.width_cells = static_cast<int>(std::ceil(scene.area_width / pipe.grid_cell));
    spec.height_cells = static_cast<int>(std::ceil(scene.area_height / pipe.grid_cell));
    GridMap map = GridMap::create(spec, pipe.grid_prior);
    for (const auto& obs : result.observations)
        map = fuse_station(std::move(map), obs.detections,
                           scene.stations[static_cast<std::size_t>(obs.bs_index)], pipe.waveform,
                           pipe.cfar.p_fa);
    const ProbabilityField field = normalize_and_threshold(map, pipe.threshold_fraction);
    save_probability_field(field, out_path(args, "grid.pgm"), out_path(args, "grid.json"));
    write_text_file(out_path(args, "clusters.csv"), clusters_to_csv(result.clusters));
    std::cout << "wrote grid.pgm, clusters.csv (" << result.clusters.size() << " clusters)\n";
    return 0;
}

int cmd_crlb(const CommonArgs& args, double grid_step) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    if (grid_step <= 0.0) throw InputError("crlb: --grid-step must be > 0");

    std::string csv = "x_m,y_m,crlb_m2\n";
    const int nx = static_cast<int>(scene.area_width / grid_step) + 1;
    const int ny = static_cast<int>(scene.area_height / grid_step) + 1;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Vec2 p{ix * grid_step, iy * grid_step};
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
                std::vector<FimWeights> weights;
                for (const auto& bs : scene.stations) {
                    const double r = distance(bs.position, p);
                    const double snr = direct_snr(bs, r, cfg.scene.target_rcs,
                                                  cfg.waveform.wavelength(),
                                                  cfg.scene.noise_power);
                    weights.push_back(make_fim_weights(bs, snr, cfg.waveform));
                }
                value = crlb(efim(scene, p, weights));
            } catch (const std::exception&) {
                // unobservable or degenerate point: leave nan
            }
            csv += fmt9(p.x) + ',' + fmt9(p.y) + ',' + fmt9(value) + '\n';
        }
    }
    write_text_file(out_path(args, "crlb_map.csv"), csv);
    std::cout << "wrote crlb_map.csv (" << nx * ny << " points)\n";
    return 0;
}

int cmd_train(const CommonArgs& args) {
    const RootConfig cfg = load_or_default(args);
    const Scene scene = obtain_scene(args, cfg);
    const PipelineConfig pipe = cfg.pipeline();
    const Recognizer rec = obtain_recognizer(args, cfg);

    ScenarioEnv env(scene, pipe, rec, cfg.selection.eval_runs, derive_seed(args.seed, 0xe4fu));
    const int n = env.station_count();

    RewardConfig rcfg = cfg.reward_cfg;
    rcfg.objective = cfg.selection.objective;
    rcfg.mse_cap = cfg.selection.mse_cap;

    TrainOptions opt;
    if (rcfg.objective == Objective::P3) {
        // discretize the error landscape first (FCM states over random subsets)
        CounterRng rng(derive_seed(args.seed, 0xfc3u));
        std::vector<double> rmse_samples;
        for (int i = 0; i < 40; ++i) {
            SelectionState s{static_cast<std::uint32_t>(rng.uniform_int(1, (1 << n) - 1)), n};
            const auto mse = env(s);
            double sum = 0.0;
            for (double m : mse) sum += m;
            rmse_samples.push_back(std::sqrt(sum / static_cast<double>(mse.size())));
        }
        opt.encoding = StateEncoding::ErrorState;
        opt.error_model = fcm_states(rmse_samples, 5, 2.0);
    }

    const QPolicy policy = train(env.as_function(), n, rcfg, cfg.selection.episodes,
                                 derive_seed(args.seed, 0x71a11u), opt);
    write_text_file(out_path(args, "policy.json"), to_json(policy).dump() + "\n");
    write_text_file(out_path(args, "training_curve.csv"), training_curve_to_csv(policy));

    const SelectionState chosen =
        rcfg.objective == Objective::P3
            ? select_p3(policy, env.as_function(), rcfg)
            : greedy_rollout(policy, env.as_function(), SelectionState::all_off(n));
    std::string mask;
    for (int i = 0; i < n; ++i) mask += chosen.active(i) ? '1' : '0';
    std::cout << "trained " << to_string(rcfg.objective) << " policy; selected stations " << mask
              << " (" << chosen.active_count() << " active)\n";
    return 0;
}

int cmd_campaign(const CommonArgs& args, int runs_override, std::vector<int> bs_counts,
                 bool include_timing) {
    RootConfig cfg = load_or_default(args);
    if (runs_override > 0) cfg.campaign_runs = runs_override;
    if (!bs_counts.empty()) cfg.campaign_bs_counts = bs_counts;
    cfg.campaign_master_seed = args.seed;

    const Recognizer rec = obtain_recognizer(args, cfg);
    const CampaignOutput out = run_campaign(cfg.campaign(), rec);
    write_text_file(out_path(args, "results.csv"), results_to_csv(out.results, include_timing));
    const auto summaries = aggregate(out.results);
    write_text_file(out_path(args, "summary.csv"), summary_to_csv(summaries));
    write_text_file(out_path(args, "cdf.csv"), cdf_to_csv(summaries));
    for (const auto& f : out.failures) std::cerr << "run failure: " << f << "\n";
    std::cout << "campaign complete: " << out.results.size() << " rows, " << out.failures.size()
              << " failures\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-station UAV sensing, detection and localization simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    double grid_step = 1.0;
    int runs_override = 0;
    std::vector<int> bs_counts;
    bool include_timing = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_seed) {
        cmd->add_option("--config", args.config_path, "JSON configuration file");
        cmd->add_option("--output-dir", args.output_dir, "output directory");
        auto* seed_opt = cmd->add_option("--seed", args.seed, "RNG seed");
        if (needs_seed) seed_opt->required();
        return seed_opt;
    };

    auto* scene_cmd = app.add_subcommand("scene", "generate and save a scenario");
    add_common(scene_cmd, true);

    auto* sim_cmd = app.add_subcommand("simulate", "synthesize per-station echo cubes");
    add_common(sim_cmd, true);
    sim_cmd->add_option("--scene", args.scene_path, "scene JSON (otherwise generated from seed)");

    auto* detect_cmd = app.add_subcommand("detect", "run the per-station detection chain");
    add_common(detect_cmd, true);
    detect_cmd->add_option("--scene", args.scene_path, "scene JSON");
    detect_cmd->add_option("--model", args.model_path, "trained classifier JSON");

    auto* fuse_cmd = app.add_subcommand("fuse", "detect, fuse and cluster all stations");
    add_common(fuse_cmd, true);
    fuse_cmd->add_option("--scene", args.scene_path, "scene JSON");
    fuse_cmd->add_option("--model", args.model_path, "trained classifier JSON");

    auto* crlb_cmd = app.add_subcommand("crlb", "CRLB heatmap over the area");
    add_common(crlb_cmd, true);
    crlb_cmd->add_option("--scene", args.scene_path, "scene JSON");
    crlb_cmd->add_option("--grid-step", grid_step, "map sampling step [m]");

    auto* train_cmd = app.add_subcommand("train", "Q-learning station selection");
    add_common(train_cmd, true);
    train_cmd->add_option("--scene", args.scene_path, "scene JSON");
    train_cmd->add_option("--model", args.model_path, "trained classifier JSON");

    auto* campaign_cmd = app.add_subcommand("campaign", "Monte Carlo evaluation campaign");
    add_common(campaign_cmd, true);
    campaign_cmd->add_option("--runs", runs_override, "override configured run count");
    campaign_cmd->add_option("--bs-count", bs_counts, "station counts to sweep");
    campaign_cmd->add_flag("--timing", include_timing,
                           "emit measured wall times (breaks byte determinism)");
    campaign_cmd->add_option("--model", args.model_path, "trained classifier JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scene_cmd->parsed()) return cmd_scene(args);
        if (sim_cmd->parsed()) return cmd_simulate(args);
        if (detect_cmd->parsed()) return cmd_detect(args);
        if (fuse_cmd->parsed()) return cmd_fuse(args);
        if (crlb_cmd->parsed()) return cmd_crlb(args, grid_step);
        if (train_cmd->parsed()) return cmd_train(args);
        if (campaign_cmd->parsed())
            return cmd_campaign(args, runs_override, bs_counts, include_timing);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
