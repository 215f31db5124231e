#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "uavsim/harness.hpp"
#include "uavsim/io.hpp"

namespace uavsim {

/// Q-learning and environment knobs for the selection commands.
struct SelectionConfig {
    int episodes = 20000;
    int eval_runs = 3;   // fusion runs averaged per environment evaluation
    double mse_cap = 1.0;
    Objective objective = Objective::P1;
};

/// Whole-pipeline configuration: every knob of every stage, loadable from a
/// strict JSON document (unknown keys are rejected).
struct RootConfig {
    WaveformConfig waveform{};
    CfarConfig cfar{};
    double grid_cell = 0.1;
    double grid_prior = 1e-3;
    double threshold_fraction = 0.5;
    DbscanConfig dbscan_cfg{};
    RewardConfig reward_cfg{};
    SceneTemplate scene{};
    SelectionConfig selection{};
    int campaign_runs = 200;
    std::uint64_t campaign_master_seed = 1;
    std::vector<int> campaign_bs_counts = {1, 2, 3, 4, 5, 6, 7, 8};
    double match_gate_m = 5.0;
    double snr_floor_db = -10.0;
    int segment_count = 15;

    PipelineConfig pipeline() const {
        PipelineConfig p;
        p.waveform = waveform;
        p.cfar = cfar;
        p.dbscan_cfg = dbscan_cfg;
        p.grid_cell = grid_cell;
        p.grid_prior = grid_prior;
        p.threshold_fraction = threshold_fraction;
        p.noise_power = scene.noise_power;
        p.match_gate_m = match_gate_m;
        p.paths.snr_floor = db_to_linear(snr_floor_db);
        return p;
    }

    CampaignConfig campaign() const {
        CampaignConfig c;
        c.runs = campaign_runs;
        c.master_seed = campaign_master_seed;
        c.bs_counts = campaign_bs_counts;
        c.scene_template = scene;
        c.pipeline = pipeline();
        return c;
    }

    void validate() const {
        waveform.validate();
        cfar.validate();
        dbscan_cfg.validate();
        reward_cfg.validate();
        if (grid_cell <= 0.0) throw InputError("config: grid.cell_size must be > 0");
        if (grid_prior <= 0.0 || grid_prior >= 1.0)
            throw InputError("config: grid.prior must be in (0, 1)");
        if (threshold_fraction < 0.0 || threshold_fraction > 1.0)
            throw InputError("config: grid.threshold_fraction must be in [0, 1]");
        if (campaign_runs < 1) throw InputError("config: campaign.runs must be >= 1");
        if (scene.noise_power <= 0.0) throw InputError("config: scene.noise_power must be > 0");
        if (segment_count < 1) throw InputError("config: segment_count must be >= 1");
    }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw InputError("config: unknown key '" + key + "' in " + context);
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline json to_json(const RootConfig& c) {
    return {
        {"waveform",
         {{"carrier_hz", c.waveform.carrier_hz},
          {"bandwidth_hz", c.waveform.bandwidth_hz},
          {"pulse_duration_s", c.waveform.pulse_duration_s},
          {"samples_per_pulse", c.waveform.samples_per_pulse},
          {"pulse_count", c.waveform.pulse_count},
          {"amplitude", c.waveform.amplitude}}},
        {"cfar",
         {{"p_fa", c.cfar.p_fa},
          {"ref_cells_range", c.cfar.ref_cells_range},
          {"ref_cells_velocity", c.cfar.ref_cells_velocity},
          {"guard_cells_range", c.cfar.guard_cells_range},
          {"guard_cells_velocity", c.cfar.guard_cells_velocity}}},
        {"grid",
         {{"cell_size", c.grid_cell},
          {"prior", c.grid_prior},
          {"threshold_fraction", c.threshold_fraction}}},
        {"dbscan", {{"eps", c.dbscan_cfg.eps}, {"min_pts", c.dbscan_cfg.min_pts}}},
        {"reward",
         {{"c0", c.reward_cfg.c0},
          {"tau_e", c.reward_cfg.tau_e},
          {"tau_r", c.reward_cfg.tau_r},
          {"objective", to_string(c.reward_cfg.objective)},
          {"mse_cap", c.reward_cfg.mse_cap}}},
        {"scene",
         {{"area", c.scene.area},
          {"station_spacing", c.scene.station_spacing},
          {"antenna_count", c.scene.antenna_count},
          {"element_spacing", c.scene.element_spacing},
          {"tx_power", c.scene.tx_power},
          {"tx_gain", c.scene.tx_gain},
          {"rx_gain", c.scene.rx_gain},
          {"beamwidth_3db", c.scene.beamwidth_3db},
          {"noise_power", c.scene.noise_power},
          {"target_rcs", c.scene.target_rcs},
          {"unintentional_rcs", c.scene.unintentional_rcs},
          {"reflector_intensity", c.scene.reflector_intensity},
          {"reflector_rcs", c.scene.reflector_rcs},
          {"uav_speed", c.scene.uav_speed},
          {"target_count", c.scene.target_count},
          {"include_unintentional", c.scene.include_unintentional},
          {"spawn_margin", c.scene.spawn_margin},
          {"min_uav_separation", c.scene.min_uav_separation}}},
        {"selection",
         {{"episodes", c.selection.episodes},
          {"eval_runs", c.selection.eval_runs},
          {"mse_cap", c.selection.mse_cap},
          {"objective", to_string(c.selection.objective)}}},
        {"campaign",
         {{"runs", c.campaign_runs},
          {"master_seed", c.campaign_master_seed},
          {"bs_counts", c.campaign_bs_counts}}},
        {"match_gate_m", c.match_gate_m},
        {"snr_floor_db", c.snr_floor_db},
        {"segment_count", c.segment_count}};
}

inline Objective objective_from_string(const std::string& s) {
    if (s == "P1") return Objective::P1;
    if (s == "P2") return Objective::P2;
    if (s == "P3") return Objective::P3;
    throw InputError("config: unknown objective '" + s + "'");
}

inline RootConfig config_from_json(const json& j) {
    using detail::check_keys;
    using detail::get_if;
    RootConfig c;
    check_keys(j,
               {"waveform", "cfar", "grid", "dbscan", "reward", "scene", "selection", "campaign",
                "match_gate_m", "snr_floor_db", "segment_count"},
               "root");
    if (j.contains("waveform")) {
        const auto& w = j.at("waveform");
        check_keys(w,
                   {"carrier_hz", "bandwidth_hz", "pulse_duration_s", "samples_per_pulse",
                    "pulse_count", "amplitude"},
                   "waveform");
        get_if(w, "carrier_hz", c.waveform.carrier_hz);
        get_if(w, "bandwidth_hz", c.waveform.bandwidth_hz);
        get_if(w, "pulse_duration_s", c.waveform.pulse_duration_s);
        get_if(w, "samples_per_pulse", c.waveform.samples_per_pulse);
        get_if(w, "pulse_count", c.waveform.pulse_count);
        get_if(w, "amplitude", c.waveform.amplitude);
    }
    if (j.contains("cfar")) {
        const auto& f = j.at("cfar");
        check_keys(f,
                   {"p_fa", "ref_cells_range", "ref_cells_velocity", "guard_cells_range",
                    "guard_cells_velocity"},
                   "cfar");
        get_if(f, "p_fa", c.cfar.p_fa);
        get_if(f, "ref_cells_range", c.cfar.ref_cells_range);
        get_if(f, "ref_cells_velocity", c.cfar.ref_cells_velocity);
        get_if(f, "guard_cells_range", c.cfar.guard_cells_range);
        get_if(f, "guard_cells_velocity", c.cfar.guard_cells_velocity);
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, {"cell_size", "prior", "threshold_fraction"}, "grid");
        get_if(g, "cell_size", c.grid_cell);
        get_if(g, "prior", c.grid_prior);
        get_if(g, "threshold_fraction", c.threshold_fraction);
    }
    if (j.contains("dbscan")) {
        const auto& d = j.at("dbscan");
        check_keys(d, {"eps", "min_pts"}, "dbscan");
        get_if(d, "eps", c.dbscan_cfg.eps);
        get_if(d, "min_pts", c.dbscan_cfg.min_pts);
    }
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        check_keys(r, {"c0", "tau_e", "tau_r", "objective", "mse_cap"}, "reward");
        get_if(r, "c0", c.reward_cfg.c0);
        get_if(r, "tau_e", c.reward_cfg.tau_e);
        get_if(r, "tau_r", c.reward_cfg.tau_r);
        if (r.contains("objective"))
            c.reward_cfg.objective = objective_from_string(r.at("objective").get<std::string>());
        get_if(r, "mse_cap", c.reward_cfg.mse_cap);
    }
    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        check_keys(s,
                   {"area", "station_spacing", "antenna_count", "element_spacing", "tx_power",
                    "tx_gain", "rx_gain", "beamwidth_3db", "noise_power", "target_rcs",
                    "unintentional_rcs", "reflector_intensity", "reflector_rcs", "uav_speed",
                    "target_count", "include_unintentional", "spawn_margin",
                    "min_uav_separation"},
                   "scene");
        get_if(s, "area", c.scene.area);
        get_if(s, "station_spacing", c.scene.station_spacing);
        get_if(s, "antenna_count", c.scene.antenna_count);
        get_if(s, "element_spacing", c.scene.element_spacing);
        get_if(s, "tx_power", c.scene.tx_power);
        get_if(s, "tx_gain", c.scene.tx_gain);
        get_if(s, "rx_gain", c.scene.rx_gain);
        get_if(s, "beamwidth_3db", c.scene.beamwidth_3db);
        get_if(s, "noise_power", c.scene.noise_power);
        get_if(s, "target_rcs", c.scene.target_rcs);
        get_if(s, "unintentional_rcs", c.scene.unintentional_rcs);
        get_if(s, "reflector_intensity", c.scene.reflector_intensity);
        get_if(s, "reflector_rcs", c.scene.reflector_rcs);
        get_if(s, "uav_speed", c.scene.uav_speed);
        get_if(s, "target_count", c.scene.target_count);
        get_if(s, "include_unintentional", c.scene.include_unintentional);
        get_if(s, "spawn_margin", c.scene.spawn_margin);
        get_if(s, "min_uav_separation", c.scene.min_uav_separation);
    }
    if (j.contains("selection")) {
        const auto& s = j.at("selection");
        check_keys(s, {"episodes", "eval_runs", "mse_cap", "objective"}, "selection");
        get_if(s, "episodes", c.selection.episodes);
        get_if(s, "eval_runs", c.selection.eval_runs);
        get_if(s, "mse_cap", c.selection.mse_cap);
        if (s.contains("objective"))
            c.selection.objective = objective_from_string(s.at("objective").get<std::string>());
    }
    if (j.contains("campaign")) {
        const auto& cc = j.at("campaign");
        check_keys(cc, {"runs", "master_seed", "bs_counts"}, "campaign");
        get_if(cc, "runs", c.campaign_runs);
        get_if(cc, "master_seed", c.campaign_master_seed);
        get_if(cc, "bs_counts", c.campaign_bs_counts);
    }
    get_if(j, "match_gate_m", c.match_gate_m);
    get_if(j, "snr_floor_db", c.snr_floor_db);
    get_if(j, "segment_count", c.segment_count);
    c.validate();
    return c;
}

inline RootConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InputError("config: " + std::string(e.what()));
    }
    return config_from_json(j);
}

inline void save_config(const RootConfig& c, const std::string& path) {
    write_text_file(path, to_json(c).dump(2) + "\n");
}

}  // namespace uavsim
