#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsim/fusion.hpp"
#include "uavsim/harness.hpp"
#include "uavsim/mds.hpp"
#include "uavsim/scene.hpp"
#include "uavsim/select.hpp"
#include "uavsim/waveform.hpp"

namespace uavsim {

using nlohmann::json;

/// 9-significant-digit formatting used by every CSV emitter.
inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for writing: " + path);
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Scene JSON
// ---------------------------------------------------------------------------

inline json to_json(const BsPose& b) {
    return {{"id", b.id},
            {"position", {b.position.x, b.position.y}},
            {"rotation", b.rotation},
            {"antenna_count", b.antenna_count},
            {"element_spacing", b.element_spacing},
            {"tx_power", b.tx_power},
            {"tx_gain", b.tx_gain},
            {"rx_gain", b.rx_gain},
            {"beamwidth_3db", b.beamwidth_3db}};
}

inline BsPose bs_from_json(const json& j) {
    BsPose b;
    b.id = j.at("id").get<int>();
    b.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
    b.rotation = j.at("rotation").get<double>();
    b.antenna_count = j.at("antenna_count").get<int>();
    b.element_spacing = j.at("element_spacing").get<double>();
    b.tx_power = j.at("tx_power").get<double>();
    b.tx_gain = j.at("tx_gain").get<double>();
    b.rx_gain = j.at("rx_gain").get<double>();
    b.beamwidth_3db = j.at("beamwidth_3db").get<double>();
    return b;
}

inline json to_json(const RotorConfig& r) {
    return {{"rotor_count", r.rotor_count},   {"blade_count", r.blade_count},
            {"blade_length", r.blade_length}, {"rotation_rate", r.rotation_rate},
            {"azimuth", r.azimuth},           {"elevation", r.elevation}};
}

inline RotorConfig rotor_from_json(const json& j) {
    RotorConfig r;
    r.rotor_count = j.at("rotor_count").get<int>();
    r.blade_count = j.at("blade_count").get<int>();
    r.blade_length = j.at("blade_length").get<double>();
    r.rotation_rate = j.at("rotation_rate").get<double>();
    r.azimuth = j.at("azimuth").get<double>();
    r.elevation = j.at("elevation").get<double>();
    return r;
}

inline json to_json(const UavState& u) {
    return {{"id", u.id},
            {"position", {u.position.x, u.position.y}},
            {"velocity", {u.velocity.x, u.velocity.y}},
            {"radial_velocity_per_bs", u.radial_velocity_per_bs},
            {"rcs", u.rcs},
            {"rotor", to_json(u.rotor)},
            {"is_target", u.is_target}};
}

inline UavState uav_from_json(const json& j) {
    UavState u;
    u.id = j.at("id").get<int>();
    u.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
    u.velocity = {j.at("velocity").at(0).get<double>(), j.at("velocity").at(1).get<double>()};
    u.radial_velocity_per_bs = j.at("radial_velocity_per_bs").get<std::vector<double>>();
    u.rcs = j.at("rcs").get<double>();
    u.rotor = rotor_from_json(j.at("rotor"));
    u.is_target = j.at("is_target").get<bool>();
    return u;
}

inline json to_json(const Scene& s) {
    json stations = json::array(), uavs = json::array(), reflectors = json::array();
    for (const auto& b : s.stations) stations.push_back(to_json(b));
    for (const auto& u : s.uavs) uavs.push_back(to_json(u));
    for (const auto& r : s.reflectors)
        reflectors.push_back(
            {{"id", r.id}, {"position", {r.position.x, r.position.y}}, {"rcs", r.rcs}});
    return {{"area", {s.area_width, s.area_height}},
            {"stations", stations},
            {"uavs", uavs},
            {"reflectors", reflectors}};
}

inline Scene scene_from_json(const json& j) {
    Scene s;
    s.area_width = j.at("area").at(0).get<double>();
    s.area_height = j.at("area").at(1).get<double>();
    for (const auto& b : j.at("stations")) s.stations.push_back(bs_from_json(b));
    for (const auto& u : j.at("uavs")) s.uavs.push_back(uav_from_json(u));
    for (const auto& r : j.at("reflectors")) {
        Reflector refl;
        refl.id = r.at("id").get<int>();
        refl.position = {r.at("position").at(0).get<double>(),
                         r.at("position").at(1).get<double>()};
        refl.rcs = r.at("rcs").get<double>();
        s.reflectors.push_back(refl);
    }
    s.validate();
    return s;
}

inline void save_scene(const Scene& s, const std::string& path) {
    write_text_file(path, to_json(s).dump(2) + "\n");
}

inline Scene load_scene(const std::string& path) {
    return scene_from_json(json::parse(read_text_file(path)));
}

// ---------------------------------------------------------------------------
// Detection CSV
// ---------------------------------------------------------------------------

inline std::string detections_to_csv(const std::vector<Detection>& dets) {
    std::string out = "bs_id,range_m,velocity_mps,angle_rad,pd,pr,snr_db\n";
    for (const auto& d : dets) {
        out += std::to_string(d.bs_id) + ',' + fmt9(d.range_m) + ',' + fmt9(d.velocity_mps) +
               ',' + fmt9(d.angle_rad) + ',' + fmt9(d.pd) + ',' + fmt9(d.pr) + ',' +
               fmt9(d.snr_est > 0.0 ? linear_to_db(d.snr_est) : -999.0) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Echo cube dump: float32 little-endian interleaved I/Q plus JSON sidecar
// ---------------------------------------------------------------------------

inline void save_cube(const EchoCube& cube, const std::string& bin_path,
                      const std::string& sidecar_path) {
    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw InputError("cannot open for writing: " + bin_path);
    for (const auto& s : cube.data) {
        const float iq[2] = {static_cast<float>(s.real()), static_cast<float>(s.imag())};
        f.write(reinterpret_cast<const char*>(iq), sizeof(iq));
    }
    const json sidecar = {{"bs_id", cube.bs_id},
                          {"antennas", cube.antennas},
                          {"pulses", cube.pulses},
                          {"samples", cube.samples},
                          {"layout", "row-major (antenna, pulse, sample), float32 LE I/Q"},
                          {"config",
                           {{"carrier_hz", cube.config.carrier_hz},
                            {"bandwidth_hz", cube.config.bandwidth_hz},
                            {"pulse_duration_s", cube.config.pulse_duration_s},
                            {"samples_per_pulse", cube.config.samples_per_pulse},
                            {"pulse_count", cube.config.pulse_count},
                            {"amplitude", cube.config.amplitude}}}};
    write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Grid dump: 16-bit ASCII PGM plus JSON sidecar
// ---------------------------------------------------------------------------

inline void save_probability_field(const ProbabilityField& field, const std::string& pgm_path,
                                   const std::string& sidecar_path) {
    double peak = 0.0;
    for (double p : field.prob) peak = std::max(peak, p);
    const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;

    std::string pgm = "P2\n" + std::to_string(field.spec.width_cells) + " " +
                      std::to_string(field.spec.height_cells) + "\n65535\n";
    for (int iy = 0; iy < field.spec.height_cells; ++iy) {
        for (int ix = 0; ix < field.spec.width_cells; ++ix) {
            const int v = static_cast<int>(field.at(ix, iy) * scale + 0.5);
            pgm += std::to_string(v);
            pgm += (ix + 1 == field.spec.width_cells) ? '\n' : ' ';
        }
    }
    write_text_file(pgm_path, pgm);
    const json sidecar = {{"origin", {field.spec.origin.x, field.spec.origin.y}},
                          {"cell_size", field.spec.cell_size},
                          {"width", field.spec.width_cells},
                          {"height", field.spec.height_cells},
                          {"peak_value", peak}};
    write_text_file(sidecar_path, sidecar.dump(2) + "\n");
}

inline std::string clusters_to_csv(const std::vector<LocalizedTarget>& targets) {
    std::string out = "cluster_id,x_m,y_m,mass,member_cells\n";
    for (const auto& t : targets)
        out += std::to_string(t.cluster_id) + ',' + fmt9(t.position.x) + ',' + fmt9(t.position.y) +
               ',' + fmt9(t.mass) + ',' + std::to_string(t.member_cells) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// SVM model JSON
// ---------------------------------------------------------------------------

inline json to_json(const SvmModel& m) {
    json svs = json::array();
    for (const auto& v : m.support_vectors) svs.push_back(std::vector<double>(v.begin(), v.end()));
    return {{"support_vectors", svs},
            {"dual_coefficients", m.dual_coefficients},
            {"bias", m.bias},
            {"kernel_gamma", m.kernel_gamma},
            {"regularization_c", m.regularization_c},
            {"feature_mean", std::vector<double>(m.feature_mean.begin(), m.feature_mean.end())},
            {"feature_scale", std::vector<double>(m.feature_scale.begin(), m.feature_scale.end())}};
}

inline SvmModel svm_from_json(const json& j) {
    SvmModel m;
    for (const auto& sv : j.at("support_vectors")) {
        FeatureVector f{};
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = sv.at(i).get<double>();
        m.support_vectors.push_back(f);
    }
    m.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.kernel_gamma = j.at("kernel_gamma").get<double>();
    m.regularization_c = j.at("regularization_c").get<double>();
    const auto mean = j.at("feature_mean").get<std::vector<double>>();
    const auto scale = j.at("feature_scale").get<std::vector<double>>();
    for (std::size_t i = 0; i < m.feature_mean.size(); ++i) {
        m.feature_mean[i] = mean.at(i);
        m.feature_scale[i] = scale.at(i);
    }
    return m;
}

inline std::string features_to_csv(const std::vector<FeatureVector>& rows,
                                   const std::vector<int>& labels) {
    std::string out = "label";
    for (int d = 1; d <= 4; ++d) {
        const std::string s = std::to_string(d);
        out += ",zc_imf" + s + ",energy_imf" + s + ",std_imf" + s + ",zcr_imf" + s;
    }
    out += '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += std::to_string(labels[i]);
        for (double v : rows[i]) out += ',' + fmt9(v);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Q policy JSON and training curve CSV
// ---------------------------------------------------------------------------

inline json to_json(const QPolicy& p) {
    json log = json::array();
    for (const auto& e : p.episode_log)
        log.push_back({{"episode", e.episode},
                       {"reward", e.reward},
                       {"epsilon", e.epsilon},
                       {"rs", e.active_count},
                       {"max_q_delta", e.max_q_delta}});
    json model = json::object();
    if (p.encoding == StateEncoding::ErrorState) {
        model = {{"centroids", p.error_model.centroids},
                 {"state_count", p.error_model.state_count}};
    }
    return {{"n_stations", p.n_stations},
            {"n_states", p.n_states},
            {"n_actions", p.n_actions},
            {"encoding", p.encoding == StateEncoding::Binary ? "binary" : "error_state"},
            {"learning_rate", p.learning_rate},
            {"discount", p.discount},
            {"epsilon", p.epsilon},
            {"step_penalty", p.step_penalty},
            {"q_values", p.q},
            {"error_model", model},
            {"episode_log", log}};
}

inline QPolicy policy_from_json(const json& j) {
    QPolicy p;
    p.n_stations = j.at("n_stations").get<int>();
    p.n_states = j.at("n_states").get<int>();
    p.n_actions = j.at("n_actions").get<int>();
    p.encoding = j.at("encoding").get<std::string>() == "binary" ? StateEncoding::Binary
                                                                 : StateEncoding::ErrorState;
    p.learning_rate = j.at("learning_rate").get<double>();
    p.discount = j.at("discount").get<double>();
    p.epsilon = j.at("epsilon").get<double>();
    p.step_penalty = j.at("step_penalty").get<double>();
    p.q = j.at("q_values").get<std::vector<double>>();
    if (p.encoding == StateEncoding::ErrorState) {
        p.error_model.centroids = j.at("error_model").at("centroids").get<std::vector<double>>();
        p.error_model.state_count = j.at("error_model").at("state_count").get<int>();
    }
    for (const auto& e : j.at("episode_log"))
        p.episode_log.push_back({e.at("episode").get<int>(), e.at("reward").get<double>(),
                                 e.at("epsilon").get<double>(), e.at("rs").get<int>(),
                                 e.at("max_q_delta").get<double>()});
    return p;
}

inline std::string training_curve_to_csv(const QPolicy& p) {
    std::string out = "episode,reward,epsilon,rs\n";
    for (const auto& e : p.episode_log)
        out += std::to_string(e.episode) + ',' + fmt9(e.reward) + ',' + fmt9(e.epsilon) + ',' +
               std::to_string(e.active_count) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// Campaign results CSV
// ---------------------------------------------------------------------------

inline std::string results_to_csv(const std::vector<RunResult>& results,
                                  bool include_timing = false) {
    std::string out = "run_id,bs_count,uav_id,error_m,matched,ghost_clusters,crlb_m2,wall_time_s\n";
    for (const auto& r : results) {
        for (std::size_t u = 0; u < r.per_uav_error_m.size(); ++u) {
            out += std::to_string(r.run_id) + ',' + std::to_string(r.bs_count) + ',' +
                   std::to_string(u) + ',' +
                   (r.matched[u] ? fmt9(r.per_uav_error_m[u]) : std::string("nan")) + ',' +
                   (r.matched[u] ? '1' : '0') + ',' + std::to_string(r.ghost_cluster_count) +
                   ',' + fmt9(r.crlb_m2) + ',' + (include_timing ? fmt9(r.wall_time_s) : "0") +
                   '\n';
        }
    }
    return out;
}

inline std::string summary_to_csv(const std::vector<BsCountSummary>& summaries) {
    std::string out =
        "bs_count,matched,misses,mean_error_m,median_error_m,rmse_m,mse_m2,mean_crlb_m2,"
        "ghost_clusters_per_run\n";
    for (const auto& s : summaries)
        out += std::to_string(s.bs_count) + ',' + std::to_string(s.matched_count) + ',' +
               std::to_string(s.miss_count) + ',' + fmt9(s.mean_error_m) + ',' +
               fmt9(s.median_error_m) + ',' + fmt9(s.rmse_m) + ',' + fmt9(s.mse_m2) + ',' +
               fmt9(s.mean_crlb_m2) + ',' + fmt9(s.ghost_cluster_rate) + '\n';
    return out;
}

inline std::string cdf_to_csv(const std::vector<BsCountSummary>& summaries) {
    std::string out = "bs_count,error_m,cdf\n";
    for (const auto& s : summaries) {
        const std::size_t n = s.error_cdf.size();
        for (std::size_t i = 0; i < n; ++i)
            out += std::to_string(s.bs_count) + ',' + fmt9(s.error_cdf[i]) + ',' +
                   fmt9(static_cast<double>(i + 1) / static_cast<double>(n)) + '\n';
    }
    return out;
}

}  // namespace uavsim
