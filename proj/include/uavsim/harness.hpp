#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/crlb.hpp"
#include "uavsim/estimation.hpp"
#include "uavsim/fusion.hpp"
#include "uavsim/mds.hpp"
#include "uavsim/scene.hpp"
#include "uavsim/select.hpp"
#include "uavsim/waveform.hpp"

namespace uavsim {

/// Parameters for the synthetic deployment: a square area with stations on
/// the left and right edges at fixed spacing, UAVs spawned in the central
/// region every station can reach unambiguously, and PPP reflectors.
struct SceneTemplate {
    double area = 90.0;            // [m], square side
    double station_spacing = 30.0; // [m] along each edge
    int antenna_count = 8;
    double element_spacing = 0.0;  // 0: lambda/2
    double tx_power = 1.0;
    double tx_gain = 10.0;
    double rx_gain = 10.0;
    double beamwidth_3db = 2.0;
    // Sized so direct-path SNR stays above the -10 dB enumeration floor at
    // the far corner of the spawn box while window sidelobes of the nearest
    // targets stay below the CFAR threshold.
    double noise_power = 4.6e-13;  // [W]
    double target_rcs = 0.5;
    double unintentional_rcs = 1.5;
    double reflector_intensity = 3.0;  // PPP expectation
    double reflector_rcs = 10.0;
    double uav_speed = 1.5;            // [m/s]
    int target_count = 1;
    bool include_unintentional = true;
    double spawn_margin = 25.0;        // central spawn box inset [m]
    double min_uav_separation = 8.0;   // [m]
};

namespace detail {

inline RotorConfig quadcopter_rotor(CounterRng& rng) {
    RotorConfig r;
    r.rotor_count = 4;
    r.blade_count = 2;
    r.blade_length = rng.uniform(0.10, 0.15);
    r.rotation_rate = 2.0 * kPi * rng.uniform(80.0, 140.0);
    r.azimuth = rng.uniform(0.0, 2.0 * kPi);
    r.elevation = rng.uniform(0.15, 0.5);
    return r;
}

inline RotorConfig slow_rotor(CounterRng& rng) {
    RotorConfig r;
    r.rotor_count = 1;
    r.blade_count = 3;
    r.blade_length = rng.uniform(0.8, 1.5);
    r.rotation_rate = 2.0 * kPi * rng.uniform(3.0, 8.0);
    r.azimuth = rng.uniform(0.0, 2.0 * kPi);
    r.elevation = rng.uniform(0.15, 0.5);
    return r;
}

}  // namespace detail

/// Deterministic scene from a template and seed: stations on the two
/// vertical edges (spacing as configured), seeded UAV positions and
/// velocities, reflectors from the PPP.
inline Scene make_scene(const SceneTemplate& tmpl, std::uint64_t seed, double wavelength) {
    Scene scene;
    scene.area_width = tmpl.area;
    scene.area_height = tmpl.area;

    const Vec2 center{tmpl.area / 2.0, tmpl.area / 2.0};
    const int per_edge = static_cast<int>(tmpl.area / tmpl.station_spacing) + 1;
    int id = 0;
    for (int side = 0; side < 2; ++side) {
        for (int i = 0; i < per_edge; ++i) {
            BsPose bs;
            bs.id = id++;
            bs.position = {side == 0 ? 0.0 : tmpl.area, i * tmpl.station_spacing};
            bs.rotation = bearing(bs.position, center);
            bs.antenna_count = tmpl.antenna_count;
            bs.element_spacing =
                tmpl.element_spacing > 0.0 ? tmpl.element_spacing : wavelength / 2.0;
            bs.tx_power = tmpl.tx_power;
            bs.tx_gain = tmpl.tx_gain;
            bs.rx_gain = tmpl.rx_gain;
            bs.beamwidth_3db = tmpl.beamwidth_3db;
            scene.stations.push_back(bs);
        }
    }

    CounterRng rng(derive_seed(seed, 0x5ce11eu));
    const double lo = tmpl.spawn_margin, hi = tmpl.area - tmpl.spawn_margin;
    const int uav_total = tmpl.target_count + (tmpl.include_unintentional ? 1 : 0);
    for (int u = 0; u < uav_total; ++u) {
        UavState uav;
        uav.id = u;
        uav.is_target = u < tmpl.target_count;
        for (int attempt = 0; attempt < 256; ++attempt) {
            uav.position = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
            bool ok = true;
            for (const auto& other : scene.uavs)
                if (distance(other.position, uav.position) < tmpl.min_uav_separation) ok = false;
            if (ok) break;
        }
        const double heading = rng.uniform(0.0, 2.0 * kPi);
        uav.velocity = {tmpl.uav_speed * std::cos(heading), tmpl.uav_speed * std::sin(heading)};
        uav.rcs = uav.is_target ? tmpl.target_rcs : tmpl.unintentional_rcs;
        uav.rotor = uav.is_target ? detail::quadcopter_rotor(rng) : detail::slow_rotor(rng);
        uav.radial_velocity_per_bs.resize(scene.stations.size());
        for (std::size_t n = 0; n < scene.stations.size(); ++n)
            uav.radial_velocity_per_bs[n] =
                uav.radial_velocity_toward(scene.stations[n].position);
        scene.uavs.push_back(uav);
    }

    scene.reflectors = sample_reflectors(tmpl.reflector_intensity, tmpl.area * tmpl.area,
                                         derive_seed(seed, 0xf1ecu), tmpl.reflector_rcs);
    return scene;
}

/// The evaluation-protocol scene: 90 m x 90 m, 8 stations at 30 m spacing
/// on the edges, one quadcopter target plus one unintentional slow-rotor
/// craft, reflectors from a PPP with expectation 3.
inline Scene default_scene(std::uint64_t seed,
                           const WaveformConfig& wf = WaveformConfig{},
                           const SceneTemplate& tmpl = SceneTemplate{}) {
    return make_scene(tmpl, seed, wf.wavelength());
}

// ---------------------------------------------------------------------------
// Recognition model construction
// ---------------------------------------------------------------------------

struct Recognizer {
    SvmModel model;
    int segment_count = 15;
    // training audit trail (labels: 1 rotor, 0 non-rotor)
    std::vector<FeatureVector> corpus_features;
    std::vector<int> corpus_labels;
};

namespace detail {

/// One recognition dwell: either the rotor echo of a craft or the constant
/// bulk return of a rigid scatterer, scaled to the requested SNR, plus
/// receiver noise.
inline std::vector<cplx> synthesize_dwell(const RotorConfig& rotor, double range_m, double snr,
                                          const WaveformConfig& wf, double noise_power,
                                          std::uint64_t seed) {
    const std::size_t n =
        static_cast<std::size_t>(wf.pulse_count) * static_cast<std::size_t>(wf.samples_per_pulse);
    std::vector<cplx> echo;
    if (rotor.rotor_count >= 1) {
        echo = synthesize_rotor_echo(rotor, range_m, wf, wf.wavelength());
    } else {
        echo.assign(n, std::polar(1.0, -4.0 * kPi * range_m / wf.wavelength()));
    }
    double power = 0.0;
    for (const auto& s : echo) power += std::norm(s);
    power /= static_cast<double>(echo.size());
    const double scale = power > 0.0 ? std::sqrt(snr * noise_power / power) : 0.0;
    CounterRng rng(seed);
    for (auto& s : echo) s = s * scale + rng.complex_gaussian(noise_power);
    return echo;
}

}  // namespace detail

/// Labeled dwell corpus for training and evaluating the classifier:
/// quadcopter-like rotor echoes against rigid or slow-rotor returns.
struct DwellCorpus {
    std::vector<std::vector<cplx>> rotor;      // positives
    std::vector<std::vector<cplx>> non_rotor;  // negatives
};

inline DwellCorpus make_recognition_corpus(const WaveformConfig& wf, int signals_per_class,
                                           double noise_power, std::uint64_t seed) {
    DwellCorpus corpus;
    CounterRng rng(derive_seed(seed, 0xc0dfu));
    for (int i = 0; i < signals_per_class; ++i) {
        const double snr = db_to_linear(rng.uniform(12.0, 28.0));
        const double range = rng.uniform(20.0, 80.0);
        RotorConfig rotor = detail::quadcopter_rotor(rng);
        corpus.rotor.push_back(detail::synthesize_dwell(rotor, range, snr, wf, noise_power,
                                                        derive_seed(seed, 0x9000u + i)));
    }
    for (int i = 0; i < signals_per_class; ++i) {
        const double snr = db_to_linear(rng.uniform(12.0, 28.0));
        const double range = rng.uniform(20.0, 80.0);
        std::vector<cplx> dwell;
        if (i % 2 == 0) {
            RotorConfig rigid;  // rotor_count = 0: static object
            rigid.rotor_count = 0;
            dwell = detail::synthesize_dwell(rigid, range, snr, wf, noise_power,
                                             derive_seed(seed, 0xa000u + i));
        } else {
            dwell = detail::synthesize_dwell(detail::slow_rotor(rng), range, snr, wf, noise_power,
                                             derive_seed(seed, 0xb000u + i));
        }
        corpus.non_rotor.push_back(std::move(dwell));
    }
    return corpus;
}

/// Segment-level feature vectors of a dwell, mean-removed magnitude per
/// segment, EMD to four IMFs.
inline std::vector<FeatureVector> dwell_features(const std::vector<cplx>& dwell,
                                                 int segment_count) {
    std::vector<FeatureVector> out;
    const std::size_t seg_len = dwell.size() / static_cast<std::size_t>(segment_count);
    std::vector<double> x(seg_len);
    for (int s = 0; s < segment_count; ++s) {
        const std::size_t start = static_cast<std::size_t>(s) * seg_len;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) mean += std::abs(dwell[start + i]);
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) x[i] = std::abs(dwell[start + i]) - mean;
        double energy = 0.0;
        for (double v : x) energy += v * v;
        if (energy <= 0.0) continue;
        out.push_back(extract_features(emd(x, 4), x));
    }
    return out;
}

/// Train the micro-Doppler classifier on a fresh synthetic corpus. A few
/// random segments per training dwell keep the SMO problem small while
/// covering the parameter ranges.
inline Recognizer train_recognizer(const WaveformConfig& wf, double noise_power,
                                   std::uint64_t seed, int train_signals_per_class = 50,
                                   int segments_per_signal = 4) {
    const DwellCorpus corpus =
        make_recognition_corpus(wf, train_signals_per_class, noise_power, seed);
    CounterRng rng(derive_seed(seed, 0x7ea1u));
    std::vector<FeatureVector> pos, neg;
    const auto collect = [&](const std::vector<std::vector<cplx>>& dwells,
                             std::vector<FeatureVector>& sink) {
        for (const auto& dwell : dwells) {
            auto features = dwell_features(dwell, 15);
            for (int j = 0; j < segments_per_signal && !features.empty(); ++j) {
                const std::size_t pick =
                    static_cast<std::size_t>(rng.uniform() * features.size());
                sink.push_back(features[pick]);
            }
        }
    };
    collect(corpus.rotor, pos);
    collect(corpus.non_rotor, neg);

    Recognizer rec;
    rec.model = train_svm(pos, neg, 1.0, 0.0, derive_seed(seed, 0x5304u));
    for (const auto& f : pos) {
        rec.corpus_features.push_back(f);
        rec.corpus_labels.push_back(1);
    }
    for (const auto& f : neg) {
        rec.corpus_features.push_back(f);
        rec.corpus_labels.push_back(0);
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Per-run pipeline
// ---------------------------------------------------------------------------

struct PipelineConfig {
    WaveformConfig waveform{};
    CfarConfig cfar{};
    DbscanConfig dbscan_cfg{};
    double grid_cell = 0.1;
    double grid_prior = 1e-3;
    double threshold_fraction = 0.5;
    double noise_power = 4.6e-13;
    double match_gate_m = 5.0;
    EnumerateOptions paths{};
};

struct StationObservation {
    int bs_index = 0;
    std::vector<PropagationPath> paths;  // after range/beam feasibility filtering
    std::vector<Detection> detections;   // pr filled by the recognizer
};

/// Ghost apparent world position for bookkeeping and suppression metrics.
inline Vec2 path_world_position(const BsPose& bs, const PropagationPath& p) {
    const double a = bs.rotation + p.apparent_angle;
    return {bs.position.x + p.apparent_range * std::cos(a),
            bs.position.y + p.apparent_range * std::sin(a)};
}

/// Single-station sensing: enumerate paths, keep those inside the receiver's
/// unambiguous range and field of view, synthesize the IF cube, detect, and
/// attach recognition probabilities. Detections are matched back to the
/// generating path by range and bearing; unmatched detections are classified
/// from a noise-only dwell.
inline StationObservation observe_station(const Scene& scene, int bs_index,
                                          const PipelineConfig& cfg, const Recognizer& rec,
                                          std::uint64_t seed) {
    const BsPose& bs = scene.stations[static_cast<std::size_t>(bs_index)];
    const WaveformConfig& wf = cfg.waveform;

    StationObservation obs;
    obs.bs_index = bs_index;
    auto all_paths = enumerate_paths(scene, bs, cfg.noise_power, wf.wavelength(), cfg.paths);
    const double max_range = 0.99 * wf.unambiguous_range();
    for (const auto& p : all_paths) {
        if (p.apparent_range > max_range) continue;  // outside the processing window
        if (std::abs(p.apparent_angle) > bs.beamwidth_3db / 2.0) continue;
        obs.paths.push_back(p);
    }

    const EchoCube cube = synthesize_if_cube(obs.paths, wf, bs, cfg.noise_power,
                                             derive_seed(seed, 0xc0beu + bs.id));
    obs.detections = detect_station(cube, cfg.cfar, bs, wf);

    // recognition dwells, one per scatterer per station
    std::map<int, double> pr_by_uav;
    double pr_noise = -1.0;
    const double bin = wf.range_bin_width();
    for (auto& det : obs.detections) {
        const PropagationPath* match = nullptr;
        double best_cost = std::numeric_limits<double>::infinity();
        for (const auto& p : obs.paths) {
            const double dr = std::abs(p.apparent_range - det.range_m);
            const double da = std::abs(wrap_angle(p.apparent_angle - det.angle_rad));
            if (dr > 1.6 * bin || da > 0.12) continue;
            const double cost = dr / bin + da / 0.02;
            if (cost < best_cost) {
                best_cost = cost;
                match = &p;
            }
        }
        if (match != nullptr) {
            auto it = pr_by_uav.find(match->uav_id);
            if (it == pr_by_uav.end()) {
                const UavState* uav_ptr = nullptr;
                for (const auto& u : scene.uavs)
                    if (u.id == match->uav_id) uav_ptr = &u;
                if (uav_ptr == nullptr)
                    throw ComputeError("observe_station: path references unknown uav id");
                const auto& uav = *uav_ptr;
                const double r_direct = distance(bs.position, uav.position);
                // the recognition dwell is range-gated, so it carries the
                // fast-time integration gain on top of the raw path SNR
                const double snr =
                    direct_snr(bs, r_direct, uav.rcs, wf.wavelength(), cfg.noise_power) *
                    (wf.samples_per_pulse / 2.0);
                const auto dwell = detail::synthesize_dwell(
                    uav.rotor, r_direct, snr, wf, cfg.noise_power,
                    derive_seed(seed, 0xd000u + static_cast<std::uint64_t>(uav.id) * 64 +
                                          static_cast<std::uint64_t>(bs.id)));
                const double pr = recognition_probability(dwell, rec.model, rec.segment_count);
                it = pr_by_uav.emplace(match->uav_id, pr).first;
            }
            det.pr = it->second;
        } else {
            if (pr_noise < 0.0) {
                std::vector<cplx> dwell(static_cast<std::size_t>(wf.pulse_count) *
                                        static_cast<std::size_t>(wf.samples_per_pulse));
                CounterRng rng(derive_seed(seed, 0xe000u + bs.id));
                for (auto& s : dwell) s = rng.complex_gaussian(cfg.noise_power);
                pr_noise = recognition_probability(dwell, rec.model, rec.segment_count);
            }
            det.pr = pr_noise;
        }
    }
    return obs;
}

struct PipelineResult {
    std::vector<LocalizedTarget> clusters;
    std::vector<StationObservation> observations;
    std::vector<double> per_target_error_m;  // one entry per target UAV
    std::vector<bool> matched;
    int ghost_cluster_count = 0;
    double crlb_m2 = 0.0;
};

/// Full multi-station run: observe every active station, fuse onto the grid,
/// threshold at half peak, cluster, localize, then score against the truth
/// with greedy nearest matching inside the gate.
inline PipelineResult run_pipeline(const Scene& scene, const std::vector<int>& active_stations,
                                   const PipelineConfig& cfg, const Recognizer& rec,
                                   std::uint64_t seed) {
    if (active_stations.empty()) throw InputError("run_pipeline: no active stations");
    PipelineResult result;

    for (int idx : active_stations)
        result.observations.push_back(observe_station(scene, idx, cfg, rec, seed));

    GridSpec spec;
    spec.origin = {0.0, 0.0};
    spec.cell_size = cfg.grid_cell;
    spec.width_cells = static_cast<int>(std::ceil(scene.area_width / cfg.grid_cell));
    spec.height_cells = static_cast<int>(std::ceil(scene.area_height / cfg.grid_cell));
    GridMap map = GridMap::create(spec, cfg.grid_prior);
    for (const auto& obs : result.observations)
        map = fuse_station(std::move(map), obs.detections,
                           scene.stations[static_cast<std::size_t>(obs.bs_index)], cfg.waveform,
                           cfg.cfar.p_fa);

    std::vector<std::vector<int>> clusters;
    try {
        const ProbabilityField field = normalize_and_threshold(map, cfg.threshold_fraction);
        clusters = dbscan(field, cfg.dbscan_cfg);
        int cid = 0;
        for (const auto& c : clusters)
            result.clusters.push_back(mmse_position(field, c, cid++));
    } catch (const ComputeError&) {
        // no evidence on the map: no clusters, every truth becomes a miss
    }

    // truth-to-cluster greedy nearest matching inside the gate
    std::vector<const UavState*> truths;
    for (const auto& u : scene.uavs)
        if (u.is_target) truths.push_back(&u);
    result.per_target_error_m.assign(truths.size(), std::numeric_limits<double>::quiet_NaN());
    result.matched.assign(truths.size(), false);

    std::vector<bool> cluster_used(result.clusters.size(), false);
    for (std::size_t round = 0; round < truths.size(); ++round) {
        double best = cfg.match_gate_m;
        int bi = -1, bj = -1;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            if (result.matched[i]) continue;
            for (std::size_t j = 0; j < result.clusters.size(); ++j) {
                if (cluster_used[j]) continue;
                const double d = distance(truths[i]->position, result.clusters[j].position);
                if (d < best) {
                    best = d;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        }
        if (bi < 0) break;
        result.matched[static_cast<std::size_t>(bi)] = true;
        result.per_target_error_m[static_cast<std::size_t>(bi)] = best;
        cluster_used[static_cast<std::size_t>(bj)] = true;
    }

    // ghost bookkeeping: clusters nearer a ghost apparent position than any truth
    std::vector<Vec2> ghost_positions;
    for (const auto& obs : result.observations) {
        const BsPose& bs = scene.stations[static_cast<std::size_t>(obs.bs_index)];
        for (const auto& p : obs.paths)
            if (p.kind != PathKind::Direct) ghost_positions.push_back(path_world_position(bs, p));
    }
    for (const auto& cl : result.clusters) {
        double d_truth = std::numeric_limits<double>::infinity();
        for (const auto& u : scene.uavs)
            d_truth = std::min(d_truth, distance(u.position, cl.position));
        double d_ghost = std::numeric_limits<double>::infinity();
        for (const auto& g : ghost_positions) d_ghost = std::min(d_ghost, distance(g, cl.position));
        if (d_ghost < d_truth) ++result.ghost_cluster_count;
    }

    // CRLB at the first target for the active subset
    if (!truths.empty()) {
        Scene sub;
        sub.area_width = scene.area_width;
        sub.area_height = scene.area_height;
        std::vector<FimWeights> weights;
        for (int idx : active_stations) {
            const BsPose& bs = scene.stations[static_cast<std::size_t>(idx)];
            sub.stations.push_back(bs);
            const double r = distance(bs.position, truths.front()->position);
            const double snr =
                direct_snr(bs, r, truths.front()->rcs, cfg.waveform.wavelength(),
                           cfg.noise_power);
            weights.push_back(make_fim_weights(bs, snr, cfg.waveform));
        }
        try {
            result.crlb_m2 = crlb(efim(sub, truths.front()->position, weights));
        } catch (const ComputeError&) {
            result.crlb_m2 = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Monte Carlo campaigns
// ---------------------------------------------------------------------------

struct CampaignConfig {
    int runs = 200;
    std::uint64_t master_seed = 1;
    std::vector<int> bs_counts = {1, 2, 3, 4, 5, 6, 7, 8};
    SceneTemplate scene_template{};
    PipelineConfig pipeline{};

    void validate() const {
        if (runs < 1) throw InputError("CampaignConfig: runs must be >= 1");
        if (bs_counts.empty()) throw InputError("CampaignConfig: bs_counts must be non-empty");
    }
};

struct RunResult {
    int run_id = 0;
    int bs_count = 0;
    std::vector<double> per_uav_error_m;
    std::vector<bool> matched;
    int ghost_cluster_count = 0;
    double crlb_m2 = 0.0;
    double wall_time_s = 0.0;
};

struct CampaignOutput {
    std::vector<RunResult> results;
    std::vector<std::string> failures;
};

/// Run the evaluation protocol: per run, build the seeded scene and sweep
/// the requested station counts through the full pipeline. Failures are
/// recorded and skipped, never fatal. Run r uses seed master_seed + r.
inline CampaignOutput run_campaign(const CampaignConfig& cfg, const Recognizer& rec) {
    cfg.validate();
    CampaignOutput out;
    for (int run = 0; run < cfg.runs; ++run) {
        const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(run);
        const Scene scene = make_scene(cfg.scene_template, seed, cfg.pipeline.waveform.wavelength());
        for (int bs_count : cfg.bs_counts) {
            if (bs_count < 1 || bs_count > static_cast<int>(scene.stations.size())) {
                out.failures.push_back("run " + std::to_string(run) + ": invalid bs_count " +
                                       std::to_string(bs_count));
                continue;
            }
            std::vector<int> active(static_cast<std::size_t>(bs_count));
            for (int i = 0; i < bs_count; ++i) active[static_cast<std::size_t>(i)] = i;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const PipelineResult pr = run_pipeline(scene, active, cfg.pipeline, rec, seed);
                RunResult r;
                r.run_id = run;
                r.bs_count = bs_count;
                r.per_uav_error_m = pr.per_target_error_m;
                r.matched = pr.matched;
                r.ghost_cluster_count = pr.ghost_cluster_count;
                r.crlb_m2 = pr.crlb_m2;
                r.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                out.results.push_back(std::move(r));
            } catch (const std::exception& e) {
                out.failures.push_back("run " + std::to_string(run) + " bs_count " +
                                       std::to_string(bs_count) + ": " + e.what());
            }
        }
    }
    return out;
}

struct BsCountSummary {
    int bs_count = 0;
    int matched_count = 0;
    int miss_count = 0;
    double mean_error_m = 0.0;
    double median_error_m = 0.0;
    double rmse_m = 0.0;
    double mse_m2 = 0.0;
    double mean_crlb_m2 = 0.0;
    double ghost_cluster_rate = 0.0;  // mean ghost clusters per run
    std::vector<double> error_cdf;    // sorted matched errors
};

/// Aggregate per station count: error moments over matched targets, the CDF
/// sample vector, CRLB means and ghost statistics.
inline std::vector<BsCountSummary> aggregate(const std::vector<RunResult>& results) {
    if (results.empty()) throw InputError("aggregate: no results");
    std::map<int, BsCountSummary> by_count;
    std::map<int, int> run_rows;
    for (const auto& r : results) {
        auto& s = by_count[r.bs_count];
        s.bs_count = r.bs_count;
        for (std::size_t i = 0; i < r.per_uav_error_m.size(); ++i) {
            if (r.matched[i]) {
                s.error_cdf.push_back(r.per_uav_error_m[i]);
            } else {
                ++s.miss_count;
            }
        }
        s.mean_crlb_m2 += r.crlb_m2;
        s.ghost_cluster_rate += r.ghost_cluster_count;
        ++run_rows[r.bs_count];
    }
    std::vector<BsCountSummary> out;
    for (auto& [count, s] : by_count) {
        std::sort(s.error_cdf.begin(), s.error_cdf.end());
        s.matched_count = static_cast<int>(s.error_cdf.size());
        if (s.matched_count > 0) {
            double sum = 0.0, sum2 = 0.0;
            for (double e : s.error_cdf) {
                sum += e;
                sum2 += e * e;
            }
            s.mean_error_m = sum / s.matched_count;
            s.mse_m2 = sum2 / s.matched_count;
            s.rmse_m = std::sqrt(s.mse_m2);
            s.median_error_m = s.error_cdf[static_cast<std::size_t>(s.matched_count / 2)];
        }
        const int rows = run_rows[count];
        s.mean_crlb_m2 /= rows;
        s.ghost_cluster_rate /= rows;
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Selection environment
// ---------------------------------------------------------------------------

/// Pipeline-backed environment for the Q-learning module: per-UAV MSE of a
/// station subset, averaged over eval_runs seeded fusion runs and memoized
/// per activation mask. Unmatched targets score the squared gate distance.
class ScenarioEnv {
public:
    ScenarioEnv(Scene scene, PipelineConfig cfg, Recognizer rec, int eval_runs,
                std::uint64_t seed)
        : scene_(std::move(scene)),
          cfg_(std::move(cfg)),
          rec_(std::move(rec)),
          eval_runs_(eval_runs),
          seed_(seed) {
        for (const auto& u : scene_.uavs)
            if (u.is_target) ++target_count_;
    }

    std::vector<double> operator()(const SelectionState& s) {
        if (s.none_active())
            return std::vector<double>(static_cast<std::size_t>(target_count_), 1e6);
        auto it = cache_.find(s.mask);
        if (it != cache_.end()) return it->second;

        std::vector<int> active;
        for (int i = 0; i < s.n_stations; ++i)
            if (s.active(i)) active.push_back(i);

        std::vector<double> mse(static_cast<std::size_t>(target_count_), 0.0);
        const double miss_sq = cfg_.match_gate_m * cfg_.match_gate_m;
        for (int run = 0; run < eval_runs_; ++run) {
            const auto result = run_pipeline(
                scene_, active, cfg_, rec_,
                derive_seed(seed_, (static_cast<std::uint64_t>(s.mask) << 16) + run));
            for (std::size_t i = 0; i < mse.size(); ++i) {
                const double e2 = result.matched[i]
                                      ? result.per_target_error_m[i] * result.per_target_error_m[i]
                                      : miss_sq;
                mse[i] += e2;
            }
        }
        for (auto& m : mse) m /= eval_runs_;
        cache_.emplace(s.mask, mse);
        return mse;
    }

    SelectionEnv as_function() {
        return [this](const SelectionState& s) { return (*this)(s); };
    }

    const Scene& scene() const { return scene_; }
    int station_count() const { return static_cast<int>(scene_.stations.size()); }

private:
    Scene scene_;
    PipelineConfig cfg_;
    Recognizer rec_;
    int eval_runs_;
    std::uint64_t seed_;
    int target_count_ = 0;
    std::map<std::uint32_t, std::vector<double>> cache_;
};

}  // namespace uavsim
