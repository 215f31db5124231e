#include <catch2/catch_amalgamated.hpp>

#include "uavsim/config.hpp"
#include "uavsim/harness.hpp"
#include "uavsim/io.hpp"

using namespace uavsim;

TEST_CASE("default scene matches the evaluation protocol") {
    const WaveformConfig wf;
    const Scene scene = default_scene(5, wf);
    REQUIRE(scene.stations.size() == 8);
    REQUIRE(scene.area_width == Catch::Approx(90.0));
    REQUIRE(scene.area_height == Catch::Approx(90.0));
    REQUIRE(scene.uavs.size() == 2);
    REQUIRE(scene.uavs[0].is_target);
    REQUIRE_FALSE(scene.uavs[1].is_target);

    // stations on the two edges at 30 m spacing
    for (const auto& bs : scene.stations) {
        const bool on_edge = bs.position.x == 0.0 || bs.position.x == 90.0;
        REQUIRE(on_edge);
        REQUIRE(std::fmod(bs.position.y, 30.0) == Catch::Approx(0.0).margin(1e-12));
    }

    // reachable by every station inside the unambiguous range
    for (const auto& u : scene.uavs)
        for (const auto& bs : scene.stations)
            REQUIRE(distance(u.position, bs.position) < wf.unambiguous_range());
}

TEST_CASE("same seed reproduces the scene exactly") {
    const WaveformConfig wf;
    const Scene a = default_scene(123, wf);
    const Scene b = default_scene(123, wf);
    REQUIRE(to_json(a).dump() == to_json(b).dump());
    const Scene c = default_scene(124, wf);
    REQUIRE(to_json(a).dump() != to_json(c).dump());
}

TEST_CASE("radial velocities are line-of-sight projections") {
    const WaveformConfig wf;
    const Scene scene = default_scene(9, wf);
    const auto& u = scene.uavs[0];
    for (std::size_t n = 0; n < scene.stations.size(); ++n) {
        const Vec2 d = u.position - scene.stations[n].position;
        const double r = d.norm();
        const double expected = (u.velocity.x * d.x + u.velocity.y * d.y) / r;
        REQUIRE(u.radial_velocity_per_bs[n] == Catch::Approx(expected).margin(1e-12));
        REQUIRE(std::abs(u.radial_velocity_per_bs[n]) < wf.unambiguous_velocity());
    }
}

TEST_CASE("recognition model separates rotor from non-rotor dwells") {
    const WaveformConfig wf;
    const double noise = 4.6e-13;
    const Recognizer rec = train_recognizer(wf, noise, 77, 16, 3);

    const auto corpus = make_recognition_corpus(wf, 12, noise, 4242);
    int correct = 0, total = 0;
    for (const auto& dwell : corpus.rotor) {
        const double pr = recognition_probability(dwell, rec.model, 15);
        if (pr > 0.5) ++correct;
        ++total;
    }
    for (const auto& dwell : corpus.non_rotor) {
        const double pr = recognition_probability(dwell, rec.model, 15);
        if (pr < 0.5) ++correct;
        ++total;
    }
    REQUIRE(total == 24);
    REQUIRE(correct >= 20);
}

TEST_CASE("single high-snr run localizes the target within two cells") {
    RootConfig cfg;
    cfg.scene.reflector_intensity = 0.0;  // clean geometry
    const Recognizer rec = train_recognizer(cfg.waveform, cfg.scene.noise_power, 31, 16, 3);
    const Scene scene = make_scene(cfg.scene, 42, cfg.waveform.wavelength());

    std::vector<int> active;
    for (int i = 0; i < 8; ++i) active.push_back(i);
    const auto result = run_pipeline(scene, active, cfg.pipeline(), rec, 42);

    REQUIRE(result.matched[0]);
    REQUIRE(result.per_target_error_m[0] < 2.0 * cfg.grid_cell);
}

TEST_CASE("campaign determinism and error reduction") {
    RootConfig cfg;
    cfg.campaign_runs = 3;
    cfg.campaign_bs_counts = {2, 8};
    cfg.campaign_master_seed = 11;
    const Recognizer rec = train_recognizer(cfg.waveform, cfg.scene.noise_power, 31, 16, 3);

    const auto a = run_campaign(cfg.campaign(), rec);
    const auto b = run_campaign(cfg.campaign(), rec);
    REQUIRE(results_to_csv(a.results) == results_to_csv(b.results));
    REQUIRE(a.failures == b.failures);

    const auto summaries = aggregate(a.results);
    REQUIRE(summaries.size() == 2);
    for (const auto& s : summaries) {
        REQUIRE(s.matched_count + s.miss_count > 0);
        // CDF is sorted and normalizes to 1 by construction
        for (std::size_t i = 1; i < s.error_cdf.size(); ++i)
            REQUIRE(s.error_cdf[i] >= s.error_cdf[i - 1]);
    }
}

TEST_CASE("aggregate of identical rows has zero spread") {
    RunResult r;
    r.run_id = 0;
    r.bs_count = 4;
    r.per_uav_error_m = {0.25};
    r.matched = {true};
    r.crlb_m2 = 0.01;
    std::vector<RunResult> rows(5, r);
    for (int i = 0; i < 5; ++i) rows[static_cast<std::size_t>(i)].run_id = i;
    const auto summaries = aggregate(rows);
    REQUIRE(summaries.size() == 1);
    REQUIRE(summaries[0].mean_error_m == Catch::Approx(0.25));
    REQUIRE(summaries[0].median_error_m == Catch::Approx(0.25));
    REQUIRE(summaries[0].rmse_m == Catch::Approx(0.25));
    REQUIRE(summaries[0].miss_count == 0);
}

TEST_CASE("scenario env caches and reports per-target mse") {
    RootConfig cfg;
    cfg.scene.reflector_intensity = 0.0;
    cfg.scene.include_unintentional = false;
    const Recognizer rec = train_recognizer(cfg.waveform, cfg.scene.noise_power, 31, 12, 3);
    const Scene scene = make_scene(cfg.scene, 7, cfg.waveform.wavelength());

    ScenarioEnv env(scene, cfg.pipeline(), rec, 1, 99);
    const SelectionState all = SelectionState::all_on(8);
    const auto mse1 = env(all);
    const auto mse2 = env(all);
    REQUIRE(mse1.size() == 1);
    REQUIRE(mse1 == mse2);
    REQUIRE(mse1[0] < 1.0);  // all stations localize well

    const auto none = env(SelectionState::all_off(8));
    REQUIRE(none[0] == 1e6);
}
