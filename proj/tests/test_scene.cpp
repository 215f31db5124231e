#include <catch2/catch_amalgamated.hpp>

#include "uavsim/scene.hpp"

using namespace uavsim;

namespace {

Scene single_uav_scene() {
    Scene s;
    BsPose bs;
    bs.id = 0;
    bs.position = {0.0, 0.0};
    bs.rotation = 0.0;
    bs.beamwidth_3db = 3.0;
    s.stations.push_back(bs);

    UavState uav;
    uav.id = 0;
    uav.position = {10.0, 0.0};
    uav.rcs = 0.5;
    s.uavs.push_back(uav);
    return s;
}

constexpr double kLambda = 0.0125;
constexpr double kNoise = 1e-15;

}  // namespace

TEST_CASE("ghost path geometry matches hand computation") {
    Scene s = single_uav_scene();
    Reflector r;
    r.id = 0;
    r.position = {0.0, 10.0};
    r.rcs = 10.0;
    s.reflectors.push_back(r);

    EnumerateOptions opt;
    opt.snr_floor = 0.0;  // keep everything
    const auto paths = enumerate_paths(s, s.stations[0], kNoise, kLambda, opt);
    REQUIRE(paths.size() == 4);

    const auto find = [&](PathKind k) {
        for (const auto& p : paths)
            if (p.kind == k) return p;
        throw std::runtime_error("path kind missing");
    };
    const auto g1 = find(PathKind::Ghost1);
    // BS(0,0) -> Refl(0,10): 10, Refl -> UAV(10,0): sqrt(200), UAV -> BS: 10
    REQUIRE(g1.total_path_length == Catch::Approx(10.0 + std::sqrt(200.0) + 10.0));
    REQUIRE(g1.apparent_range == Catch::Approx(17.0710678).epsilon(1e-6));

    const auto g2 = find(PathKind::Ghost2);
    REQUIRE(g2.apparent_range == Catch::Approx(g1.apparent_range));
    // ghost1 arrives from the UAV, ghost2 from the reflector
    REQUIRE(g1.apparent_angle == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(g2.apparent_angle == Catch::Approx(kPi / 2.0).margin(1e-12));

    const auto g3 = find(PathKind::Ghost2nd);
    REQUIRE(g3.apparent_range == Catch::Approx(10.0 + std::sqrt(200.0)));
    REQUIRE(g3.snr < g1.snr);
}

TEST_CASE("no reflectors gives exactly one direct path per uav") {
    Scene s = single_uav_scene();
    UavState second = s.uavs[0];
    second.id = 1;
    second.position = {20.0, 5.0};
    s.uavs.push_back(second);

    const auto paths = enumerate_paths(s, s.stations[0], kNoise, kLambda);
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) REQUIRE(p.kind == PathKind::Direct);
}

TEST_CASE("snr scales linearly with tx power, lengths unchanged") {
    Scene s = single_uav_scene();
    Reflector r;
    r.position = {5.0, 8.0};
    s.reflectors.push_back(r);

    EnumerateOptions opt;
    opt.snr_floor = 0.0;
    const auto base = enumerate_paths(s, s.stations[0], kNoise, kLambda, opt);
    s.stations[0].tx_power *= 2.0;
    const auto doubled = enumerate_paths(s, s.stations[0], kNoise, kLambda, opt);
    REQUIRE(base.size() == doubled.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        REQUIRE(doubled[i].snr == Catch::Approx(2.0 * base[i].snr).epsilon(1e-12));
        REQUIRE(doubled[i].total_path_length == Catch::Approx(base[i].total_path_length));
    }
}

TEST_CASE("direct snr formula against a hand evaluation") {
    Scene s = single_uav_scene();
    auto& bs = s.stations[0];
    bs.tx_power = 1.0;
    bs.tx_gain = 1.0;
    bs.rx_gain = 1.0;
    s.uavs[0].rcs = 1.0;
    // gamma = lambda^2 / ((4 pi)^3 R^4 N0), R = 10
    const double expected =
        kLambda * kLambda / (std::pow(4.0 * kPi, 3) * 1e4 * kNoise);
    EnumerateOptions opt;
    opt.snr_floor = 0.0;
    const auto paths = enumerate_paths(s, bs, kNoise, kLambda, opt);
    REQUIRE(paths[0].snr == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ghost snr below direct snr for generated geometries") {
    Scene s = single_uav_scene();
    s.uavs[0].position = {40.0, 10.0};
    for (int i = 0; i < 5; ++i) {
        Reflector r;
        r.id = i;
        r.position = {10.0 + 12.0 * i, 25.0};
        r.rcs = 10.0;
        s.reflectors.push_back(r);
    }
    EnumerateOptions opt;
    opt.snr_floor = 0.0;
    const auto paths = enumerate_paths(s, s.stations[0], kNoise, kLambda, opt);
    double direct = 0.0;
    for (const auto& p : paths)
        if (p.kind == PathKind::Direct) direct = p.snr;
    for (const auto& p : paths) {
        if (p.kind == PathKind::Ghost1 || p.kind == PathKind::Ghost2) REQUIRE(p.snr < direct);
        if (p.kind == PathKind::Ghost2nd) REQUIRE(p.snr < direct);
    }
}

TEST_CASE("snr floor prunes weak paths") {
    Scene s = single_uav_scene();
    Reflector r;
    r.position = {60.0, 60.0};  // far reflector: weak ghosts
    r.rcs = 1.0;
    s.reflectors.push_back(r);

    EnumerateOptions all;
    all.snr_floor = 0.0;
    EnumerateOptions floored;
    floored.snr_floor = 0.1;
    const auto full = enumerate_paths(s, s.stations[0], kNoise, kLambda, all);
    const auto pruned = enumerate_paths(s, s.stations[0], kNoise, kLambda, floored);
    REQUIRE(full.size() > pruned.size());
    for (const auto& p : pruned) REQUIRE(p.snr >= 0.1);
}

TEST_CASE("enumerate_paths is pure") {
    Scene s = single_uav_scene();
    Reflector r;
    r.position = {3.0, 7.0};
    s.reflectors.push_back(r);
    const auto a = enumerate_paths(s, s.stations[0], kNoise, kLambda);
    const auto b = enumerate_paths(s, s.stations[0], kNoise, kLambda);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].snr == b[i].snr);
        REQUIRE(a[i].total_path_length == b[i].total_path_length);
        REQUIRE(a[i].apparent_angle == b[i].apparent_angle);
    }
}

TEST_CASE("uav on top of station raises") {
    Scene s = single_uav_scene();
    s.uavs[0].position = s.stations[0].position;
    REQUIRE_THROWS_AS(enumerate_paths(s, s.stations[0], kNoise, kLambda), ComputeError);
}

TEST_CASE("ghost doppler uses both legs") {
    Scene s = single_uav_scene();
    s.uavs[0].velocity = {1.0, 0.0};  // directly away from the station
    s.uavs[0].radial_velocity_per_bs = {1.0};
    Reflector r;
    r.position = {10.0, 10.0};  // directly above the UAV
    s.reflectors.push_back(r);

    EnumerateOptions opt;
    opt.snr_floor = 0.0;
    const auto paths = enumerate_paths(s, s.stations[0], kNoise, kLambda, opt);
    for (const auto& p : paths) {
        if (p.kind == PathKind::Direct) REQUIRE(p.apparent_velocity == Catch::Approx(1.0));
        // velocity is perpendicular to the UAV-reflector leg: ghost doppler halves
        if (p.kind == PathKind::Ghost1) REQUIRE(p.apparent_velocity == Catch::Approx(0.5));
        if (p.kind == PathKind::Ghost2nd)
            REQUIRE(p.apparent_velocity == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("poisson reflector sampling") {
    SECTION("zero intensity gives empty list") {
        REQUIRE(sample_reflectors(0.0, 8100.0, 1).empty());
    }
    SECTION("same seed gives identical lists") {
        const auto a = sample_reflectors(3.0, 8100.0, 99);
        const auto b = sample_reflectors(3.0, 8100.0, 99);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].position.x == b[i].position.x);
            REQUIRE(a[i].position.y == b[i].position.y);
        }
    }
    SECTION("sample mean count approaches the intensity") {
        long total = 0;
        const int n = 100000;
        for (int seed = 0; seed < n; ++seed)
            total += static_cast<long>(sample_reflectors(3.0, 8100.0, seed).size());
        const double mean = static_cast<double>(total) / n;
        REQUIRE(mean > 2.95);
        REQUIRE(mean < 3.05);
    }
    SECTION("positions stay inside the area") {
        for (int seed = 0; seed < 50; ++seed) {
            for (const auto& r : sample_reflectors(5.0, 8100.0, seed)) {
                REQUIRE(r.position.x >= 0.0);
                REQUIRE(r.position.x <= 90.0);
                REQUIRE(r.position.y >= 0.0);
                REQUIRE(r.position.y <= 90.0);
            }
        }
    }
}

TEST_CASE("type invariants are enforced") {
    BsPose bs;
    bs.antenna_count = 0;
    REQUIRE_THROWS_AS(bs.validate(), InputError);

    UavState u;
    u.rcs = -1.0;
    REQUIRE_THROWS_AS(u.validate(), InputError);

    RotorConfig r;
    r.rotor_count = 2;
    r.blade_count = 0;
    REQUIRE_THROWS_AS(r.validate(), InputError);
}
