#include <catch2/catch_amalgamated.hpp>

#include "uavsim/mds.hpp"
#include "uavsim/waveform.hpp"

using namespace uavsim;

namespace {

std::vector<double> sine(double freq_hz, double fs, std::size_t n, double amp = 1.0,
                         double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / fs + phase);
    return x;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    return num / std::sqrt(da * db);
}

/// Dominant frequency via zero-crossing rate.
double dominant_freq(const std::vector<double>& x, double fs) {
    return detail::count_zero_crossings(x) * fs / (2.0 * static_cast<double>(x.size()));
}

std::vector<cplx> rotor_dwell(double omega_hz, std::uint64_t seed, double snr = 100.0) {
    RotorConfig rotor;
    rotor.rotor_count = 4;
    rotor.blade_count = 2;
    rotor.blade_length = 0.12;
    rotor.rotation_rate = 2.0 * kPi * omega_hz;
    rotor.elevation = 0.3;
    const WaveformConfig wf;
    auto echo = synthesize_rotor_echo(rotor, 30.0, wf, wf.wavelength());
    double power = 0.0;
    for (const auto& s : echo) power += std::norm(s);
    power /= static_cast<double>(echo.size());
    CounterRng rng(seed);
    const double noise = power / snr;
    for (auto& s : echo) s += rng.complex_gaussian(noise);
    return echo;
}

std::vector<double> envelope_of(const std::vector<cplx>& echo) {
    double mean = 0.0;
    for (const auto& s : echo) mean += std::abs(s);
    mean /= static_cast<double>(echo.size());
    std::vector<double> x(echo.size());
    for (std::size_t i = 0; i < echo.size(); ++i) x[i] = std::abs(echo[i]) - mean;
    return x;
}

}  // namespace

TEST_CASE("stft of a pure tone peaks at the tone bin in every frame") {
    const double fs = 8192.0;
    const std::size_t n = 4096;
    std::vector<cplx> x(n);
    const int bin = 24;  // with window 256 -> 24 * fs/256 Hz
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::polar(1.0, 2.0 * kPi * bin * static_cast<double>(i) / 256.0);
    const auto s = stft(x, 256, 128);
    for (int t = 0; t < s.frames; ++t) {
        int best = 0;
        for (int f = 1; f < s.freq_bins; ++f)
            if (s.at(f, t) > s.at(best, t)) best = f;
        REQUIRE(best == bin);
    }
}

TEST_CASE("stft of zero signal is zero") {
    std::vector<cplx> x(1024, cplx(0.0, 0.0));
    const auto s = stft(x, 128, 64);
    for (double v : s.magnitude) REQUIRE(v == 0.0);
}

TEST_CASE("spectrogram flash rate tracks N_bl * Omega / 2 pi") {
    RotorConfig rotor;
    rotor.rotor_count = 1;
    rotor.blade_count = 2;
    rotor.blade_length = 0.12;
    rotor.rotation_rate = 2.0 * kPi * 100.0;  // flash rate 200 Hz
    rotor.elevation = 0.3;
    const WaveformConfig wf;
    const auto echo = synthesize_rotor_echo(rotor, 25.0, wf, wf.wavelength());
    const auto s = stft(echo, 256, 64);

    // frame-energy envelope peaks once per flash
    std::vector<double> frame_energy(static_cast<std::size_t>(s.frames), 0.0);
    for (int t = 0; t < s.frames; ++t)
        for (int f = 0; f < s.freq_bins; ++f) frame_energy[static_cast<std::size_t>(t)] += s.at(f, t);
    double peak = 0.0, floor = 1e300;
    for (double e : frame_energy) {
        peak = std::max(peak, e);
        floor = std::min(floor, e);
    }
    const double cut = floor + 0.5 * (peak - floor);
    int flashes = 0;
    bool above = false;
    for (double e : frame_energy) {
        if (e > cut && !above) ++flashes;
        above = e > cut;
    }
    // 64 ms of signal at 200 flashes/s -> 12.8 expected
    REQUIRE(flashes >= 10);
    REQUIRE(flashes <= 15);
}

TEST_CASE("emd reconstruction is exact to 1e-10 relative") {
    const double fs = 1000.0;
    auto x = sine(50.0, fs, 1000);
    const auto y = sine(5.0, fs, 1000, 2.0, 0.7);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];

    const auto set = emd(x, 6);
    REQUIRE(!set.imfs.empty());
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sum = set.residual[i];
        for (const auto& imf : set.imfs) sum += imf[i];
        err += (sum - x[i]) * (sum - x[i]);
        norm += x[i] * x[i];
    }
    REQUIRE(std::sqrt(err / norm) < 1e-10);
}

TEST_CASE("first imf of a pure sinusoid correlates above 0.99") {
    const auto x = sine(50.0, 1000.0, 1200);
    const auto set = emd(x, 4);
    REQUIRE(!set.imfs.empty());
    REQUIRE(correlation(set.imfs[0], x) > 0.99);
}

TEST_CASE("two-tone mixture separates by frequency") {
    const double fs = 1000.0;
    auto x = sine(50.0, fs, 2000);
    const auto slow = sine(5.0, fs, 2000, 2.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += slow[i];

    const auto set = emd(x, 5);
    REQUIRE(set.imfs.size() >= 2);
    const double f1 = dominant_freq(set.imfs[0], fs);
    const double f2 = dominant_freq(set.imfs[1], fs);
    REQUIRE(f1 == Catch::Approx(50.0).margin(10.0));
    REQUIRE(f2 == Catch::Approx(5.0).margin(3.0));
}

TEST_CASE("constant signal yields no imfs") {
    const std::vector<double> x(100, 3.14);
    const auto set = emd(x, 4);
    REQUIRE(set.imfs.empty());
    REQUIRE(set.residual == x);
}

TEST_CASE("imf extrema and zero-crossing counts differ by at most one") {
    CounterRng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(600);
        for (auto& v : x) v = rng.gaussian();
        const auto set = emd(x, 4);
        for (const auto& imf : set.imfs) {
            std::vector<int> maxima, minima;
            detail::find_extrema(imf, maxima, minima);
            const int extrema = static_cast<int>(maxima.size() + minima.size());
            const int zc = detail::count_zero_crossings(imf);
            REQUIRE(std::abs(extrema - zc) <= 1);
        }
    }
}

TEST_CASE("feature extraction on a single-imf signal") {
    const auto x = sine(50.0, 1000.0, 1000);
    const auto set = emd(x, 4);
    const auto f = extract_features(set, x);
    REQUIRE(f[1] == Catch::Approx(1.0).margin(0.05));   // normalized energy of IMF1
    REQUIRE(f[3] == Catch::Approx(1.0).margin(0.05));   // zero-crossing ratio of IMF1
}

TEST_CASE("scale-invariant features ignore amplitude") {
    CounterRng rng(3);
    std::vector<double> x(800);
    for (auto& v : x) v = rng.gaussian();
    auto scaled = x;
    for (auto& v : scaled) v *= 7.5;

    const auto fa = extract_features(emd(x, 4), x);
    const auto fb = extract_features(emd(scaled, 4), scaled);
    for (int d = 0; d < 4; ++d) {
        REQUIRE(fa[d * 4 + 0] == fb[d * 4 + 0]);  // zero-crossing counts
        REQUIRE(fa[d * 4 + 1] == Catch::Approx(fb[d * 4 + 1]).margin(1e-9));  // energies
        REQUIRE(fa[d * 4 + 3] == Catch::Approx(fb[d * 4 + 3]).margin(1e-9));  // ratios
    }
}

TEST_CASE("zero-energy input is rejected") {
    const std::vector<double> x(100, 0.0);
    ImfSet empty;
    empty.residual = x;
    REQUIRE_THROWS_AS(extract_features(empty, x), ComputeError);
}

TEST_CASE("rotor and noise features separate strongly") {
    const int draws = 100;
    std::vector<std::vector<double>> rotor_energy(4), noise_energy(4);
    const WaveformConfig wf;
    const std::size_t seg = 1024;
    for (int i = 0; i < draws; ++i) {
        const auto dwell = rotor_dwell(100.0, 100 + i, 50.0);
        std::vector<cplx> seg_slice(dwell.begin(), dwell.begin() + seg);
        auto x = envelope_of(seg_slice);
        const auto fr = extract_features(emd(x, 4), x);

        CounterRng rng(9000 + i);
        std::vector<cplx> noise(seg);
        for (auto& v : noise) v = rng.complex_gaussian(1.0);
        auto y = envelope_of(noise);
        const auto fn = extract_features(emd(y, 4), y);
        for (int d = 0; d < 4; ++d) {
            rotor_energy[static_cast<std::size_t>(d)].push_back(fr[d * 4 + 1]);
            noise_energy[static_cast<std::size_t>(d)].push_back(fn[d * 4 + 1]);
        }
    }
    const auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::pair<double, double>(m, std::sqrt(s / static_cast<double>(v.size())));
    };
    // The leading IMF energies dominate the class separation; the deep IMFs
    // are heavy-tailed across draws (EMD modes are not orthogonal), so only
    // the first two slots separate reliably.
    int separated = 0;
    double first_slot_sigma = 0.0;
    for (int d = 0; d < 4; ++d) {
        const auto [mr, sr] = mean_std(rotor_energy[static_cast<std::size_t>(d)]);
        const auto [mn, sn] = mean_std(noise_energy[static_cast<std::size_t>(d)]);
        const double pooled = std::sqrt(0.5 * (sr * sr + sn * sn));
        const double sigma = std::abs(mr - mn) / pooled;
        if (d == 0) first_slot_sigma = sigma;
        if (sigma > 3.0) ++separated;
    }
    REQUIRE(separated >= 2);
    REQUIRE(first_slot_sigma > 10.0);
}

TEST_CASE("svm solves a linearly separable toy set") {
    std::vector<FeatureVector> pos, neg;
    CounterRng rng(5);
    for (int i = 0; i < 40; ++i) {
        FeatureVector a{}, b{};
        a[0] = 2.0 + rng.gaussian() * 0.3;
        a[1] = 2.0 + rng.gaussian() * 0.3;
        b[0] = -2.0 + rng.gaussian() * 0.3;
        b[1] = -2.0 + rng.gaussian() * 0.3;
        pos.push_back(a);
        neg.push_back(b);
    }
    const auto model = train_svm(pos, neg, 10.0, 0.5, 1);
    for (const auto& p : pos) REQUIRE(svm_decision(model, p) > 0.0);
    for (const auto& n : neg) REQUIRE(svm_decision(model, n) < 0.0);
}

TEST_CASE("flipping labels negates the decision function") {
    std::vector<FeatureVector> a, b;
    CounterRng rng(6);
    for (int i = 0; i < 30; ++i) {
        FeatureVector u{}, v{};
        for (int j = 0; j < 4; ++j) {
            u[j] = rng.gaussian() + 1.0;
            v[j] = rng.gaussian() - 1.0;
        }
        a.push_back(u);
        b.push_back(v);
    }
    const auto m1 = train_svm(a, b, 1.0, 0.25, 7);
    const auto m2 = train_svm(b, a, 1.0, 0.25, 7);
    CounterRng probe(8);
    for (int i = 0; i < 20; ++i) {
        FeatureVector x{};
        for (int j = 0; j < 4; ++j) x[j] = probe.gaussian() * 2.0;
        REQUIRE(svm_decision(m1, x) == Catch::Approx(-svm_decision(m2, x)).margin(5e-3));
    }
}

TEST_CASE("svm training is deterministic given the seed") {
    std::vector<FeatureVector> pos, neg;
    CounterRng rng(11);
    for (int i = 0; i < 25; ++i) {
        FeatureVector p{}, n{};
        for (int j = 0; j < 16; ++j) {
            p[j] = rng.gaussian() + 0.8;
            n[j] = rng.gaussian() - 0.8;
        }
        pos.push_back(p);
        neg.push_back(n);
    }
    const auto m1 = train_svm(pos, neg, 1.0, 0.0, 42);
    const auto m2 = train_svm(pos, neg, 1.0, 0.0, 42);
    REQUIRE(m1.bias == m2.bias);
    REQUIRE(m1.dual_coefficients == m2.dual_coefficients);
}

TEST_CASE("recognition probability granularity is 1/segment_count") {
    REQUIRE(13.0 / 15.0 == Catch::Approx(0.8667).margin(5e-5));

    // tiny model trained on rotor vs noise segment features
    std::vector<FeatureVector> pos, neg;
    for (int i = 0; i < 12; ++i) {
        const auto dwell = rotor_dwell(90.0 + 3 * i, 300 + i, 60.0);
        const std::size_t seg = dwell.size() / 15;
        std::vector<cplx> slice(dwell.begin(), dwell.begin() + seg);
        auto x = envelope_of(slice);
        pos.push_back(extract_features(emd(x, 4), x));

        CounterRng rng(400 + i);
        std::vector<cplx> noise(seg);
        for (auto& v : noise) v = rng.complex_gaussian(1.0);
        auto y = envelope_of(noise);
        neg.push_back(extract_features(emd(y, 4), y));
    }
    const auto model = train_svm(pos, neg, 1.0, 0.0, 3);

    const auto dwell = rotor_dwell(100.0, 999, 60.0);
    const double pr = recognition_probability(dwell, model, 15);
    REQUIRE(pr >= 0.0);
    REQUIRE(pr <= 1.0);
    const double scaled = pr * 15.0;
    REQUIRE(scaled == Catch::Approx(std::round(scaled)).margin(1e-9));

    REQUIRE_THROWS_AS(recognition_probability(dwell, model, 0), InputError);
}
