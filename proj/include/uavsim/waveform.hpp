#pragma once

#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/rng.hpp"
#include "uavsim/scene.hpp"

namespace uavsim {

/// LFMCW chirp parameters. The echo cube dimensions L (fast time) and M
/// (slow time) must be powers of two so the profile FFTs run radix-2.
struct WaveformConfig {
    double carrier_hz = 24.0e9;      // f_0
    double bandwidth_hz = 100.0e6;   // B
    double pulse_duration_s = 1e-3;  // T
    int samples_per_pulse = 128;     // L
    int pulse_count = 64;            // M
    double amplitude = 1.0;          // A

    double slope() const { return bandwidth_hz / pulse_duration_s; }              // mu [Hz/s]
    double sample_rate() const { return samples_per_pulse / pulse_duration_s; }   // f_s [Hz]
    double wavelength() const { return kSpeedOfLight / carrier_hz; }

    /// Range mapped to fast-time bin l.
    double range_at_bin(int l) const {
        return kSpeedOfLight * sample_rate() * l / (2.0 * samples_per_pulse * slope());
    }
    double range_bin_width() const { return range_at_bin(1); }

    /// Velocity mapped to slow-time bin m.
    double velocity_at_bin(int m) const {
        return kSpeedOfLight * m / (2.0 * carrier_hz * pulse_count * pulse_duration_s);
    }
    double velocity_bin_width() const { return velocity_at_bin(1); }

    /// Largest range whose beat frequency stays below f_s / 2.
    double unambiguous_range() const {
        return kSpeedOfLight * sample_rate() / (4.0 * slope());
    }
    /// Largest |radial velocity| representable without slow-time aliasing.
    double unambiguous_velocity() const {
        return kSpeedOfLight / (4.0 * carrier_hz * pulse_duration_s);
    }

    void validate() const {
        if (bandwidth_hz <= 0.0) throw InputError("WaveformConfig: bandwidth must be > 0");
        if (pulse_duration_s <= 0.0) throw InputError("WaveformConfig: pulse duration must be > 0");
        if (carrier_hz <= 0.0) throw InputError("WaveformConfig: carrier must be > 0");
        if (!is_pow2(static_cast<std::size_t>(samples_per_pulse)) ||
            !is_pow2(static_cast<std::size_t>(pulse_count)))
            throw InputError("WaveformConfig: L and M must be powers of two");
    }
};

/// Complex baseband IF samples, indexed (antenna k, pulse m, sample l),
/// row-major in that order.
struct EchoCube {
    int antennas = 0;  // K
    int pulses = 0;    // M
    int samples = 0;   // L
    int bs_id = 0;
    WaveformConfig config{};
    std::vector<cplx> data;

    cplx& at(int k, int m, int l) {
        return data[(static_cast<std::size_t>(k) * pulses + m) * samples + l];
    }
    const cplx& at(int k, int m, int l) const {
        return data[(static_cast<std::size_t>(k) * pulses + m) * samples + l];
    }
};

/// De-chirped echo synthesis at baseband. Each path becomes a fast-time beat
/// tone at mu*tau, a slow-time Doppler progression and a linear ULA phase
/// ramp across antennas; paths outside the station's 3 dB beamwidth are not
/// illuminated and contribute nothing. Circular complex Gaussian noise of
/// per-sample power `noise_power` is added from the counter RNG, so the
/// result is a pure function of (inputs, rng_seed).
inline EchoCube synthesize_if_cube(const std::vector<PropagationPath>& paths,
                                   const WaveformConfig& cfg, const BsPose& bs,
                                   double noise_power, std::uint64_t rng_seed) {
    cfg.validate();
    bs.validate();
    if (noise_power < 0.0) throw InputError("synthesize_if_cube: noise_power must be >= 0");

    const int K = bs.antenna_count;
    const int M = cfg.pulse_count;
    const int L = cfg.samples_per_pulse;
    const double fs = cfg.sample_rate();
    const double lambda = cfg.wavelength();

    EchoCube cube;
    cube.antennas = K;
    cube.pulses = M;
    cube.samples = L;
    cube.bs_id = bs.id;
    cube.config = cfg;
    cube.data.assign(static_cast<std::size_t>(K) * M * L, cplx(0.0, 0.0));

    std::vector<cplx> fast(L), slow(M), ant(K);
    for (const auto& path : paths) {
        const double tau0 = path.total_path_length / kSpeedOfLight;
        const double beat_hz = cfg.slope() * tau0;
        if (beat_hz > fs / 2.0)
            throw ComputeError("synthesize_if_cube: beat frequency above f_s/2, apparent range " +
                               std::to_string(path.apparent_range) + " m exceeds unambiguous " +
                               std::to_string(cfg.unambiguous_range()) + " m");
        if (std::abs(path.apparent_angle) > bs.beamwidth_3db / 2.0) continue;

        const double dphi_l = 2.0 * kPi * beat_hz / fs;
        const double dphi_m =
            4.0 * kPi * cfg.carrier_hz * path.apparent_velocity * cfg.pulse_duration_s /
            kSpeedOfLight;
        const double dphi_k =
            2.0 * kPi / lambda * bs.element_spacing * std::sin(path.apparent_angle);
        const double base =
            2.0 * kPi * cfg.carrier_hz * tau0 - kPi * cfg.slope() * tau0 * tau0;
        const double amp = path.amplitude * cfg.amplitude;

        for (int l = 0; l < L; ++l) fast[l] = std::polar(1.0, dphi_l * l);
        for (int m = 0; m < M; ++m) slow[m] = std::polar(amp, base + dphi_m * m);
        for (int k = 0; k < K; ++k) ant[k] = std::polar(1.0, dphi_k * k);

        for (int k = 0; k < K; ++k) {
            for (int m = 0; m < M; ++m) {
                const cplx c_km = ant[k] * slow[m];
                cplx* row = &cube.at(k, m, 0);
                for (int l = 0; l < L; ++l) row[l] += c_km * fast[l];
            }
        }
    }

    if (noise_power > 0.0) {
        CounterRng rng(rng_seed);
        for (auto& s : cube.data) s += rng.complex_gaussian(noise_power);
    }
    return cube;
}

/// Rotating-blade echo sampled at f_s over the full frame (M*T seconds).
/// Each blade contributes a sinc-enveloped, phase-modulated return; blades
/// are offset by 2*pi/N_bl and rotors sum coherently.
inline std::vector<cplx> synthesize_rotor_echo(const RotorConfig& rotor, double range_m,
                                               const WaveformConfig& cfg, double wavelength) {
    rotor.validate();
    if (rotor.rotor_count < 1)
        throw InputError("synthesize_rotor_echo: rotor_count must be >= 1");
    if (range_m <= 0.0) throw InputError("synthesize_rotor_echo: range must be > 0");

    const std::size_t n = static_cast<std::size_t>(cfg.pulse_count) * cfg.samples_per_pulse;
    const double dt = 1.0 / cfg.sample_rate();
    const double mod_depth = 2.0 * kPi * rotor.blade_length / wavelength *
                             std::cos(rotor.elevation);
    const cplx bulk = std::polar(rotor.blade_length * rotor.rotor_count,
                                 -4.0 * kPi * range_m / wavelength);

    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        cplx acc(0.0, 0.0);
        for (int b = 0; b < rotor.blade_count; ++b) {
            const double blade_phase = 2.0 * kPi * b / rotor.blade_count;
            const double x = mod_depth *
                             std::cos(blade_phase + rotor.rotation_rate * t - rotor.azimuth);
            const double envelope = (x == 0.0) ? 1.0 : std::sin(x) / x;
            acc += envelope * std::polar(1.0, -x);
        }
        out[i] = bulk * acc;
    }
    return out;
}

}  // namespace uavsim
