#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/rng.hpp"

namespace uavsim {

/// A base station acting as a monostatic sensing node with a K-element ULA.
/// `rotation` is the boresight angle of the array in world coordinates; all
/// measured angles are relative to it.
struct BsPose {
    int id = 0;
    Vec2 position{};
    double rotation = 0.0;          // psi_n [rad]
    int antenna_count = 8;          // K
    double element_spacing = 0.00625;  // d_an [m], half wavelength at 24 GHz
    double tx_power = 1.0;          // P_tx [W]
    double tx_gain = 10.0;          // G_tx (linear)
    double rx_gain = 10.0;          // G_rx (linear)
    double beamwidth_3db = 2.0;     // [rad]

    void validate() const {
        if (antenna_count < 1) throw InputError("BsPose: antenna_count must be >= 1");
        if (element_spacing <= 0.0) throw InputError("BsPose: element_spacing must be > 0");
        if (tx_power <= 0.0) throw InputError("BsPose: tx_power must be > 0");
        if (beamwidth_3db <= 0.0 || beamwidth_3db >= kPi)
            throw InputError("BsPose: beamwidth_3db must lie in (0, pi)");
    }

    /// World position of antenna element k (elements laid out along the
    /// direction perpendicular to boresight, centered on `position`).
    Vec2 antenna_position(int k) const {
        const double off = (static_cast<double>(k) - 0.5 * (antenna_count - 1)) * element_spacing;
        return {position.x + off * std::cos(rotation + kPi / 2.0),
                position.y + off * std::sin(rotation + kPi / 2.0)};
    }
};

/// Rotor geometry driving the micro-Doppler modulation. rotor_count == 0
/// models a rigid scatterer with no blade returns.
struct RotorConfig {
    int rotor_count = 0;     // N_rot
    int blade_count = 2;     // N_bl
    double blade_length = 0.12;  // L_bl [m]
    double rotation_rate = 2.0 * kPi * 80.0;  // Omega [rad/s]
    double azimuth = 0.0;    // alpha [rad]
    double elevation = 0.3;  // beta [rad]

    void validate() const {
        if (rotor_count < 0) throw InputError("RotorConfig: rotor_count must be >= 0");
        if (rotor_count >= 1 && blade_count < 1)
            throw InputError("RotorConfig: blade_count must be >= 1 when rotors exist");
        if (rotor_count >= 1 && blade_length <= 0.0)
            throw InputError("RotorConfig: blade_length must be > 0");
    }
};

struct UavState {
    int id = 0;
    Vec2 position{};
    Vec2 velocity{};                             // world-frame [m/s]
    std::vector<double> radial_velocity_per_bs;  // v_i toward each station, indexed by bs id
    double rcs = 0.5;                            // sigma_t [m^2]
    RotorConfig rotor{};
    bool is_target = true;

    void validate() const {
        if (rcs <= 0.0) throw InputError("UavState: rcs must be > 0");
        rotor.validate();
    }

    /// Range rate seen by a station at `bs_pos` (positive = receding).
    double radial_velocity_toward(const Vec2& bs_pos) const {
        const Vec2 d = position - bs_pos;
        const double r = d.norm();
        if (r == 0.0) return 0.0;
        return velocity.dot(d) * (1.0 / r);
    }

    /// Stored per-station radial velocity when available, else the
    /// line-of-sight projection of the velocity vector.
    double radial_velocity_for(const BsPose& bs) const {
        if (bs.id >= 0 && static_cast<std::size_t>(bs.id) < radial_velocity_per_bs.size())
            return radial_velocity_per_bs[static_cast<std::size_t>(bs.id)];
        return radial_velocity_toward(bs.position);
    }
};

struct Reflector {
    int id = 0;
    Vec2 position{};
    double rcs = 10.0;  // sigma_r [m^2]

    void validate() const {
        if (rcs <= 0.0) throw InputError("Reflector: rcs must be > 0");
    }
};

struct Scene {
    double area_width = 90.0;
    double area_height = 90.0;
    std::vector<BsPose> stations;
    std::vector<UavState> uavs;
    std::vector<Reflector> reflectors;

    void validate() const {
        for (const auto& b : stations) b.validate();
        for (const auto& u : uavs) u.validate();
        for (const auto& r : reflectors) r.validate();
    }
};

enum class PathKind {
    Direct,    // BS -> UAV -> BS
    Ghost1,    // BS -> Reflector -> UAV -> BS
    Ghost2,    // BS -> UAV -> Reflector -> BS
    Ghost2nd,  // BS -> Reflector -> UAV -> Reflector -> BS
};

inline const char* to_string(PathKind k) {
    switch (k) {
        case PathKind::Direct: return "direct";
        case PathKind::Ghost1: return "ghost1";
        case PathKind::Ghost2: return "ghost2";
        case PathKind::Ghost2nd: return "ghost2nd";
    }
    return "?";
}

/// One propagation path as seen by one station. `apparent_angle` is the
/// arrival angle relative to the station boresight (the receive leg of the
/// path), `apparent_range` the monostatic-equivalent range.
struct PropagationPath {
    PathKind kind = PathKind::Direct;
    int uav_id = 0;
    std::optional<int> reflector_id{};
    double total_path_length = 0.0;  // [m]
    double apparent_range = 0.0;     // total_path_length / 2 [m]
    double apparent_angle = 0.0;     // [rad], boresight-relative
    double apparent_velocity = 0.0;  // half the path-length rate [m/s]
    double snr = 0.0;                // linear
    double amplitude = 0.0;          // sqrt(snr * noise_power) at enumeration
};

/// Direct-path SNR from the radar range equation.
inline double direct_snr(const BsPose& bs, double range_m, double rcs, double wavelength,
                         double noise_power) {
    const double four_pi = 4.0 * kPi;
    return bs.tx_power * bs.tx_gain * bs.rx_gain * wavelength * wavelength * rcs /
           (four_pi * four_pi * four_pi * std::pow(range_m, 4) * noise_power);
}

/// First-order ghost SNR: one extra bounce off a reflector with RCS sigma_r,
/// legs r1 (reflector-UAV) and r2 (reflector-BS).
inline double ghost_snr(const BsPose& bs, double range_m, double r1, double r2, double rcs_uav,
                        double rcs_reflector, double wavelength, double noise_power) {
    const double four_pi = 4.0 * kPi;
    return bs.tx_power * bs.tx_gain * bs.rx_gain * wavelength * wavelength * rcs_uav *
           rcs_reflector /
           (four_pi * four_pi * four_pi * four_pi * range_m * range_m * r1 * r1 * r2 * r2 *
            noise_power);
}

struct EnumerateOptions {
    double snr_floor = 0.1;  // -10 dB: weaker paths are dropped
};

/// Enumerate all propagation paths between one station and every scatterer:
/// the direct return per UAV plus first- and second-order ghosts per
/// (UAV, reflector) pair. Pure function of its inputs.
inline std::vector<PropagationPath> enumerate_paths(const Scene& scene, const BsPose& bs,
                                                    double noise_power, double wavelength,
                                                    const EnumerateOptions& opt = {}) {
    if (noise_power <= 0.0) throw InputError("enumerate_paths: noise_power must be > 0");
    if (wavelength <= 0.0) throw InputError("enumerate_paths: wavelength must be > 0");

    std::vector<PropagationPath> paths;
    const auto keep = [&](PropagationPath p) {
        if (p.snr >= opt.snr_floor) {
            p.amplitude = std::sqrt(p.snr * noise_power);
            paths.push_back(p);
        }
    };

    for (const auto& uav : scene.uavs) {
        const double range = distance(bs.position, uav.position);
        if (range == 0.0)
            throw ComputeError("enumerate_paths: UAV coincides with station " +
                               std::to_string(bs.id));
        const double angle_uav = wrap_angle(bearing(bs.position, uav.position) - bs.rotation);
        const double v_bs = uav.radial_velocity_for(bs);

        PropagationPath direct;
        direct.kind = PathKind::Direct;
        direct.uav_id = uav.id;
        direct.total_path_length = 2.0 * range;
        direct.apparent_range = range;
        direct.apparent_angle = angle_uav;
        direct.apparent_velocity = v_bs;
        direct.snr = direct_snr(bs, range, uav.rcs, wavelength, noise_power);
        keep(direct);

        for (const auto& refl : scene.reflectors) {
            const double r1 = distance(refl.position, uav.position);
            const double r2 = distance(refl.position, bs.position);
            if (r1 == 0.0 || r2 == 0.0)
                throw ComputeError("enumerate_paths: degenerate reflector geometry");
            const double angle_refl = wrap_angle(bearing(bs.position, refl.position) - bs.rotation);
            const double v_refl = uav.radial_velocity_toward(refl.position);
            const double snr_g1 =
                ghost_snr(bs, range, r1, r2, uav.rcs, refl.rcs, wavelength, noise_power);

            // Type-1: bounce before illuminating the UAV; last leg arrives
            // from the UAV direction.
            PropagationPath g1;
            g1.kind = PathKind::Ghost1;
            g1.uav_id = uav.id;
            g1.reflector_id = refl.id;
            g1.total_path_length = range + r1 + r2;
            g1.apparent_range = 0.5 * g1.total_path_length;
            g1.apparent_angle = angle_uav;
            g1.apparent_velocity = 0.5 * (v_bs + v_refl);
            g1.snr = snr_g1;
            keep(g1);

            // Type-2: bounce after the UAV; arrival from the reflector.
            PropagationPath g2 = g1;
            g2.kind = PathKind::Ghost2;
            g2.apparent_angle = angle_refl;
            keep(g2);

            // Second order: bounce on both legs. No closed form in the
            // range-equation family; cascade one more bistatic loss factor.
            PropagationPath g3;
            g3.kind = PathKind::Ghost2nd;
            g3.uav_id = uav.id;
            g3.reflector_id = refl.id;
            g3.total_path_length = 2.0 * (r1 + r2);
            g3.apparent_range = r1 + r2;
            g3.apparent_angle = angle_refl;
            g3.apparent_velocity = v_refl;
            g3.snr = snr_g1 * refl.rcs / (4.0 * kPi * r2 * r2);
            keep(g3);
        }
    }
    return paths;
}

/// Draw reflectors from a Poisson point process of the given expected count,
/// uniform over a square of the given area anchored at the origin.
inline std::vector<Reflector> sample_reflectors(double intensity, double area_m2,
                                                std::uint64_t rng_seed, double rcs = 10.0) {
    if (intensity < 0.0) throw InputError("sample_reflectors: intensity must be >= 0");
    CounterRng rng(derive_seed(rng_seed, 0x5eedu));
    const int count = rng.poisson(intensity);
    const double side = std::sqrt(area_m2);
    std::vector<Reflector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Reflector r;
        r.id = i;
        r.position = {rng.uniform(0.0, side), rng.uniform(0.0, side)};
        r.rcs = rcs;
        out.push_back(r);
    }
    return out;
}

}  // namespace uavsim
