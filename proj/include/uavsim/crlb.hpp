#pragma once

#include <Eigen/Dense>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/scene.hpp"
#include "uavsim/waveform.hpp"

namespace uavsim {

/// Inverse measurement variances for one station's ToA and AoA channels.
struct FimWeights {
    double lambda_toa = 0.0;  // [1/m^2]
    double lambda_aoa = 0.0;  // [1/rad^2]

    void validate() const {
        if (lambda_toa < 0.0 || lambda_aoa < 0.0)
            throw InputError("FimWeights: weights must be >= 0");
        if (lambda_toa == 0.0 && lambda_aoa == 0.0)
            throw InputError("FimWeights: at least one weight must be positive");
    }
};

struct Efim {
    Eigen::Matrix2d matrix = Eigen::Matrix2d::Zero();
    int contributing_antennas = 0;
};

/// Information contributed by a single antenna: the ToA rank-one term along
/// the antenna-UAV bearing plus the AoA term along its perpendicular,
/// scaled by 1/range^2.
inline Eigen::Matrix2d fim_antenna(const Vec2& p_uav, const Vec2& p_antenna,
                                   const FimWeights& w) {
    w.validate();
    const double range = distance(p_uav, p_antenna);
    if (range == 0.0) throw ComputeError("fim_antenna: UAV coincides with antenna");
    const double theta = bearing(p_uav, p_antenna);
    const double ct = std::cos(theta), st = std::sin(theta);

    Eigen::Matrix2d j;
    const double a = w.lambda_aoa / (range * range);
    j(0, 0) = w.lambda_toa * ct * ct + a * st * st;
    j(0, 1) = w.lambda_toa * ct * st - a * st * ct;
    j(1, 0) = j(0, 1);
    j(1, 1) = w.lambda_toa * st * st + a * ct * ct;
    return j;
}

/// Default weight provisioning from the waveform and the direct-path SNR:
/// sigma_r = c / (2B sqrt(2 gamma)) for ranging and the ULA CRB proxy for
/// bearing, so the bound tracks the same SNR the detector sees.
inline FimWeights make_fim_weights(const BsPose& bs, double snr, const WaveformConfig& wf) {
    if (snr <= 0.0) throw InputError("make_fim_weights: snr must be > 0");
    const double sigma_r = kSpeedOfLight / (2.0 * wf.bandwidth_hz * std::sqrt(2.0 * snr));
    const double k = bs.antenna_count;
    const double phase = 2.0 * kPi * bs.element_spacing / wf.wavelength();
    FimWeights w;
    w.lambda_toa = 1.0 / (sigma_r * sigma_r);
    if (k > 1) {
        const double var_theta = 6.0 / (k * (k * k - 1.0) * snr * phase * phase);
        w.lambda_aoa = 1.0 / var_theta;
    }
    return w;
}

/// Equivalent FIM for a UAV position: sum of ToA and AoA information over
/// every antenna of every station.
inline Efim efim(const Scene& scene, const Vec2& p_uav,
                 const std::vector<FimWeights>& station_weights) {
    if (station_weights.size() != scene.stations.size())
        throw InputError("efim: one FimWeights entry per station required");
    Efim out;
    for (std::size_t n = 0; n < scene.stations.size(); ++n) {
        const auto& bs = scene.stations[n];
        for (int k = 0; k < bs.antenna_count; ++k) {
            out.matrix += fim_antenna(p_uav, bs.antenna_position(k), station_weights[n]);
            ++out.contributing_antennas;
        }
    }
    if (out.contributing_antennas == 0) throw InputError("efim: no contributing antennas");
    return out;
}

/// Position-error bound: trace of the inverse EFIM. Raises when the
/// geometry leaves the position unobservable.
inline double crlb(const Efim& e) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(e.matrix);
    const double lmin = eig.eigenvalues()(0), lmax = eig.eigenvalues()(1);
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw ComputeError("crlb: EFIM singular, position unobservable");
    return e.matrix.inverse().trace();
}

}  // namespace uavsim
