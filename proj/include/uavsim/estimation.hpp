#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/fft.hpp"
#include "uavsim/waveform.hpp"

namespace uavsim {

/// Per-antenna fast-time FFT output, same (k, m, l) layout as the cube but
/// with l now indexing range bins.
struct RangeProfile {
    int antennas = 0;
    int pulses = 0;
    int bins = 0;
    WaveformConfig config{};
    std::vector<cplx> data;

    cplx& at(int k, int m, int l) {
        return data[(static_cast<std::size_t>(k) * pulses + m) * bins + l];
    }
    const cplx& at(int k, int m, int l) const {
        return data[(static_cast<std::size_t>(k) * pulses + m) * bins + l];
    }
};

/// Range-velocity power map, L range rows by M velocity columns, averaged
/// over antennas.
struct RangeVelocityMap {
    int range_bins = 0;     // L
    int velocity_bins = 0;  // M
    double range_bin_width = 0.0;
    double velocity_bin_width = 0.0;
    std::vector<double> power;  // row-major (l, m)

    double& at(int l, int m) { return power[static_cast<std::size_t>(l) * velocity_bins + m]; }
    double at(int l, int m) const { return power[static_cast<std::size_t>(l) * velocity_bins + m]; }
    double range_at(int l) const { return range_bin_width * l; }
    double velocity_at(int m) const { return velocity_bin_width * m; }
};

struct CfarConfig {
    double p_fa = 1e-3;
    int ref_cells_range = 4;     // N_R (total across both sides)
    int ref_cells_velocity = 4;  // N_V
    int guard_cells_range = 2;
    int guard_cells_velocity = 2;

    int reference_count() const { return ref_cells_range * ref_cells_velocity; }

    void validate() const {
        if (p_fa <= 0.0 || p_fa >= 1.0) throw InputError("CfarConfig: p_fa must be in (0, 1)");
        if (ref_cells_range < 1 || ref_cells_velocity < 1)
            throw InputError("CfarConfig: reference cell counts must be >= 1");
        if (ref_cells_range % 2 != 0 || ref_cells_velocity % 2 != 0)
            throw InputError("CfarConfig: reference cell counts must be even");
        if (guard_cells_range < 0 || guard_cells_velocity < 0)
            throw InputError("CfarConfig: guard cells must be >= 0");
    }
};

struct CfarCell {
    int range_bin = 0;
    int velocity_bin = 0;
    double snr_est = 0.0;
};

struct Detection {
    int bs_id = 0;
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double angle_rad = 0.0;  // boresight-relative
    double pd = 0.0;
    double pr = 0.5;  // neutral until micro-Doppler recognition runs
    double snr_est = 0.0;
};

/// Hamming-windowed FFT along fast time: one range profile per antenna.
inline RangeProfile range_profile(const EchoCube& cube) {
    const int K = cube.antennas, M = cube.pulses, L = cube.samples;
    RangeProfile out;
    out.antennas = K;
    out.pulses = M;
    out.bins = L;
    out.config = cube.config;
    out.data.resize(cube.data.size());

    const auto window = hamming_window(static_cast<std::size_t>(L));
    std::vector<cplx> line(static_cast<std::size_t>(L));
    for (int k = 0; k < K; ++k) {
        for (int m = 0; m < M; ++m) {
            for (int l = 0; l < L; ++l) line[l] = cube.at(k, m, l) * window[l];
            fft_inplace(line);
            for (int l = 0; l < L; ++l) out.at(k, m, l) = line[l];
        }
    }
    return out;
}

/// Hamming-windowed FFT along slow time; power averaged over antennas.
inline RangeVelocityMap velocity_profile(const RangeProfile& profile) {
    const int K = profile.antennas, M = profile.pulses, L = profile.bins;
    RangeVelocityMap map;
    map.range_bins = L;
    map.velocity_bins = M;
    map.range_bin_width = profile.config.range_bin_width();
    map.velocity_bin_width = profile.config.velocity_bin_width();
    map.power.assign(static_cast<std::size_t>(L) * M, 0.0);

    const auto window = hamming_window(static_cast<std::size_t>(M));
    std::vector<cplx> line(static_cast<std::size_t>(M));
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            for (int m = 0; m < M; ++m) line[m] = profile.at(k, m, l) * window[m];
            fft_inplace(line);
            for (int m = 0; m < M; ++m) map.at(l, m) += std::norm(line[m]);
        }
    }
    const double inv_k = 1.0 / K;
    for (auto& p : map.power) p *= inv_k;
    return map;
}

namespace detail {

/// Reference-cell offsets: the Cartesian product of N_R fast-time and N_V
/// slow-time lags outside the guard box, N_R * N_V cells total. Lags are
/// spaced two bins apart: window leakage correlates neighboring bins of the
/// profile FFTs, and contiguous reference cells would inflate the false
/// alarm rate beyond its design value.
inline void cfar_offsets(const CfarConfig& cfg, std::vector<std::pair<int, int>>& out) {
    out.clear();
    const int hr = cfg.ref_cells_range / 2, hv = cfg.ref_cells_velocity / 2;
    for (int a = 1; a <= hr; ++a) {
        for (int b = 1; b <= hv; ++b) {
            const int dl_pos = cfg.guard_cells_range + 2 * a;
            const int dm_pos = cfg.guard_cells_velocity + 2 * b;
            out.emplace_back(dl_pos, dm_pos);
            out.emplace_back(dl_pos, -dm_pos);
            out.emplace_back(-dl_pos, dm_pos);
            out.emplace_back(-dl_pos, -dm_pos);
        }
    }
}

}  // namespace detail

/// Cell-averaging CFAR over the range-velocity map. The velocity axis is
/// periodic (it is a DFT axis), so reference offsets wrap modulo M; range
/// offsets are clipped at the map edges. The threshold multiplier
/// alpha = N * (P_FA^(-1/N) - 1) uses the number of reference cells actually
/// available, so edge cells keep the designed false-alarm rate.
inline std::vector<CfarCell> ca_cfar(const RangeVelocityMap& map, const CfarConfig& cfg) {
    cfg.validate();
    const int L = map.range_bins, M = map.velocity_bins;
    const int ext_l = cfg.guard_cells_range + cfg.ref_cells_range;
    const int ext_m = cfg.guard_cells_velocity + cfg.ref_cells_velocity;
    if (L < 2 * ext_l + 1 || M < 2 * ext_m + 1)
        throw InputError("ca_cfar: reference window does not fit inside the map");

    std::vector<std::pair<int, int>> offsets;
    detail::cfar_offsets(cfg, offsets);

    std::vector<CfarCell> hits;
    for (int l = 0; l < L; ++l) {
        for (int m = 0; m < M; ++m) {
            double sum = 0.0;
            int n = 0;
            for (const auto& [dl, dm] : offsets) {
                const int ll = l + dl;
                if (ll < 0 || ll >= L) continue;
                const int mm = ((m + dm) % M + M) % M;
                sum += map.at(ll, mm);
                ++n;
            }
            if (n == 0) continue;
            const double beta = sum / n;
            const double alpha = n * (std::pow(cfg.p_fa, -1.0 / n) - 1.0);
            const double threshold = alpha * beta;
            const double energy = map.at(l, m);
            if (energy >= threshold && beta > 0.0) {
                hits.push_back({l, m, std::max(energy / beta - 1.0, 0.0)});
            }
        }
    }
    return hits;
}

/// Closed-form CA-CFAR detection probability for a Rayleigh-fluctuating
/// return of mean SNR gamma.
inline double detection_probability(double snr, const CfarConfig& cfg) {
    if (snr < 0.0) throw InputError("detection_probability: snr must be >= 0");
    const double n = cfg.reference_count();
    return std::pow(1.0 + (std::pow(cfg.p_fa, -1.0 / n) - 1.0) / (1.0 + snr), -n);
}

namespace detail {

/// Noise subspace of the sample covariance: eigenvectors of the
/// K - source_count smallest eigenvalues.
inline Eigen::MatrixXcd music_noise_subspace(const Eigen::MatrixXcd& snapshot,
                                             const BsPose& array, int source_count) {
    const int k = static_cast<int>(snapshot.rows());
    const int s = static_cast<int>(snapshot.cols());
    if (k != array.antenna_count) throw InputError("music: snapshot rows != antenna count");
    if (s < k) throw InputError("music: need at least K snapshots");
    if (source_count < 1 || source_count >= k)
        throw InputError("music: source_count must be in [1, K)");

    const Eigen::MatrixXcd cov = snapshot * snapshot.adjoint() / static_cast<double>(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    if (eig.info() != Eigen::Success) throw ComputeError("music: eigendecomposition failed");
    if (!(eig.eigenvalues()(k - 1) > 0.0))
        throw ComputeError("music: covariance carries no signal energy");
    return eig.eigenvectors().leftCols(k - source_count);
}

}  // namespace detail

/// MUSIC pseudo-spectrum a(theta)^H U_N U_N^H a(theta) at the given angles;
/// minima mark source directions.
inline std::vector<double> music_spectrum(const Eigen::MatrixXcd& snapshot, const BsPose& array,
                                          double wavelength, int source_count,
                                          const std::vector<double>& thetas) {
    const Eigen::MatrixXcd un = detail::music_noise_subspace(snapshot, array, source_count);
    const int k = array.antenna_count;
    const double phase_scale = 2.0 * kPi / wavelength * array.element_spacing;
    Eigen::VectorXcd steering(k);
    std::vector<double> out;
    out.reserve(thetas.size());
    for (double theta : thetas) {
        const double step = phase_scale * std::sin(theta);
        for (int i = 0; i < k; ++i) steering(i) = std::polar(1.0, step * i);
        out.push_back((un.adjoint() * steering).squaredNorm());
    }
    return out;
}

/// MUSIC angle estimate from a K x S snapshot matrix. Scans a 2048-point
/// grid over [-pi/2, pi/2] and refines the minimum with a parabolic fit.
inline double music_angle(const Eigen::MatrixXcd& snapshot, const BsPose& array,
                          double wavelength, int source_count, int grid_points = 2048) {
    const Eigen::MatrixXcd un = detail::music_noise_subspace(snapshot, array, source_count);
    const int k = array.antenna_count;
    const double phase_scale = 2.0 * kPi / wavelength * array.element_spacing;
    Eigen::VectorXcd steering(k);
    const auto spectrum = [&](double theta) {
        const double step = phase_scale * std::sin(theta);
        for (int i = 0; i < k; ++i) steering(i) = std::polar(1.0, step * i);
        return (un.adjoint() * steering).squaredNorm();
    };

    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> vals(static_cast<std::size_t>(grid_points));
    const double d_theta = kPi / (grid_points - 1);
    for (int i = 0; i < grid_points; ++i) {
        const double theta = -kPi / 2.0 + d_theta * i;
        vals[i] = spectrum(theta);
        if (vals[i] < best_val) {
            best_val = vals[i];
            best = i;
        }
    }
    double theta_hat = -kPi / 2.0 + d_theta * best;
    if (best > 0 && best < grid_points - 1) {
        const double y0 = vals[best - 1], y1 = vals[best], y2 = vals[best + 1];
        const double denom = y0 - 2.0 * y1 + y2;
        if (denom > 0.0) {
            const double delta = 0.5 * (y0 - y2) / denom;
            theta_hat += std::clamp(delta, -1.0, 1.0) * d_theta;
        }
    }
    return theta_hat;
}

namespace detail {

/// Merge adjacent CFAR crossings (within one bin, velocity wrapping
/// circularly) into connected components, keeping the strongest cell of
/// each component.
inline std::vector<CfarCell> group_peaks(std::vector<CfarCell> cells,
                                         const RangeVelocityMap& map) {
    const int m_bins = map.velocity_bins;
    const auto adjacent = [&](const CfarCell& a, const CfarCell& b) {
        if (std::abs(a.range_bin - b.range_bin) > 1) return false;
        const int dm = std::abs(a.velocity_bin - b.velocity_bin);
        return std::min(dm, m_bins - dm) <= 1;
    };

    const std::size_t n = cells.size();
    std::vector<int> component(n, -1);
    int n_components = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (component[i] >= 0) continue;
        component[i] = n_components;
        std::vector<std::size_t> queue = {i};
        for (std::size_t q = 0; q < queue.size(); ++q) {
            for (std::size_t j = 0; j < n; ++j) {
                if (component[j] < 0 && adjacent(cells[queue[q]], cells[j])) {
                    component[j] = n_components;
                    queue.push_back(j);
                }
            }
        }
        ++n_components;
    }

    std::vector<CfarCell> kept(static_cast<std::size_t>(n_components));
    std::vector<bool> seen(static_cast<std::size_t>(n_components), false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(component[i]);
        const double power = map.at(cells[i].range_bin, cells[i].velocity_bin);
        if (!seen[c] || power > map.at(kept[c].range_bin, kept[c].velocity_bin)) {
            kept[c] = cells[i];
            seen[c] = true;
        }
    }
    std::sort(kept.begin(), kept.end(), [](const CfarCell& a, const CfarCell& b) {
        if (a.range_bin != b.range_bin) return a.range_bin < b.range_bin;
        return a.velocity_bin < b.velocity_bin;
    });
    return kept;
}

}  // namespace detail

/// Full single-station measurement chain: profiles, CA-CFAR, peak grouping,
/// then a MUSIC angle per detection from the antenna snapshot at its range
/// bin. Recognition probability stays at the neutral 0.5 here.
inline std::vector<Detection> detect_station(const EchoCube& cube, const CfarConfig& cfg,
                                             const BsPose& bs, const WaveformConfig& wf) {
    if (cube.antennas != bs.antenna_count)
        throw InputError("detect_station: cube antenna count != station antenna count");
    const auto profile = range_profile(cube);
    const auto map = velocity_profile(profile);
    const auto peaks = detail::group_peaks(ca_cfar(map, cfg), map);

    std::vector<Detection> detections;
    detections.reserve(peaks.size());
    Eigen::MatrixXcd snapshot(cube.antennas, cube.pulses);
    for (const auto& peak : peaks) {
        for (int k = 0; k < cube.antennas; ++k)
            for (int m = 0; m < cube.pulses; ++m) snapshot(k, m) = profile.at(k, m, peak.range_bin);

        Detection det;
        det.bs_id = bs.id;
        det.range_m = wf.range_at_bin(peak.range_bin);
        det.velocity_mps = wf.velocity_at_bin(peak.velocity_bin);
        det.angle_rad = (cube.antennas > 1)
                            ? music_angle(snapshot, bs, wf.wavelength(), 1)
                            : 0.0;
        det.snr_est = peak.snr_est;
        det.pd = detection_probability(peak.snr_est, cfg);
        det.pr = 0.5;
        detections.push_back(det);
    }
    return detections;
}

}  // namespace uavsim
