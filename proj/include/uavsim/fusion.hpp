#pragma once

#include <algorithm>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/estimation.hpp"
#include "uavsim/scene.hpp"

namespace uavsim {

struct GridSpec {
    Vec2 origin{};
    double cell_size = 0.1;  // h [m]
    int width_cells = 0;
    int height_cells = 0;

    void validate() const {
        if (cell_size <= 0.0) throw InputError("GridSpec: cell_size must be > 0");
        if (width_cells < 1 || height_cells < 1) throw InputError("GridSpec: empty grid");
    }

    std::size_t cell_count() const {
        return static_cast<std::size_t>(width_cells) * height_cells;
    }
    Vec2 cell_center(int ix, int iy) const {
        return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
    }
    bool contains(const Vec2& p) const {
        return p.x >= origin.x && p.y >= origin.y &&
               p.x < origin.x + width_cells * cell_size &&
               p.y < origin.y + height_cells * cell_size;
    }
    int index_of(const Vec2& p) const {
        const int ix = static_cast<int>((p.x - origin.x) / cell_size);
        const int iy = static_cast<int>((p.y - origin.y) / cell_size);
        return iy * width_cells + ix;
    }
};

/// Accumulated log-likelihood-ratio field. Cells start at log(prior); each
/// station's detections add log(P_r / P_FA) over their detection regions, so
/// the final value is the prior plus the sum of per-station evidence and the
/// fusion order cannot matter.
struct GridMap {
    GridSpec spec{};
    double prior = 1e-3;
    int iteration = 0;  // stations fused so far
    int skipped_detections = 0;
    std::vector<double> log_odds;

    static GridMap create(const GridSpec& spec, double prior = 1e-3) {
        spec.validate();
        if (prior <= 0.0 || prior >= 1.0) throw InputError("GridMap: prior must be in (0, 1)");
        GridMap m;
        m.spec = spec;
        m.prior = prior;
        m.log_odds.assign(spec.cell_count(), std::log(prior));
        return m;
    }
    double background() const { return std::log(prior); }
};

struct DbscanConfig {
    double eps = 0.35;  // [m]
    int min_pts = 3;    // neighborhood count including the point itself

    void validate() const {
        if (eps <= 0.0) throw InputError("DbscanConfig: eps must be > 0");
        if (min_pts < 1) throw InputError("DbscanConfig: min_pts must be >= 1");
    }
};

struct LocalizedTarget {
    Vec2 position{};
    int cluster_id = -1;
    double mass = 0.0;
    int member_cells = 0;
};

/// Size of the possible detection region for one measurement: the minimum
/// of the projected range resolution and the beam arc, with the transmission
/// angle taken between boresight and the detection bearing and floored at
/// 15 degrees so both terms stay bounded.
inline double detection_region_size(const BsPose& bs, const Detection& det,
                                    const WaveformConfig& wf) {
    if (det.range_m <= 0.0) throw InputError("detection_region_size: range must be > 0");
    constexpr double kFloor = 15.0 * kPi / 180.0;
    const double varsigma = std::max(std::abs(det.angle_rad), kFloor);
    const double h_beam = det.range_m * bs.beamwidth_3db / std::sin(varsigma);
    if (std::abs(std::cos(varsigma)) < 1e-9) return h_beam;
    const double h_range = kSpeedOfLight / (2.0 * wf.bandwidth_hz) / std::cos(varsigma);
    return std::min(h_range, h_beam);
}

/// Polar measurement to world coordinates through the station pose.
inline Vec2 calibrate(const BsPose& bs, const Detection& det) {
    const double a = bs.rotation + det.angle_rad;
    return {bs.position.x + det.range_m * std::cos(a),
            bs.position.y + det.range_m * std::sin(a)};
}

/// Fuse one station's detections into the map: every cell whose center lies
/// inside a detection region (disk of radius h_n/2 around the calibrated
/// point) gains log(P_r / P_FA), with P_r clipped into [1e-6, 1 - 1e-6].
/// Detections landing outside the grid are counted and skipped.
inline GridMap fuse_station(GridMap map, const std::vector<Detection>& detections,
                            const BsPose& bs, const WaveformConfig& wf, double p_fa) {
    if (p_fa <= 0.0 || p_fa >= 1.0) throw InputError("fuse_station: p_fa must be in (0, 1)");
    const GridSpec& spec = map.spec;

    for (const auto& det : detections) {
        const double h = detection_region_size(bs, det, wf);
        if (spec.cell_size > h)
            throw ComputeError("fuse_station: grid cell size exceeds detection region size");
        const Vec2 center = calibrate(bs, det);
        if (!spec.contains(center)) {
            ++map.skipped_detections;
            continue;
        }
        const double p = std::clamp(det.pr, 1e-6, 1.0 - 1e-6);
        const double increment = std::log(p / p_fa);
        // one cell of padding so quantizing the region onto the grid cannot
        // empty the intersection of overlapping regions from other stations
        const double radius = h / 2.0 + spec.cell_size;

        const int ix0 = std::max(0, static_cast<int>((center.x - radius - spec.origin.x) / spec.cell_size));
        const int ix1 = std::min(spec.width_cells - 1,
                                 static_cast<int>((center.x + radius - spec.origin.x) / spec.cell_size));
        const int iy0 = std::max(0, static_cast<int>((center.y - radius - spec.origin.y) / spec.cell_size));
        const int iy1 = std::min(spec.height_cells - 1,
                                 static_cast<int>((center.y + radius - spec.origin.y) / spec.cell_size));
        const double r2 = radius * radius;
        bool painted = false;
        for (int iy = iy0; iy <= iy1; ++iy) {
            for (int ix = ix0; ix <= ix1; ++ix) {
                const Vec2 c = spec.cell_center(ix, iy);
                const double dx = c.x - center.x, dy = c.y - center.y;
                if (dx * dx + dy * dy <= r2) {
                    map.log_odds[static_cast<std::size_t>(iy) * spec.width_cells + ix] += increment;
                    painted = true;
                }
            }
        }
        if (!painted) {
            // region smaller than one cell pitch: charge the containing cell
            map.log_odds[static_cast<std::size_t>(spec.index_of(center))] += increment;
        }
    }
    ++map.iteration;
    return map;
}

/// Normalized occupancy probabilities after thresholding at a fraction of
/// the peak. Cells below the threshold are zeroed; the surviving mass is
/// left unnormalized (per-cluster renormalization happens in the MMSE step).
struct ProbabilityField {
    GridSpec spec{};
    std::vector<double> prob;

    double at(int ix, int iy) const {
        return prob[static_cast<std::size_t>(iy) * spec.width_cells + ix];
    }
};

inline ProbabilityField normalize_and_threshold(const GridMap& map, double threshold_fraction) {
    if (threshold_fraction < 0.0 || threshold_fraction > 1.0)
        throw InputError("normalize_and_threshold: fraction must be in [0, 1]");
    const double peak_log = *std::max_element(map.log_odds.begin(), map.log_odds.end());
    if (peak_log <= map.background() + 1e-12)
        throw ComputeError("normalize_and_threshold: map carries no evidence");

    ProbabilityField field;
    field.spec = map.spec;
    field.prob.resize(map.log_odds.size());
    // peak cell maps to exp(0); the cut is peak-relative, so it can be
    // applied before normalization
    double sum = 0.0;
    for (std::size_t i = 0; i < map.log_odds.size(); ++i) {
        double p = std::exp(map.log_odds[i] - peak_log);
        if (p < threshold_fraction) p = 0.0;
        field.prob[i] = p;
        sum += p;
    }
    const double inv_sum = 1.0 / sum;
    for (auto& p : field.prob) p *= inv_sum;
    return field;
}

/// Density clustering over the nonzero cells of the field, Euclidean
/// distance between cell centers. Returns clusters of cell indices; noise
/// cells are dropped. Deterministic for a fixed row-major scan order.
inline std::vector<std::vector<int>> dbscan(const ProbabilityField& field,
                                            const DbscanConfig& cfg) {
    cfg.validate();
    const GridSpec& spec = field.spec;
    const int w = spec.width_cells, hgt = spec.height_cells;
    const int reach = static_cast<int>(std::ceil(cfg.eps / spec.cell_size));
    const double eps2 = cfg.eps * cfg.eps;

    const auto neighbors_of = [&](int idx, std::vector<int>& out) {
        out.clear();
        const int ix = idx % w, iy = idx / w;
        for (int dy = -reach; dy <= reach; ++dy) {
            const int ny = iy + dy;
            if (ny < 0 || ny >= hgt) continue;
            for (int dx = -reach; dx <= reach; ++dx) {
                const int nx = ix + dx;
                if (nx < 0 || nx >= w) continue;
                const int nidx = ny * w + nx;
                if (field.prob[static_cast<std::size_t>(nidx)] <= 0.0) continue;
                const double ddx = dx * spec.cell_size, ddy = dy * spec.cell_size;
                if (ddx * ddx + ddy * ddy <= eps2) out.push_back(nidx);
            }
        }
    };

    constexpr int kUnvisited = -2, kNoise = -1;
    std::vector<int> label(field.prob.size(), kUnvisited);
    std::vector<std::vector<int>> clusters;
    std::vector<int> nb, nb2;

    for (std::size_t i = 0; i < field.prob.size(); ++i) {
        if (field.prob[i] <= 0.0 || label[i] != kUnvisited) continue;
        neighbors_of(static_cast<int>(i), nb);
        if (static_cast<int>(nb.size()) < cfg.min_pts) {
            label[i] = kNoise;
            continue;
        }
        const int cid = static_cast<int>(clusters.size());
        clusters.emplace_back();
        label[i] = cid;
        clusters[cid].push_back(static_cast<int>(i));
        std::vector<int> queue = nb;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const int j = queue[q];
            if (label[j] == kNoise) {  // border point
                label[j] = cid;
                clusters[cid].push_back(j);
            }
            if (label[j] != kUnvisited) continue;
            label[j] = cid;
            clusters[cid].push_back(j);
            neighbors_of(j, nb2);
            if (static_cast<int>(nb2.size()) >= cfg.min_pts)
                queue.insert(queue.end(), nb2.begin(), nb2.end());
        }
        std::sort(clusters[cid].begin(), clusters[cid].end());
    }
    return clusters;
}

/// Probability-weighted centroid of a cluster.
inline LocalizedTarget mmse_position(const ProbabilityField& field,
                                     const std::vector<int>& cluster, int cluster_id = 0) {
    if (cluster.empty()) throw InputError("mmse_position: empty cluster");
    double mass = 0.0, sx = 0.0, sy = 0.0;
    for (int idx : cluster) {
        const double p = field.prob[static_cast<std::size_t>(idx)];
        const Vec2 c = field.spec.cell_center(idx % field.spec.width_cells,
                                              idx / field.spec.width_cells);
        mass += p;
        sx += p * c.x;
        sy += p * c.y;
    }
    if (mass <= 0.0) throw ComputeError("mmse_position: cluster has zero mass");
    LocalizedTarget t;
    t.position = {sx / mass, sy / mass};
    t.cluster_id = cluster_id;
    t.mass = mass;
    t.member_cells = static_cast<int>(cluster.size());
    return t;
}

}  // namespace uavsim
