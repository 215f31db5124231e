#pragma once

#include <array>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/fft.hpp"
#include "uavsim/rng.hpp"

namespace uavsim {

struct Spectrogram {
    int freq_bins = 0;
    int frames = 0;
    int window_len = 0;
    int frame_hop = 0;
    std::vector<double> magnitude;  // row-major (freq bin, frame)

    double at(int f, int t) const { return magnitude[static_cast<std::size_t>(f) * frames + t]; }
};

/// Short-time Fourier transform with Hamming-windowed frames. Frames are
/// zero-padded to the next power of two for the FFT.
inline Spectrogram stft(const std::vector<cplx>& signal, int window_len, int hop) {
    if (window_len < 2 || hop < 1) throw InputError("stft: window_len >= 2 and hop >= 1 required");
    if (static_cast<std::size_t>(window_len) > signal.size())
        throw InputError("stft: window longer than signal");

    const std::size_t fft_len = next_pow2(static_cast<std::size_t>(window_len));
    const auto window = hamming_window(static_cast<std::size_t>(window_len));
    const int frames = static_cast<int>((signal.size() - window_len) / hop) + 1;

    Spectrogram s;
    s.freq_bins = static_cast<int>(fft_len);
    s.frames = frames;
    s.window_len = window_len;
    s.frame_hop = hop;
    s.magnitude.assign(fft_len * static_cast<std::size_t>(frames), 0.0);

    std::vector<cplx> frame(fft_len);
    for (int t = 0; t < frames; ++t) {
        std::fill(frame.begin(), frame.end(), cplx(0.0, 0.0));
        const std::size_t start = static_cast<std::size_t>(t) * hop;
        for (int i = 0; i < window_len; ++i) frame[i] = signal[start + i] * window[i];
        fft_inplace(frame);
        for (std::size_t f = 0; f < fft_len; ++f)
            s.magnitude[f * static_cast<std::size_t>(frames) + t] = std::abs(frame[f]);
    }
    return s;
}

struct ImfSet {
    std::vector<std::vector<double>> imfs;
    std::vector<double> residual;
};

namespace detail {

/// Natural cubic spline through (x_i, y_i), strictly increasing x.
class CubicSpline {
public:
    CubicSpline(const std::vector<double>& x, const std::vector<double>& y) : x_(x), y_(y) {
        const std::size_t n = x.size();
        m_.assign(n, 0.0);
        if (n < 3) return;
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x[i] - x[i - 1];
            const double h1 = x[i + 1] - x[i];
            a[i] = h0;
            b[i] = 2.0 * (h0 + h1);
            c[i] = h1;
            d[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Thomas algorithm on the interior unknowns (natural ends: m_0 = m_{n-1} = 0)
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
            if (i == 1) break;
        }
    }

    double operator()(double xq) const {
        const std::size_t n = x_.size();
        if (n == 1) return y_[0];
        if (n == 2) {
            const double t = (xq - x_[0]) / (x_[1] - x_[0]);
            return y_[0] + t * (y_[1] - y_[0]);
        }
        std::size_t lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (x_[mid] <= xq) lo = mid; else hi = mid;
        }
        const double h = x_[hi] - x_[lo];
        const double t0 = (x_[hi] - xq) / h, t1 = (xq - x_[lo]) / h;
        return t0 * y_[lo] + t1 * y_[hi] +
               ((t0 * t0 * t0 - t0) * m_[lo] + (t1 * t1 * t1 - t1) * m_[hi]) * h * h / 6.0;
    }

private:
    std::vector<double> x_, y_;
    std::vector<double> m_;  // second derivatives
};

inline void find_extrema(const std::vector<double>& x, std::vector<int>& maxima,
                         std::vector<int>& minima) {
    maxima.clear();
    minima.clear();
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] >= x[i + 1]) maxima.push_back(static_cast<int>(i));
        else if (x[i] < x[i - 1] && x[i] <= x[i + 1]) minima.push_back(static_cast<int>(i));
    }
}

inline int count_zero_crossings(const std::vector<double>& x) {
    int count = 0;
    int last_sign = 0;
    for (double v : x) {
        const int s = (v > 0.0) ? 1 : (v < 0.0 ? -1 : 0);
        if (s != 0) {
            if (last_sign != 0 && s != last_sign) ++count;
            last_sign = s;
        }
    }
    return count;
}

/// Envelope through the given extrema with two mirrored points on each end
/// to suppress boundary swings.
inline std::vector<double> spline_envelope(const std::vector<double>& signal,
                                           const std::vector<int>& idx) {
    const int n = static_cast<int>(signal.size());
    std::vector<double> xs, ys;
    xs.reserve(idx.size() + 4);
    ys.reserve(idx.size() + 4);
    const int k = static_cast<int>(idx.size());
    // mirror the first two and last two extrema around the signal ends
    if (k >= 2) {
        xs.push_back(static_cast<double>(-idx[1]));
        ys.push_back(signal[static_cast<std::size_t>(idx[1])]);
        xs.push_back(static_cast<double>(-idx[0]));
        ys.push_back(signal[static_cast<std::size_t>(idx[0])]);
    }
    for (int i : idx) {
        xs.push_back(static_cast<double>(i));
        ys.push_back(signal[static_cast<std::size_t>(i)]);
    }
    if (k >= 2) {
        xs.push_back(static_cast<double>(2 * (n - 1) - idx[k - 1]));
        ys.push_back(signal[static_cast<std::size_t>(idx[k - 1])]);
        xs.push_back(static_cast<double>(2 * (n - 1) - idx[k - 2]));
        ys.push_back(signal[static_cast<std::size_t>(idx[k - 2])]);
    }
    CubicSpline spline(xs, ys);
    std::vector<double> env(signal.size());
    for (int i = 0; i < n; ++i) env[static_cast<std::size_t>(i)] = spline(static_cast<double>(i));
    return env;
}

}  // namespace detail

/// Empirical mode decomposition by standard sifting: cubic-spline envelopes
/// through the extrema, mean subtracted until the Cauchy criterion SD < 0.2
/// and the IMF extrema/zero-crossing property hold (at most 100 sifts), then
/// repeated on the residual. A constant or monotone signal yields no IMFs.
inline ImfSet emd(const std::vector<double>& signal, int max_imfs) {
    if (signal.size() < 8) throw InputError("emd: signal length must be >= 8");
    for (double v : signal)
        if (!std::isfinite(v)) throw InputError("emd: signal must be finite");

    ImfSet out;
    std::vector<double> residual = signal;
    std::vector<int> maxima, minima;

    for (int d = 0; d < max_imfs; ++d) {
        detail::find_extrema(residual, maxima, minima);
        if (maxima.size() + minima.size() < 3) break;  // residual is monotone

        std::vector<double> h = residual;
        for (int sift = 0; sift < 100; ++sift) {
            detail::find_extrema(h, maxima, minima);
            if (maxima.size() < 2 || minima.size() < 2) break;
            const auto upper = detail::spline_envelope(h, maxima);
            const auto lower = detail::spline_envelope(h, minima);

            double sd_num = 0.0, sd_den = 0.0;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double mean = 0.5 * (upper[i] + lower[i]);
                sd_num += mean * mean;
                sd_den += h[i] * h[i];
                h[i] -= mean;
            }
            if (sd_den <= 0.0) break;
            if (sd_num / sd_den < 0.2) {
                detail::find_extrema(h, maxima, minima);
                const int extrema = static_cast<int>(maxima.size() + minima.size());
                const int crossings = detail::count_zero_crossings(h);
                if (std::abs(extrema - crossings) <= 1) break;
            }
        }

        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= h[i];
        out.imfs.push_back(std::move(h));
    }
    out.residual = std::move(residual);
    return out;
}

/// 16 features: zero-crossing count, normalized energy, standard deviation
/// and zero-crossing ratio for each of the first four IMFs. Missing IMF
/// slots are zero-filled.
using FeatureVector = std::array<double, 16>;

inline FeatureVector extract_features(const ImfSet& imfs, const std::vector<double>& input) {
    double input_energy = 0.0;
    for (double v : input) input_energy += v * v;
    if (input_energy <= 0.0) throw ComputeError("extract_features: input has zero energy");
    const int input_zc = detail::count_zero_crossings(input);

    FeatureVector f{};
    for (std::size_t d = 0; d < 4 && d < imfs.imfs.size(); ++d) {
        const auto& imf = imfs.imfs[d];
        const int zc = detail::count_zero_crossings(imf);
        double energy = 0.0, mean = 0.0;
        for (double v : imf) {
            energy += v * v;
            mean += v;
        }
        mean /= static_cast<double>(imf.size());
        double var = 0.0;
        for (double v : imf) var += (v - mean) * (v - mean);
        var /= static_cast<double>(imf.size());

        f[d * 4 + 0] = static_cast<double>(zc);
        f[d * 4 + 1] = energy / input_energy;
        f[d * 4 + 2] = std::sqrt(var);
        f[d * 4 + 3] = input_zc > 0 ? static_cast<double>(zc) / input_zc : 0.0;
    }
    return f;
}

/// Soft-margin RBF SVM trained by sequential minimal optimization.
/// Features are standardized internally; the scaling is part of the model.
struct SvmModel {
    std::vector<FeatureVector> support_vectors;  // stored standardized
    std::vector<double> dual_coefficients;       // alpha_i * y_i
    double bias = 0.0;
    double kernel_gamma = 1.0 / 16.0;
    double regularization_c = 1.0;
    FeatureVector feature_mean{};
    FeatureVector feature_scale{};

    FeatureVector standardize(const FeatureVector& x) const {
        FeatureVector z{};
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - feature_mean[i]) / feature_scale[i];
        return z;
    }
};

namespace detail {

inline double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

}  // namespace detail

/// Decision value of the trained classifier (positive = UAV).
inline double svm_decision(const SvmModel& model, const FeatureVector& x) {
    const FeatureVector z = model.standardize(x);
    double f = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.dual_coefficients[i] *
             detail::rbf_kernel(model.support_vectors[i], z, model.kernel_gamma);
    return f;
}

/// SMO training to KKT tolerance 1e-3. Pass gamma <= 0 to use the
/// 1/(16 * feature variance) heuristic on the standardized features.
inline SvmModel train_svm(const std::vector<FeatureVector>& positives,
                          const std::vector<FeatureVector>& negatives, double c, double gamma,
                          std::uint64_t rng_seed) {
    if (positives.empty() || negatives.empty())
        throw InputError("train_svm: both classes must be non-empty");
    const std::size_t n = positives.size() + negatives.size();

    std::vector<FeatureVector> x;
    std::vector<double> y;
    x.reserve(n);
    y.reserve(n);
    for (const auto& p : positives) {
        x.push_back(p);
        y.push_back(1.0);
    }
    for (const auto& q : negatives) {
        x.push_back(q);
        y.push_back(-1.0);
    }
    for (const auto& v : x)
        for (double f : v)
            if (!std::isfinite(f)) throw InputError("train_svm: non-finite feature");

    SvmModel model;
    model.regularization_c = c;
    for (std::size_t j = 0; j < 16; ++j) {
        double mean = 0.0;
        for (const auto& v : x) mean += v[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& v : x) var += (v[j] - mean) * (v[j] - mean);
        var /= static_cast<double>(n);
        model.feature_mean[j] = mean;
        model.feature_scale[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    for (auto& v : x) v = model.standardize(v);
    model.kernel_gamma = gamma > 0.0 ? gamma : 1.0 / 16.0;

    const double tol = 1e-3;
    const double eps = 1e-12;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n);
    double b = 0.0;
    CounterRng rng(derive_seed(rng_seed, 0x53564du));

    // Kernel matrix; corpora stay small enough to keep it dense.
    std::vector<double> kmat(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            kmat[i * n + j] = kmat[j * n + i] = detail::rbf_kernel(x[i], x[j], model.kernel_gamma);

    const auto decision = [&](std::size_t i) {
        double f = b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0.0) f += alpha[j] * y[j] * kmat[i * n + j];
        return f;
    };
    for (std::size_t i = 0; i < n; ++i) err[i] = decision(i) - y[i];

    const auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
        if (i1 == i2) return false;
        const double a1 = alpha[i1], a2 = alpha[i2];
        const double y1 = y[i1], y2 = y[i2];
        const double e1 = err[i1], e2 = err[i2];
        const double s = y1 * y2;
        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(c, c + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - c);
            hi = std::min(c, a1 + a2);
        }
        if (lo >= hi) return false;
        const double k11 = kmat[i1 * n + i1], k12 = kmat[i1 * n + i2], k22 = kmat[i2 * n + i2];
        const double eta = k11 + k22 - 2.0 * k12;
        double a2_new;
        if (eta > 0.0) {
            a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
        } else {
            // flat direction: pick the better bound by objective change
            const double f1 = y1 * (e1 + b) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 + b) - s * a1 * k12 - a2 * k22;
            const double l1 = a1 + s * (a2 - lo), h1 = a1 + s * (a2 - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                                  s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                                  s * hi * h1 * k12;
            a2_new = (obj_lo < obj_hi - eps) ? lo : (obj_lo > obj_hi + eps ? hi : a2);
        }
        if (std::abs(a2_new - a2) < eps * (a2_new + a2 + eps)) return false;
        const double a1_new = a1 + s * (a2 - a2_new);

        const double b1 = b - e1 - y1 * (a1_new - a1) * k11 - y2 * (a2_new - a2) * k12;
        const double b2 = b - e2 - y1 * (a1_new - a1) * k12 - y2 * (a2_new - a2) * k22;
        const bool a1_free = a1_new > 0.0 && a1_new < c;
        const bool a2_free = a2_new > 0.0 && a2_new < c;
        const double b_new = a1_free ? b1 : (a2_free ? b2 : 0.5 * (b1 + b2));

        const double d1 = y1 * (a1_new - a1), d2 = y2 * (a2_new - a2), db = b_new - b;
        for (std::size_t i = 0; i < n; ++i)
            err[i] += d1 * kmat[i1 * n + i] + d2 * kmat[i2 * n + i] + db;
        alpha[i1] = a1_new;
        alpha[i2] = a2_new;
        b = b_new;
        return true;
    };

    const auto examine = [&](std::size_t i2) -> bool {
        const double y2 = y[i2], a2 = alpha[i2], e2 = err[i2];
        const double r2 = e2 * y2;
        if ((r2 < -tol && a2 < c) || (r2 > tol && a2 > 0.0)) {
            // heuristic 1: maximize |E1 - E2| over free multipliers
            std::size_t best = n;
            double best_gap = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (alpha[i] > 0.0 && alpha[i] < c) {
                    const double gap = std::abs(err[i] - e2);
                    if (gap > best_gap) {
                        best_gap = gap;
                        best = i;
                    }
                }
            }
            if (best < n && take_step(best, i2)) return true;
            // heuristic 2: free multipliers from a seeded random start
            const std::size_t start = static_cast<std::size_t>(rng.uniform() * n);
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = (start + k) % n;
                if (alpha[i] > 0.0 && alpha[i] < c && take_step(i, i2)) return true;
            }
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t i = (start + k) % n;
                if (take_step(i, i2)) return true;
            }
        }
        return false;
    };

    int changed = 0;
    bool examine_all = true;
    int sweeps = 0;
    while ((changed > 0 || examine_all) && sweeps++ < 10000) {
        changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (examine_all || (alpha[i] > 0.0 && alpha[i] < c))
                if (examine(i)) ++changed;
        }
        if (examine_all) examine_all = false;
        else if (changed == 0) examine_all = true;
    }

    model.bias = b;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-12) {
            model.support_vectors.push_back(x[i]);
            model.dual_coefficients.push_back(alpha[i] * y[i]);
        }
    }
    // standardization already applied to stored vectors; svm_decision
    // re-standardizes queries only
    return model;
}

/// Fraction of equal-length echo segments classified as a UAV. Each segment
/// is converted to a real series (|.| with the mean removed, so zero
/// crossings are defined), decomposed by EMD and classified.
inline double recognition_probability(const std::vector<cplx>& echo, const SvmModel& model,
                                      int segment_count) {
    if (segment_count < 1) throw InputError("recognition_probability: segment_count must be >= 1");
    const std::size_t seg_len = echo.size() / static_cast<std::size_t>(segment_count);
    if (seg_len < 8) throw InputError("recognition_probability: echo too short for segmentation");

    int positive = 0;
    std::vector<double> x(seg_len);
    for (int s = 0; s < segment_count; ++s) {
        const std::size_t start = static_cast<std::size_t>(s) * seg_len;
        double mean = 0.0;
        for (std::size_t i = 0; i < seg_len; ++i) mean += std::abs(echo[start + i]);
        mean /= static_cast<double>(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) x[i] = std::abs(echo[start + i]) - mean;

        const auto decomposition = emd(x, 4);
        double energy = 0.0;
        for (double v : x) energy += v * v;
        if (energy <= 0.0) continue;  // silent segment, counted as non-UAV
        const auto features = extract_features(decomposition, x);
        if (svm_decision(model, features) > 0.0) ++positive;
    }
    return static_cast<double>(positive) / static_cast<double>(segment_count);
}

}  // namespace uavsim
