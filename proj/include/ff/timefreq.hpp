#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "ff/common.hpp"
#include "ff/fft.hpp"
#include "ff/signal.hpp"
#include "ff/spectrogram.hpp"

namespace ff {

struct StftConfig {
    int window_samples = 400;
    int overlap_samples = 350;
    int n_bins = 40;
    double max_freq_hz = 200.0;  // informational; bin spacing = rate / window
    int trim_frames = 5;

    int hop() const { return window_samples - overlap_samples; }

    void validate() const {
        require(window_samples >= 1, "stft: window must be positive");
        require(overlap_samples >= 0 && overlap_samples < window_samples,
                "stft: overlap must lie in [0, window)");
        require(n_bins >= 1, "stft: need at least one bin");
    }
};

struct SuperletConfig {
    double c1 = 1.0;
    int o_min = 3;
    int o_max = 30;
    std::vector<double> foi_hz;  // default: 40 values evenly spaced 0.1..200
    int decimation = 50;
    int trim_frames = 5;
    double support_sigmas = 5.0;  // wavelet truncated at +/- support_sigmas * B_c

    SuperletConfig() {
        foi_hz.resize(40);
        for (int i = 0; i < 40; ++i) foi_hz[i] = 0.1 + (200.0 - 0.1) * i / 39.0;
    }

    double f_min() const { return foi_hz.front(); }
    double f_max() const { return foi_hz.back(); }

    void validate() const {
        require(1 <= o_min && o_min <= o_max, "superlet: need 1 <= o_min <= o_max");
        require(!foi_hz.empty() && foi_hz.front() > 0.0, "superlet: foi must be positive");
        for (size_t i = 1; i < foi_hz.size(); ++i)
            require(foi_hz[i] > foi_hz[i - 1], "superlet: foi must be increasing");
        require(decimation >= 1 && trim_frames >= 0, "superlet: bad decimation/trim");
    }
};

// Column decimation by block averaging, then trimming columns on both sides.
inline Eigen::MatrixXd decimate_trim(const Eigen::MatrixXd& mat, int factor, int trim) {
    require(factor >= 1 && trim >= 0, "decimate_trim: bad parameters");
    const int m = static_cast<int>(mat.cols());
    const int blocks = m / factor;
    if (blocks <= 2 * trim) throw input_error("decimate_trim: too few columns");
    Eigen::MatrixXd dec(mat.rows(), blocks);
    for (int j = 0; j < blocks; ++j)
        dec.col(j) = mat.middleCols(j * factor, factor).rowwise().mean();
    return dec.middleCols(trim, blocks - 2 * trim);
}

// Hann-windowed magnitude STFT keeping the lowest n_bins non-negative
// frequency bins; trim_frames columns removed per side to match the
// superlet edge handling.
inline Spectrogram stft(const RawTrace& trace, const StftConfig& cfg = {}) {
    trace.validate();
    cfg.validate();
    const int win = cfg.window_samples, hop = cfg.hop();
    if (static_cast<int>(trace.size()) < win)
        throw input_error("stft: trace shorter than window");

    std::vector<double> window(win);
    for (int i = 0; i < win; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / win);

    const int frames = (static_cast<int>(trace.size()) - win) / hop + 1;
    require(frames > 2 * cfg.trim_frames, "stft: trace too short after trimming");

    // Per-frame DFT restricted to the kept bins, as one complex GEMM.
    Eigen::MatrixXcd twiddle(win, cfg.n_bins);
    for (int k = 0; k < cfg.n_bins; ++k)
        for (int i = 0; i < win; ++i) {
            double ang = -2.0 * M_PI * static_cast<double>(k) * i / win;
            twiddle(i, k) = cplx(std::cos(ang), std::sin(ang));
        }
    Eigen::MatrixXcd framed(frames, win);
    for (int t = 0; t < frames; ++t)
        for (int i = 0; i < win; ++i)
            framed(t, i) = trace.samples[t * hop + i] * window[i];
    Eigen::MatrixXcd coef = framed * twiddle;  // frames x n_bins

    Spectrogram out;
    out.values = coef.cwiseAbs().transpose();  // n_bins x frames
    out.values = decimate_trim(out.values, 1, cfg.trim_frames).eval();
    out.frame_hop_s = hop / trace.sample_rate_hz;
    out.freqs_hz.resize(cfg.n_bins);
    for (int k = 0; k < cfg.n_bins; ++k)
        out.freqs_hz[k] = static_cast<double>(k) * trace.sample_rate_hz / win;
    return out;
}

// Morlet wavelet sampled on [-half, half] at the trace rate. B_c = c / f.
// Support is truncated at +/- support_sigmas * B_c and additionally capped
// at the trace length so very low frequencies stay tractable.
inline std::vector<cplx> morlet_kernel(double f, double c, double rate, size_t trace_len,
                                       double support_sigmas = 5.0) {
    const double b = c / f;
    size_t half = static_cast<size_t>(std::ceil(support_sigmas * b * rate));
    if (half > trace_len) half = trace_len;
    const double dt = 1.0 / rate;
    const double norm = 1.0 / (b * std::sqrt(2.0 * M_PI));
    std::vector<cplx> k(2 * half + 1);
    for (size_t i = 0; i < k.size(); ++i) {
        double t = (static_cast<double>(i) - static_cast<double>(half)) * dt;
        double env = norm * std::exp(-t * t / (2.0 * b * b));
        double ph = 2.0 * M_PI * f * t;
        k[i] = cplx(env * std::cos(ph), env * std::sin(ph)) * dt;
    }
    return k;
}

// Complex response of the trace to a single Morlet wavelet ("same" length).
inline std::vector<cplx> morlet_response(const RawTrace& trace, double f, double c,
                                         double support_sigmas = 5.0) {
    trace.validate();
    require(f > 0.0 && f < trace.nyquist_hz(), "morlet: frequency must lie in (0, Nyquist)");
    require(c >= 1.0, "morlet: need at least one cycle");
    return convolve_same(trace.samples,
                         morlet_kernel(f, c, trace.sample_rate_hz, trace.size(), support_sigmas));
}

// Adaptive superlet order: o_min at f_min, o_max at f_max, linear in
// between, rounded half-up.
inline int adaptive_order(double f, const SuperletConfig& cfg) {
    cfg.validate();
    require(f >= cfg.f_min() && f <= cfg.f_max(), "adaptive_order: f outside foi range");
    double t = (f - cfg.f_min()) / (cfg.f_max() - cfg.f_min());
    return cfg.o_min + static_cast<int>(std::floor((cfg.o_max - cfg.o_min) * t + 0.5));
}

// Multiplicative adaptive superlet: per frequency of interest, the geometric
// mean over i = 1..o(f) of sqrt(2) * |x * psi_{c1*i, f}|, then decimated and
// trimmed.
inline Spectrogram superlet_transform(const RawTrace& trace, const SuperletConfig& cfg = {}) {
    trace.validate();
    cfg.validate();
    const int n = static_cast<int>(cfg.foi_hz.size());
    const int m = static_cast<int>(trace.size());
    Eigen::MatrixXd full(n, m);
    for (int r = 0; r < n; ++r) {
        const double f = cfg.foi_hz[r];
        const int order = adaptive_order(f, cfg);
        Eigen::ArrayXd log_sum = Eigen::ArrayXd::Zero(m);
        Eigen::Array<bool, Eigen::Dynamic, 1> any_zero =
            Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(m, false);
        for (int i = 1; i <= order; ++i) {
            auto resp = morlet_response(trace, f, cfg.c1 * i, cfg.support_sigmas);
            for (int t = 0; t < m; ++t) {
                double mag = std::sqrt(2.0) * std::abs(resp[t]);
                if (mag <= 0.0)
                    any_zero[t] = true;
                else
                    log_sum[t] += std::log(mag);
            }
        }
        for (int t = 0; t < m; ++t)
            full(r, t) = any_zero[t] ? 0.0 : std::exp(log_sum[t] / order);
    }
    Spectrogram out;
    out.values = decimate_trim(full, cfg.decimation, cfg.trim_frames);
    out.freqs_hz = cfg.foi_hz;
    out.frame_hop_s = cfg.decimation / trace.sample_rate_hz;
    out.electrode_id.clear();
    return out;
}

}  // namespace ff
