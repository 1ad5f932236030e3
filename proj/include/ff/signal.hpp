#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/spectrogram.hpp"

namespace ff {

// Single-electrode voltage time series (microvolts).
struct RawTrace {
    std::vector<double> samples;
    double sample_rate_hz = 2048.0;

    size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
    double nyquist_hz() const { return 0.5 * sample_rate_hz; }

    void validate() const {
        require(sample_rate_hz > 0.0, "trace: sample rate must be positive");
        require(!samples.empty(), "trace: at least one sample required");
        if (!all_finite(samples)) throw input_error("trace: non-finite samples");
    }
};

// Shaft-ordered electrode identifiers; order within a shaft reflects
// physical adjacency.
struct ProbeLayout {
    std::vector<std::vector<std::string>> shafts;

    void validate() const {
        std::map<std::string, int> seen;
        for (const auto& shaft : shafts)
            for (const auto& id : shaft)
                require(++seen[id] == 1, "layout: duplicate electrode id " + id);
    }
};

struct Recording {
    std::map<std::string, RawTrace> traces;
    ProbeLayout layout;
    std::string session_id;

    void validate() const {
        layout.validate();
        double rate = -1.0;
        size_t len = 0;
        for (const auto& [id, tr] : traces) {
            tr.validate();
            if (rate < 0) {
                rate = tr.sample_rate_hz;
                len = tr.size();
            }
            require(tr.sample_rate_hz == rate, "recording: mixed sample rates");
            require(tr.size() == len, "recording: mixed trace lengths");
        }
    }
};

// Per-frequency-bin normalization statistics, reusable across spectrograms.
// Division uses max(stddev, epsilon) so degenerate (constant) rows map to
// zeros while healthy rows are standardized exactly.
struct ZScoreStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    double epsilon = 1e-8;
};

namespace detail {

struct Biquad {
    double b0, b1, b2, a1, a2;  // a0 normalized to 1

    void apply_forward(std::vector<double>& x) const {
        double w1 = 0.0, w2 = 0.0;  // direct form II transposed state
        for (double& s : x) {
            double in = s;
            double out = b0 * in + w1;
            w1 = b1 * in - a1 * out + w2;
            w2 = b2 * in - a2 * out;
            s = out;
        }
    }
};

// Zero-phase application: forward, reverse, forward, reverse.
inline void filtfilt(const std::vector<Biquad>& sections, std::vector<double>& x) {
    for (const auto& s : sections) s.apply_forward(x);
    std::reverse(x.begin(), x.end());
    for (const auto& s : sections) s.apply_forward(x);
    std::reverse(x.begin(), x.end());
}

// 4th-order Butterworth high-pass as two cascaded biquads (bilinear design).
inline std::vector<Biquad> butterworth_highpass4(double cutoff_hz, double rate) {
    const double q[2] = {0.54119610014619698, 1.3065629648763764};
    const double w0 = 2.0 * M_PI * cutoff_hz / rate;
    const double cw = std::cos(w0), sw = std::sin(w0);
    std::vector<Biquad> out;
    for (double qi : q) {
        double alpha = sw / (2.0 * qi);
        double a0 = 1.0 + alpha;
        Biquad b;
        b.b0 = (1.0 + cw) / 2.0 / a0;
        b.b1 = -(1.0 + cw) / a0;
        b.b2 = b.b0;
        b.a1 = -2.0 * cw / a0;
        b.a2 = (1.0 - alpha) / a0;
        out.push_back(b);
    }
    return out;
}

// 2nd-order notch with the given -3dB bandwidth.
inline Biquad notch(double f0, double bandwidth_hz, double rate) {
    const double w0 = 2.0 * M_PI * f0 / rate;
    const double cw = std::cos(w0), sw = std::sin(w0);
    const double q = f0 / bandwidth_hz;
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad b;
    b.b0 = 1.0 / a0;
    b.b1 = -2.0 * cw / a0;
    b.b2 = 1.0 / a0;
    b.a1 = b.b1;
    b.a2 = (1.0 - alpha) / a0;
    return b;
}

}  // namespace detail

// Zero-phase 4th-order Butterworth high-pass.
inline RawTrace highpass_filter(const RawTrace& trace, double cutoff_hz = 0.1) {
    trace.validate();
    require(cutoff_hz > 0.0 && cutoff_hz < trace.nyquist_hz(),
            "highpass: cutoff must lie in (0, Nyquist)");
    RawTrace out = trace;
    detail::filtfilt(detail::butterworth_highpass4(cutoff_hz, trace.sample_rate_hz), out.samples);
    return out;
}

// Zero-phase notches at base_hz and every integer harmonic below Nyquist.
inline RawTrace remove_line_noise(const RawTrace& trace, double base_hz = 60.0,
                                  double bandwidth_hz = 1.0) {
    trace.validate();
    require(base_hz > 0.0 && base_hz < trace.nyquist_hz(),
            "line noise: base frequency must lie in (0, Nyquist)");
    std::vector<detail::Biquad> sections;
    for (double f = base_hz; f < trace.nyquist_hz(); f += base_hz)
        sections.push_back(detail::notch(f, bandwidth_hz, trace.sample_rate_hz));
    RawTrace out = trace;
    detail::filtfilt(sections, out.samples);
    return out;
}

// Keeps only electrodes with two same-shaft neighbors; each kept trace
// becomes x_i - (x_{i-1} + x_{i+1}) / 2.
inline Recording laplacian_rereference(const Recording& rec) {
    rec.validate();
    Recording out;
    out.session_id = rec.session_id;
    for (const auto& shaft : rec.layout.shafts) {
        if (shaft.size() < 3) continue;
        std::vector<std::string> kept;
        for (size_t i = 1; i + 1 < shaft.size(); ++i) {
            const auto &prev = rec.traces.at(shaft[i - 1]), &cur = rec.traces.at(shaft[i]),
                       &next = rec.traces.at(shaft[i + 1]);
            RawTrace t;
            t.sample_rate_hz = cur.sample_rate_hz;
            t.samples.resize(cur.size());
            for (size_t k = 0; k < cur.size(); ++k)
                t.samples[k] = cur.samples[k] - 0.5 * (prev.samples[k] + next.samples[k]);
            out.traces[shaft[i]] = std::move(t);
            kept.push_back(shaft[i]);
        }
        out.layout.shafts.push_back(std::move(kept));
    }
    return out;
}

// Non-overlapping (at default hop) fixed-width segments; trailing partial
// window dropped. Segment k starts at floor(k * hop_s * rate).
inline std::vector<RawTrace> segment_recording(const RawTrace& trace, double window_s = 5.0,
                                               double hop_s = 5.0) {
    trace.validate();
    const double rate = trace.sample_rate_hz;
    const size_t win = static_cast<size_t>(window_s * rate);
    require(win >= 1, "segment: window must cover at least one sample");
    require(hop_s > 0.0, "segment: hop must be positive");
    std::vector<RawTrace> out;
    for (size_t k = 0;; ++k) {
        size_t start = static_cast<size_t>(std::floor(static_cast<double>(k) * hop_s * rate));
        if (start + win > trace.size()) break;
        RawTrace seg;
        seg.sample_rate_hz = rate;
        seg.samples.assign(trace.samples.begin() + start, trace.samples.begin() + start + win);
        out.push_back(std::move(seg));
    }
    return out;
}

inline ZScoreStats compute_zscore_stats(const Spectrogram& spec, double epsilon = 1e-8) {
    const int n = spec.n_bins(), m = spec.n_frames();
    require(n >= 1 && m >= 2, "zscore: need n >= 1 and m >= 2");
    ZScoreStats st;
    st.epsilon = epsilon;
    st.mean.resize(n);
    st.stddev.resize(n);
    for (int i = 0; i < n; ++i) {
        double mu = spec.values.row(i).mean();
        double var = (spec.values.row(i).array() - mu).square().mean();
        st.mean[i] = mu;
        st.stddev[i] = std::sqrt(var);
    }
    return st;
}

inline Spectrogram apply_zscore(const Spectrogram& spec, const ZScoreStats& st) {
    require(static_cast<int>(st.mean.size()) == spec.n_bins(), "zscore: stats size mismatch");
    Spectrogram out = spec;
    for (int i = 0; i < spec.n_bins(); ++i)
        out.values.row(i) =
            (spec.values.row(i).array() - st.mean[i]) / std::max(st.stddev[i], st.epsilon);
    return out;
}

// Per-frequency-bin z-scoring over this spectrogram instance. Constant rows
// map to zeros through the epsilon guard.
inline std::pair<Spectrogram, ZScoreStats> zscore(const Spectrogram& spec,
                                                  double epsilon = 1e-8) {
    ZScoreStats st = compute_zscore_stats(spec, epsilon);
    return {apply_zscore(spec, st), st};
}

}  // namespace ff
