#pragma once

#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/signal.hpp"
#include "ff/timefreq.hpp"

namespace ff {

enum class TransformKind { stft, superlet };

inline TransformKind parse_transform(const std::string& s) {
    if (s == "stft") return TransformKind::stft;
    if (s == "superlet") return TransformKind::superlet;
    throw parameter_error("unknown transform method: " + s);
}

inline const char* transform_name(TransformKind k) {
    return k == TransformKind::stft ? "stft" : "superlet";
}

struct PipelineConfig {
    TransformKind transform = TransformKind::stft;
    StftConfig stft{};
    SuperletConfig superlet{};
    double highpass_hz = 0.1;
    double line_base_hz = 60.0;
    double line_bandwidth_hz = 1.0;
    double segment_s = 5.0;

    std::vector<double> freqs(double rate) const {
        if (transform == TransformKind::stft) {
            std::vector<double> f(static_cast<size_t>(stft.n_bins));
            for (int i = 0; i < stft.n_bins; ++i)
                f[static_cast<size_t>(i)] = i * rate / stft.window_samples;
            return f;
        }
        return superlet.foi_hz;
    }
};

// High-pass, notch comb, Laplacian re-reference; returns only the interior
// electrodes.
inline Recording preprocess_recording(const Recording& rec, const PipelineConfig& cfg = {}) {
    Recording filtered;
    filtered.layout = rec.layout;
    filtered.session_id = rec.session_id;
    for (const auto& [id, tr] : rec.traces)
        filtered.traces[id] =
            remove_line_noise(highpass_filter(tr, cfg.highpass_hz), cfg.line_base_hz,
                              cfg.line_bandwidth_hz);
    return laplacian_rereference(filtered);
}

inline Spectrogram transform_trace(const RawTrace& trace, const PipelineConfig& cfg) {
    return cfg.transform == TransformKind::stft ? stft(trace, cfg.stft)
                                                : superlet_transform(trace, cfg.superlet);
}

// Fixed-length windows of one preprocessed trace, each transformed and
// z-scored independently.
inline std::vector<Spectrogram> segment_transform_zscore(const RawTrace& trace,
                                                         const PipelineConfig& cfg) {
    std::vector<Spectrogram> out;
    for (const auto& seg : segment_recording(trace, cfg.segment_s, cfg.segment_s))
        out.push_back(zscore(transform_trace(seg, cfg)).first);
    return out;
}

}  // namespace ff
