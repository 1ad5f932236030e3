#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ff/common.hpp"
#include "ff/decode.hpp"
#include "ff/io.hpp"
#include "ff/model.hpp"
#include "ff/pipeline.hpp"
#include "ff/synth.hpp"

namespace ff {

// Flat key=value run configuration. The canonical echo lists every key in
// registry order so that parsing the echo reproduces the config exactly.
struct RunConfig {
    uint64_t seed = 0;

    std::string transform = "stft";  // stft | superlet

    int stft_window = 400;
    int stft_overlap = 350;
    int stft_bins = 40;
    int stft_trim = 5;

    double superlet_c1 = 1.0;
    int superlet_o_min = 3;
    int superlet_o_max = 30;
    int superlet_n_foi = 40;
    double superlet_f_min = 0.1;
    double superlet_f_max = 200.0;
    int superlet_decimation = 50;
    int superlet_trim = 5;

    double highpass_hz = 0.1;
    double line_base_hz = 60.0;
    double line_bw_hz = 1.0;
    double segment_s = 5.0;

    std::string model_profile = "desk";  // desk | paper
    int model_d_h = 64;
    int model_layers = 2;
    int model_heads = 4;
    int model_d_ff = 0;
    int model_max_frames = 512;
    double model_dropout = 0.1;
    double model_gamma = 1.0;
    double model_alpha = 1.0;

    std::string mask_scheme = "static";  // static | adaptive
    double mask_p = 0.05;
    double mask_p_id = 0.1;
    double mask_p_replace = 0.1;
    int mask_time_min = 1;
    int mask_time_max = 5;
    int mask_freq_min = 1;
    int mask_freq_max = 2;

    long pretrain_steps = 2000;
    int pretrain_batch = 16;
    long pretrain_val_interval = 50;
    double pretrain_lr = 1e-4;
    long pretrain_warmup = 0;
    double pretrain_val_fraction = 0.1;

    long decode_updates = 1000;
    int decode_batch = 64;
    long decode_val_interval = 100;
    double decode_head_lr = 1e-3;
    double decode_encoder_lr = 1e-4;
    double decode_weight_decay = 0.0;
    int decode_feature_k = 5;

    int synth_shafts = 2;
    int synth_electrodes = 5;
    double synth_duration_s = 120.0;
    double synth_rate_hz = 2048.0;
    double synth_slope = -1.0;
    double synth_burst_rate_hz = 0.2;
    double synth_line_amp = 0.0;
    double synth_responsive_fraction = 0.0;
    double synth_response_snr = 2.0;
    double synth_event_gap_s = 4.0;
    double synth_event_jitter_s = 1.0;
    double synth_event_margin_s = 3.0;
    double task_guard_s = 1.0;

    int analysis_components = 200;
    double analysis_beta = 0.95;

    using FieldRef = std::variant<int*, long*, double*, std::string*, uint64_t*>;

    // Registry order is the canonical echo order. model.profile precedes the
    // model dimensions so that re-parsing an echo applies explicit dimensions
    // after the profile defaults.
    std::vector<std::pair<std::string, FieldRef>> fields() {
        return {
            {"run.seed", &seed},
            {"transform.method", &transform},
            {"stft.window", &stft_window},
            {"stft.overlap", &stft_overlap},
            {"stft.bins", &stft_bins},
            {"stft.trim", &stft_trim},
            {"superlet.c1", &superlet_c1},
            {"superlet.o_min", &superlet_o_min},
            {"superlet.o_max", &superlet_o_max},
            {"superlet.n_foi", &superlet_n_foi},
            {"superlet.f_min", &superlet_f_min},
            {"superlet.f_max", &superlet_f_max},
            {"superlet.decimation", &superlet_decimation},
            {"superlet.trim", &superlet_trim},
            {"pipeline.highpass_hz", &highpass_hz},
            {"pipeline.line_base_hz", &line_base_hz},
            {"pipeline.line_bw_hz", &line_bw_hz},
            {"pipeline.segment_s", &segment_s},
            {"model.profile", &model_profile},
            {"model.d_h", &model_d_h},
            {"model.layers", &model_layers},
            {"model.heads", &model_heads},
            {"model.d_ff", &model_d_ff},
            {"model.max_frames", &model_max_frames},
            {"model.dropout", &model_dropout},
            {"model.gamma", &model_gamma},
            {"model.alpha", &model_alpha},
            {"mask.scheme", &mask_scheme},
            {"mask.p_mask", &mask_p},
            {"mask.p_id", &mask_p_id},
            {"mask.p_replace", &mask_p_replace},
            {"mask.time_step_min", &mask_time_min},
            {"mask.time_step_max", &mask_time_max},
            {"mask.freq_step_min", &mask_freq_min},
            {"mask.freq_step_max", &mask_freq_max},
            {"pretrain.steps", &pretrain_steps},
            {"pretrain.batch", &pretrain_batch},
            {"pretrain.val_interval", &pretrain_val_interval},
            {"pretrain.lr", &pretrain_lr},
            {"pretrain.warmup", &pretrain_warmup},
            {"pretrain.val_fraction", &pretrain_val_fraction},
            {"decode.updates", &decode_updates},
            {"decode.batch", &decode_batch},
            {"decode.val_interval", &decode_val_interval},
            {"decode.head_lr", &decode_head_lr},
            {"decode.encoder_lr", &decode_encoder_lr},
            {"decode.weight_decay", &decode_weight_decay},
            {"decode.feature_k", &decode_feature_k},
            {"synth.shafts", &synth_shafts},
            {"synth.electrodes_per_shaft", &synth_electrodes},
            {"synth.duration_s", &synth_duration_s},
            {"synth.rate_hz", &synth_rate_hz},
            {"synth.slope", &synth_slope},
            {"synth.burst_rate_hz", &synth_burst_rate_hz},
            {"synth.line_amp", &synth_line_amp},
            {"synth.responsive_fraction", &synth_responsive_fraction},
            {"synth.response_snr", &synth_response_snr},
            {"synth.event_gap_s", &synth_event_gap_s},
            {"synth.event_jitter_s", &synth_event_jitter_s},
            {"synth.event_margin_s", &synth_event_margin_s},
            {"task.guard_s", &task_guard_s},
            {"analysis.components", &analysis_components},
            {"analysis.beta", &analysis_beta},
        };
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [name, ref] : fields()) {
            if (name != key) continue;
            std::visit(
                [&](auto* p) {
                    using V = std::remove_pointer_t<decltype(p)>;
                    if constexpr (std::is_same_v<V, std::string>)
                        *p = value;
                    else if constexpr (std::is_same_v<V, double>)
                        *p = std::stod(value);
                    else if constexpr (std::is_same_v<V, uint64_t>)
                        *p = std::stoull(value);
                    else if constexpr (std::is_same_v<V, long>)
                        *p = std::stol(value);
                    else
                        *p = std::stoi(value);
                },
                ref);
            if (key == "model.profile") apply_profile();
            return;
        }
        throw parameter_error("unknown config key: " + key);
    }

    void apply_profile() {
        if (model_profile == "desk") {
            model_d_h = 64;
            model_layers = 2;
            model_heads = 4;
        } else if (model_profile == "paper") {
            model_d_h = 768;
            model_layers = 6;
            model_heads = 12;
        } else {
            throw parameter_error("unknown model profile: " + model_profile);
        }
    }

    std::string echo() {
        std::ostringstream ss;
        for (auto& [name, ref] : fields()) {
            ss << name << "=";
            std::visit(
                [&](auto* p) {
                    using V = std::remove_pointer_t<decltype(p)>;
                    if constexpr (std::is_same_v<V, double>)
                        ss << io::format_double(*p);
                    else
                        ss << *p;
                },
                ref);
            ss << "\n";
        }
        return ss.str();
    }

    PipelineConfig pipeline() const {
        PipelineConfig p;
        p.transform = parse_transform(transform);
        p.stft.window_samples = stft_window;
        p.stft.overlap_samples = stft_overlap;
        p.stft.n_bins = stft_bins;
        p.stft.trim_frames = stft_trim;
        p.superlet.c1 = superlet_c1;
        p.superlet.o_min = superlet_o_min;
        p.superlet.o_max = superlet_o_max;
        p.superlet.decimation = superlet_decimation;
        p.superlet.trim_frames = superlet_trim;
        require(superlet_n_foi >= 2, "config: need at least two superlet frequencies");
        p.superlet.foi_hz.resize(static_cast<size_t>(superlet_n_foi));
        for (int i = 0; i < superlet_n_foi; ++i)
            p.superlet.foi_hz[static_cast<size_t>(i)] =
                superlet_f_min + (superlet_f_max - superlet_f_min) * i / (superlet_n_foi - 1);
        p.highpass_hz = highpass_hz;
        p.line_base_hz = line_base_hz;
        p.line_bandwidth_hz = line_bw_hz;
        p.segment_s = segment_s;
        return p;
    }

    BrainBertConfig model() const {
        BrainBertConfig m;
        m.n_layers = model_layers;
        m.heads = model_heads;
        m.d_h = model_d_h;
        m.d_ff = model_d_ff;
        m.dropout = model_dropout;
        m.n_bins = transform == "stft" ? stft_bins : superlet_n_foi;
        m.max_frames = model_max_frames;
        m.gamma = model_gamma;
        m.alpha = model_alpha;
        m.validate();
        return m;
    }

    MaskParams mask() const {
        MaskParams p;
        p.p_mask = mask_p;
        p.p_id = mask_p_id;
        p.p_replace = mask_p_replace;
        p.time_step_min = mask_time_min;
        p.time_step_max = mask_time_max;
        p.freq_step_min = mask_freq_min;
        p.freq_step_max = mask_freq_max;
        p.validate();
        return p;
    }

    PretrainConfig pretrain() const {
        PretrainConfig p;
        p.steps = pretrain_steps;
        p.batch_size = pretrain_batch;
        p.val_interval = pretrain_val_interval;
        p.val_fraction = pretrain_val_fraction;
        p.warmup = pretrain_warmup;
        p.opt.lr = pretrain_lr;
        p.mask = mask();
        if (mask_scheme == "static")
            p.scheme = MaskScheme::static_scheme;
        else if (mask_scheme == "adaptive")
            p.scheme = MaskScheme::adaptive;
        else
            throw parameter_error("unknown mask scheme: " + mask_scheme);
        p.seed = seed;
        return p;
    }

    DecodeConfig decode() const {
        DecodeConfig d;
        d.updates = decode_updates;
        d.batch_size = decode_batch;
        d.val_interval = decode_val_interval;
        d.head_lr = decode_head_lr;
        d.encoder_lr = decode_encoder_lr;
        d.weight_decay = decode_weight_decay;
        d.feature_k = decode_feature_k;
        d.seed = seed;
        return d;
    }

    SynthConfig synth() const {
        SynthConfig s;
        s.n_shafts = synth_shafts;
        s.electrodes_per_shaft = synth_electrodes;
        s.duration_s = synth_duration_s;
        s.sample_rate_hz = synth_rate_hz;
        s.seed = seed;
        s.spectral_slope = synth_slope;
        s.burst_rate_hz = synth_burst_rate_hz;
        s.line_noise_amp = synth_line_amp;
        s.responsive_fraction = synth_responsive_fraction;
        s.response_snr = synth_response_snr;
        s.event_min_gap_s = synth_event_gap_s;
        s.event_jitter_s = synth_event_jitter_s;
        s.event_margin_s = synth_event_margin_s;
        return s;
    }
};

inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
            line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        line = line.substr(start);
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw parameter_error("config line " + std::to_string(lineno) + ": expected key=value");
        cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config: " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

}  // namespace ff
