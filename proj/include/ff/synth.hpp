#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/decode.hpp"
#include "ff/fft.hpp"
#include "ff/parallel.hpp"
#include "ff/rng.hpp"
#include "ff/signal.hpp"

namespace ff {

struct SynthConfig {
    int n_shafts = 2;
    int electrodes_per_shaft = 5;
    double duration_s = 120.0;
    double sample_rate_hz = 2048.0;
    uint64_t seed = 0;
    double spectral_slope = -1.0;   // log-log PSD slope of the background
    double burst_rate_hz = 0.2;     // Poisson rate of background Gabor bursts
    double line_noise_amp = 0.0;    // 60 Hz amplitude relative to unit background
    double responsive_fraction = 0.0;
    double response_snr = 2.0;
    double event_min_gap_s = 4.0;   // stimulus spacing: gap + uniform jitter
    double event_jitter_s = 1.0;
    double event_margin_s = 3.0;    // keep events away from the recording edges

    void validate() const {
        require(n_shafts >= 1 && electrodes_per_shaft >= 1, "synth: bad probe geometry");
        require(duration_s >= 20.0, "synth: duration must be >= 20 s");
        require(sample_rate_hz > 0.0, "synth: bad sample rate");
        require(responsive_fraction >= 0.0 && responsive_fraction <= 1.0,
                "synth: responsive_fraction must lie in [0,1]");
        require(event_min_gap_s > 0.0 && event_jitter_s >= 0.0, "synth: bad event spacing");
    }
};

struct StimulusTrack {
    std::vector<double> event_times_s;  // strictly increasing
    double min_separation_s = 0.0;
    std::vector<std::string> responsive_electrodes;
};

namespace detail {

// 1/f^(-slope)-shaped Gaussian noise via spectral shaping, normalized to
// unit standard deviation.
inline std::vector<double> colored_noise(size_t n, double rate, double slope, Rng& rng) {
    size_t nfft = next_pow2(2 * n);
    std::vector<cplx> spec(nfft, cplx(0.0, 0.0));
    for (size_t k = 1; k <= nfft / 2; ++k) {
        double f = static_cast<double>(k) * rate / static_cast<double>(nfft);
        double amp = std::pow(f, slope / 2.0);  // power ~ f^slope
        cplx v = amp * cplx(rng.normal(), rng.normal());
        spec[k] = v;
        if (k < nfft / 2) spec[nfft - k] = std::conj(v);
    }
    spec[nfft / 2] = cplx(spec[nfft / 2].real(), 0.0);
    fft_inplace(spec, /*inverse=*/true);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = spec[i].real();
    double mu = 0.0;
    for (double v : out) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : out) var += (v - mu) * (v - mu);
    double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : out) v = (v - mu) / std::max(sd, 1e-12);
    return out;
}

inline void add_gabor(std::vector<double>& x, double rate, double t0, double f, double sigma_s,
                      double amp, double phase) {
    long center = static_cast<long>(std::llround(t0 * rate));
    long half = static_cast<long>(std::ceil(4.0 * sigma_s * rate));
    for (long i = std::max<long>(0, center - half);
         i < std::min<long>(static_cast<long>(x.size()), center + half + 1); ++i) {
        double t = (static_cast<double>(i) - static_cast<double>(center)) / rate;
        x[static_cast<size_t>(i)] +=
            amp * std::exp(-0.5 * t * t / (sigma_s * sigma_s)) *
            std::cos(2.0 * M_PI * f * t + phase);
    }
}

// Phase-locked slow deflection, identical after every event.
inline void add_erp(std::vector<double>& x, double rate, double t0, double amp) {
    long start = static_cast<long>(std::llround(t0 * rate));
    long len = static_cast<long>(0.5 * rate);
    for (long i = std::max<long>(0, start);
         i < std::min<long>(static_cast<long>(x.size()), start + len); ++i) {
        double t = (static_cast<double>(i) - static_cast<double>(start)) / rate;
        x[static_cast<size_t>(i)] += amp * std::exp(-0.5 * std::pow((t - 0.2) / 0.1, 2.0));
    }
}

}  // namespace detail

inline std::string electrode_id(int shaft, int pos) {
    return "s" + std::to_string(shaft) + "e" + std::to_string(pos);
}

// Seed-deterministic synthetic SEEG stand-in: 1/f background, Poisson Gabor
// bursts, optional line noise, and stimulus-locked responses on a subset of
// interior electrodes. Responses have a phase-locked slow deflection plus a
// random-phase 70-110 Hz burst beginning 150 ms after each event.
inline std::pair<Recording, StimulusTrack> generate_recording(const SynthConfig& cfg) {
    cfg.validate();
    const double rate = cfg.sample_rate_hz;
    const size_t n_samples = static_cast<size_t>(cfg.duration_s * rate);

    StimulusTrack track;
    track.min_separation_s = cfg.event_min_gap_s;
    Rng ev_rng(Rng::derive(cfg.seed, 1));
    double t = cfg.event_margin_s;
    while (t < cfg.duration_s - cfg.event_margin_s) {
        track.event_times_s.push_back(t);
        t += cfg.event_min_gap_s + ev_rng.uniform(0.0, cfg.event_jitter_s);
    }

    // responsive electrodes: interior (re-reference survivors), non-adjacent,
    // picked by a seeded shuffle
    std::vector<std::pair<int, int>> interior;
    for (int s = 0; s < cfg.n_shafts; ++s)
        for (int p = 1; p + 1 < cfg.electrodes_per_shaft; ++p) interior.push_back({s, p});
    Rng pick_rng(Rng::derive(cfg.seed, 2));
    for (size_t i = interior.size(); i > 1; --i)
        std::swap(interior[i - 1], interior[pick_rng.uniform_int(0, static_cast<int>(i) - 1)]);
    const int total = cfg.n_shafts * cfg.electrodes_per_shaft;
    size_t quota = static_cast<size_t>(std::lround(cfg.responsive_fraction * total));
    std::set<std::pair<int, int>> responsive;
    for (const auto& cand : interior) {
        if (responsive.size() >= quota) break;
        if (responsive.count({cand.first, cand.second - 1}) ||
            responsive.count({cand.first, cand.second + 1}))
            continue;
        responsive.insert(cand);
        track.responsive_electrodes.push_back(electrode_id(cand.first, cand.second));
    }
    std::sort(track.responsive_electrodes.begin(), track.responsive_electrodes.end());

    Recording rec;
    rec.session_id = "synth-" + std::to_string(cfg.seed);
    std::vector<std::pair<int, int>> all;
    for (int s = 0; s < cfg.n_shafts; ++s) {
        std::vector<std::string> shaft;
        for (int p = 0; p < cfg.electrodes_per_shaft; ++p) {
            shaft.push_back(electrode_id(s, p));
            all.push_back({s, p});
        }
        rec.layout.shafts.push_back(std::move(shaft));
    }

    std::vector<RawTrace> traces(all.size());
    parallel_for(static_cast<int>(all.size()), [&](int i) {
        auto [s, p] = all[static_cast<size_t>(i)];
        Rng rng(Rng::derive(cfg.seed, 100 + s, p));
        RawTrace tr;
        tr.sample_rate_hz = rate;
        tr.samples = detail::colored_noise(n_samples, rate, cfg.spectral_slope, rng);

        // background Gabor bursts, Poisson in time
        double bt = rng.uniform(0.0, 1.0 / std::max(cfg.burst_rate_hz, 1e-9));
        while (bt < cfg.duration_s) {
            double f = rng.uniform(4.0, 150.0);
            double sigma = std::min(0.2, 3.0 / f);
            detail::add_gabor(tr.samples, rate, bt, f, sigma, rng.uniform(0.5, 1.5),
                              rng.uniform(0.0, 2.0 * M_PI));
            bt += -std::log(1.0 - rng.uniform()) / std::max(cfg.burst_rate_hz, 1e-9);
        }

        if (cfg.line_noise_amp > 0.0) {
            double phase = rng.uniform(0.0, 2.0 * M_PI);
            for (size_t k = 0; k < n_samples; ++k)
                tr.samples[k] += cfg.line_noise_amp *
                                 std::sin(2.0 * M_PI * 60.0 * static_cast<double>(k) / rate + phase);
        }

        if (responsive.count({s, p})) {
            const double erp_amp = 0.2 * cfg.response_snr;
            const double burst_amp = 0.25 * cfg.response_snr;
            for (double ev : track.event_times_s) {
                detail::add_erp(tr.samples, rate, ev, erp_amp);
                double f = rng.uniform(70.0, 110.0);
                detail::add_gabor(tr.samples, rate, ev + 0.15, f, 0.075, burst_amp,
                                  rng.uniform(0.0, 2.0 * M_PI));
            }
        }
        traces[static_cast<size_t>(i)] = std::move(tr);
    });
    for (size_t i = 0; i < all.size(); ++i)
        rec.traces[electrode_id(all[i].first, all[i].second)] = std::move(traces[i]);
    return {std::move(rec), std::move(track)};
}

// Balanced binary task: positives centered on events, negatives at sampled
// times at least guard_s from every event; 80/10/10 split by seed, shared
// across electrodes.
inline TaskDataset make_task_dataset(const Recording& rec, const StimulusTrack& track,
                                     double context_s = 5.0, double guard_s = 1.0,
                                     uint64_t seed = 0, const std::string& task_name = "onset") {
    require(!rec.traces.empty(), "make_task_dataset: empty recording");
    require(!track.event_times_s.empty(), "make_task_dataset: no events");
    const auto& first = rec.traces.begin()->second;
    const double dur = first.duration_s();
    const double half = context_s / 2.0;

    std::vector<double> centers;
    std::vector<int> labels;
    for (double ev : track.event_times_s)
        if (ev - half >= 0.0 && ev + half <= dur) {
            centers.push_back(ev);
            labels.push_back(1);
        }
    const size_t n_pos = centers.size();
    require(n_pos >= 2, "make_task_dataset: too few usable events");

    auto near_event = [&](double t) {
        for (double ev : track.event_times_s)
            if (std::abs(t - ev) < guard_s) return true;
        return false;
    };
    Rng neg_rng(Rng::derive(seed, 5));
    size_t attempts = 0;
    std::vector<double> negatives;
    while (negatives.size() < n_pos) {
        if (++attempts > 1000 * n_pos)
            throw input_error("make_task_dataset: cannot place enough negatives");
        double t = neg_rng.uniform(half, dur - half);
        if (!near_event(t)) negatives.push_back(t);
    }
    for (double t : negatives) {
        centers.push_back(t);
        labels.push_back(0);
    }

    // seeded 80/10/10 assignment stratified per class so small datasets keep
    // both labels in every split; identical for every electrode
    const size_t n = centers.size();
    std::vector<Split> splits(n, Split::train);
    Rng split_rng(Rng::derive(seed, 6));
    for (int cls : {1, 0}) {
        std::vector<size_t> order;
        for (size_t i = 0; i < n; ++i)
            if (labels[i] == cls) order.push_back(i);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[split_rng.uniform_int(0, static_cast<int>(i) - 1)]);
        const size_t n_val = order.size() / 10, n_test = order.size() / 10;
        for (size_t i = 0; i < n_val; ++i) splits[order[i]] = Split::val;
        for (size_t i = n_val; i < n_val + n_test; ++i) splits[order[i]] = Split::test;
    }

    TaskDataset ds;
    ds.task = task_name;
    for (size_t i = 0; i < n; ++i) {
        LabeledExample e;
        e.center_time_s = centers[i];
        e.label = labels[i];
        e.split = splits[i];
        ds.examples.push_back(e);
    }
    ds.validate();
    return ds;
}

// Assembles per-electrode decode inputs: 5 s preprocessed raw context plus a
// z-scored spectrogram per example.
inline PreparedTask prepare_task(const Recording& preprocessed, const TaskDataset& ds,
                                 const std::string& electrode, const PipelineConfig& cfg) {
    const auto& trace = preprocessed.traces.at(electrode);
    const double rate = trace.sample_rate_hz;
    const long win = static_cast<long>(cfg.segment_s * rate);

    PreparedTask out;
    out.task = ds.task;
    out.electrode = electrode;
    std::vector<const LabeledExample*> kept;
    for (const auto& e : ds.examples) {
        long start = static_cast<long>(std::llround(e.center_time_s * rate)) - win / 2;
        if (start < 0 || start + win > static_cast<long>(trace.size())) continue;
        kept.push_back(&e);
    }
    require(!kept.empty(), "prepare_task: no examples fit inside the recording");
    out.labels.resize(kept.size());
    out.splits.resize(kept.size());
    out.raw.resize(kept.size());
    out.specs.resize(kept.size());
    parallel_for(static_cast<int>(kept.size()), [&](int i) {
        const auto& e = *kept[static_cast<size_t>(i)];
        long start = static_cast<long>(std::llround(e.center_time_s * rate)) - win / 2;
        RawTrace ctx;
        ctx.sample_rate_hz = rate;
        ctx.samples.assign(trace.samples.begin() + start, trace.samples.begin() + start + win);
        out.labels[static_cast<size_t>(i)] = e.label;
        out.splits[static_cast<size_t>(i)] = e.split;
        out.raw[static_cast<size_t>(i)] =
            Eigen::Map<const Eigen::VectorXd>(ctx.samples.data(), win);
        out.specs[static_cast<size_t>(i)] = zscore(transform_trace(ctx, cfg)).first.values;
    });
    return out;
}

}  // namespace ff
