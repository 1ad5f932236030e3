#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "ff/common.hpp"
#include "ff/rng.hpp"
#include "ff/spectrogram.hpp"

namespace ff {

struct MaskParams {
    double p_mask = 0.05;
    double p_id = 0.1;
    double p_replace = 0.1;
    int time_step_min = 1, time_step_max = 5;
    int freq_step_min = 1, freq_step_max = 2;

    void validate() const {
        require(p_mask >= 0 && p_mask <= 1 && p_id >= 0 && p_replace >= 0,
                "mask params: probabilities must lie in [0,1]");
        require(p_id + p_replace <= 1.0, "mask params: p_id + p_replace must be <= 1");
        require(time_step_min >= 1 && time_step_min <= time_step_max, "mask params: bad time steps");
        require(freq_step_min >= 1 && freq_step_min <= freq_step_max, "mask params: bad freq steps");
    }
};

enum class MaskAxis { time, frequency };
enum class MaskAction { keep, replace, zero };

// One masked interval. For static masks the footprint is [start, start+extent)
// along the axis with a single shared extent. For adaptive time wedges the
// extent varies per row and the footprint is centered on `start`.
struct MaskInterval {
    MaskAxis axis = MaskAxis::time;
    int start = 0;
    std::vector<int> extents;  // size 1 (static) or one per row (adaptive time)
    MaskAction action = MaskAction::zero;
    int replace_source = -1;  // start index in the source, or -1
    bool centered = false;    // adaptive wedges are centered on start

    int max_extent() const { return *std::max_element(extents.begin(), extents.end()); }

    // Column (or row) range covered at the given row index, clamped to len.
    std::pair<int, int> span_at(int row, int len) const {
        int ext = extents.size() == 1 ? extents[0] : extents[static_cast<size_t>(row)];
        int lo = centered ? start - ext / 2 : start;
        int hi = lo + ext;
        return {std::max(0, lo), std::min(len, hi)};
    }

    // Outer bounds along the mask axis (union over rows), for overlap checks.
    std::pair<int, int> outer_span(int len) const {
        int ext = max_extent();
        int lo = centered ? start - ext / 2 : start;
        return {std::max(0, lo), std::min(len, lo + ext)};
    }
};

struct MaskPlan {
    std::vector<MaskInterval> intervals;
    std::set<std::pair<int, int>> masked_set;  // (row, col)
};

namespace detail {

inline bool spans_overlap(std::pair<int, int> a, std::pair<int, int> b) {
    return a.first < b.second && b.first < a.second;
}

inline MaskAction sample_action(const MaskParams& p, Rng& rng) {
    double q = rng.uniform();
    if (q < p.p_id) return MaskAction::keep;
    if (q < p.p_id + p.p_replace) return MaskAction::replace;
    return MaskAction::zero;
}

// Second pass after the scan: pick source starts whose footprint avoids
// every interval on the axis (including intervals sampled later than the
// target). Falls back to zero action after 100 tries.
inline void assign_replace_sources(std::vector<MaskInterval>& ivs, int len, Rng& rng) {
    for (auto& iv : ivs) {
        if (iv.action != MaskAction::replace) continue;
        const int width = iv.outer_span(len).second - iv.outer_span(len).first;
        iv.action = MaskAction::zero;
        for (int attempt = 0; attempt < 100; ++attempt) {
            int j = rng.uniform_int(0, len - width);
            std::pair<int, int> cand{j, j + width};
            bool clash = false;
            for (const auto& other : ivs) clash = clash || spans_overlap(cand, other.outer_span(len));
            if (!clash) {
                iv.action = MaskAction::replace;
                iv.replace_source = j;
                break;
            }
        }
    }
}

}  // namespace detail

// Left-to-right interval sampling: at each position start an interval with
// probability p_mask, pick its width uniformly from the step range and its
// action from p_id / p_replace, then advance past it.
inline std::vector<MaskInterval> sample_axis_masks(int length, const MaskParams& params,
                                                   MaskAxis axis, uint64_t rng_seed) {
    params.validate();
    require(length >= 1, "sample_axis_masks: length must be >= 1");
    const int step_min = axis == MaskAxis::time ? params.time_step_min : params.freq_step_min;
    const int step_max = axis == MaskAxis::time ? params.time_step_max : params.freq_step_max;
    Rng rng(rng_seed);
    std::vector<MaskInterval> out;
    int i = 0;
    while (i < length) {
        if (rng.uniform() < params.p_mask) {
            MaskInterval iv;
            iv.axis = axis;
            iv.start = i;
            iv.extents = {std::min(rng.uniform_int(step_min, step_max), length - i)};
            iv.action = detail::sample_action(params, rng);
            i += iv.extents[0];
            out.push_back(std::move(iv));
        } else {
            ++i;
        }
    }
    detail::assign_replace_sources(out, length, rng);
    return out;
}

// Adaptive temporal mask width at frequency f (in frames), before rounding.
inline double adaptive_time_width(double f, int m) {
    require(f >= 0.0 && (m == 1 || m == 2), "adaptive_time_width: bad arguments");
    return 2.0 * std::max(static_cast<double>(m), 200.0 / (20.0 + f));
}

// Adaptive frequency mask width at frequency f (in bins).
inline int adaptive_freq_width(double f) {
    require(f >= 0.0, "adaptive_freq_width: f must be >= 0");
    return std::max(1, static_cast<int>(std::floor(4.9 * f / 250.0)));
}

namespace detail {

inline int round_to_frames(double w) { return std::max(1, static_cast<int>(std::floor(w + 0.5))); }

inline void add_footprint(MaskPlan& plan, const MaskInterval& iv, int n, int m) {
    if (iv.axis == MaskAxis::time) {
        for (int r = 0; r < n; ++r) {
            auto [lo, hi] = iv.span_at(r, m);
            for (int c = lo; c < hi; ++c) plan.masked_set.insert({r, c});
        }
    } else {
        auto [lo, hi] = iv.span_at(0, n);
        for (int r = lo; r < hi; ++r)
            for (int c = 0; c < m; ++c) plan.masked_set.insert({r, c});
    }
}

}  // namespace detail

inline MaskPlan sample_static_masks(int n_rows, int n_cols, const MaskParams& params,
                                    uint64_t rng_seed) {
    MaskPlan plan;
    plan.intervals = sample_axis_masks(n_cols, params, MaskAxis::time, Rng::derive(rng_seed, 1));
    auto freq = sample_axis_masks(n_rows, params, MaskAxis::frequency, Rng::derive(rng_seed, 2));
    plan.intervals.insert(plan.intervals.end(), freq.begin(), freq.end());
    for (const auto& iv : plan.intervals) detail::add_footprint(plan, iv, n_rows, n_cols);
    return plan;
}

// Adaptive scheme for superlet inputs: time masks are frequency-dependent
// wedges centered on the sampled onset (wider at low frequencies), frequency
// masks widen with frequency. Onset and action sampling follow the same
// p_mask / p_id / p_replace scan as the static scheme.
inline MaskPlan sample_adaptive_masks(int n_rows, int n_cols, const std::vector<double>& foi_hz,
                                      const MaskParams& params, uint64_t rng_seed) {
    params.validate();
    require(static_cast<int>(foi_hz.size()) == n_rows,
            "sample_adaptive_masks: foi length must equal row count");
    MaskPlan plan;
    Rng rng(Rng::derive(rng_seed, 1));
    const int base_m = rng.uniform_int(1, 2);  // drawn once per example

    std::vector<int> wedge(n_rows);
    for (int r = 0; r < n_rows; ++r)
        wedge[r] = detail::round_to_frames(adaptive_time_width(foi_hz[r], base_m));
    const int wedge_max = *std::max_element(wedge.begin(), wedge.end());

    int i = 0;
    while (i < n_cols) {
        if (rng.uniform() < params.p_mask) {
            MaskInterval iv;
            iv.axis = MaskAxis::time;
            iv.centered = true;
            iv.start = i;
            iv.extents = wedge;
            iv.action = detail::sample_action(params, rng);
            i += wedge_max;  // step past the widest row so wedges never overlap
            plan.intervals.push_back(std::move(iv));
        } else {
            ++i;
        }
    }
    detail::assign_replace_sources(plan.intervals, n_cols, rng);

    Rng frng(Rng::derive(rng_seed, 2));
    std::vector<MaskInterval> freq_ivs;
    int r = 0;
    while (r < n_rows) {
        if (frng.uniform() < params.p_mask) {
            MaskInterval iv;
            iv.axis = MaskAxis::frequency;
            iv.start = r;
            iv.extents = {std::min(adaptive_freq_width(foi_hz[r]), n_rows - r)};
            iv.action = detail::sample_action(params, frng);
            r += iv.extents[0];
            freq_ivs.push_back(std::move(iv));
        } else {
            ++r;
        }
    }
    detail::assign_replace_sources(freq_ivs, n_rows, frng);
    plan.intervals.insert(plan.intervals.end(), freq_ivs.begin(), freq_ivs.end());
    for (const auto& iv : plan.intervals) detail::add_footprint(plan, iv, n_rows, n_cols);
    return plan;
}

struct MaskedSpectrogram {
    Eigen::MatrixXd values;                    // the augmented view
    std::set<std::pair<int, int>> masked_set;  // positions the loss covers
};

// Applies zero / replace / keep actions; the masked set is returned
// unchanged and includes keep intervals.
inline MaskedSpectrogram apply_masks(const Eigen::MatrixXd& spec, const MaskPlan& plan) {
    const int n = static_cast<int>(spec.rows()), m = static_cast<int>(spec.cols());
    MaskedSpectrogram out{spec, plan.masked_set};
    for (const auto& iv : plan.intervals) {
        const int len = iv.axis == MaskAxis::time ? m : n;
        auto outer = iv.outer_span(len);
        require(outer.first >= 0 && outer.second <= len, "apply_masks: interval out of bounds");
        if (iv.action == MaskAction::keep) continue;
        if (iv.action == MaskAction::replace) {
            int width = outer.second - outer.first;
            std::pair<int, int> src{iv.replace_source, iv.replace_source + width};
            if (detail::spans_overlap(src, outer))
                throw input_error("apply_masks: replace source overlaps target");
            // Copy an equal-footprint slice, offset from the target footprint.
            int shift = iv.replace_source - outer.first;
            if (iv.axis == MaskAxis::time) {
                for (int r = 0; r < n; ++r) {
                    auto [lo, hi] = iv.span_at(r, m);
                    for (int c = lo; c < hi; ++c) out.values(r, c) = spec(r, c + shift);
                }
            } else {
                auto [lo, hi] = iv.span_at(0, n);
                for (int r = lo; r < hi; ++r) out.values.row(r) = spec.row(r + shift);
            }
        } else {  // zero
            if (iv.axis == MaskAxis::time) {
                for (int r = 0; r < n; ++r) {
                    auto [lo, hi] = iv.span_at(r, m);
                    for (int c = lo; c < hi; ++c) out.values(r, c) = 0.0;
                }
            } else {
                auto [lo, hi] = iv.span_at(0, n);
                for (int r = lo; r < hi; ++r) out.values.row(r).setZero();
            }
        }
    }
    return out;
}

}  // namespace ff
