#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "ff/rng.hpp"
#include "ff/signal.hpp"

using namespace ff;

namespace {

RawTrace make_tone(double freq, double amp, double rate, double dur_s, double phase = 0.0) {
    RawTrace t;
    t.sample_rate_hz = rate;
    size_t n = static_cast<size_t>(dur_s * rate);
    t.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        t.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate + phase);
    return t;
}

// Amplitude of the component at `freq` over samples [lo, hi), via a direct
// discrete Fourier sum. The window must span an integer number of cycles.
double tone_amplitude(const std::vector<double>& x, double freq, double rate, size_t lo,
                      size_t hi) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t i = lo; i < hi; ++i) {
        double ang = -2.0 * M_PI * freq * i / rate;
        acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(hi - lo);
}

double rms(const std::vector<double>& x, size_t lo, size_t hi) {
    double acc = 0.0;
    for (size_t i = lo; i < hi; ++i) acc += x[i] * x[i];
    return std::sqrt(acc / static_cast<double>(hi - lo));
}

}  // namespace

TEST_CASE("highpass removes DC") {
    RawTrace t;
    t.sample_rate_hz = 2048.0;
    t.samples.assign(100 * 2048, 5.0);
    RawTrace out = highpass_filter(t, 0.1);
    double worst = 0.0;
    // Skip 40 s per side; the slowest 0.1 Hz pole decays like exp(-0.24 t).
    for (size_t i = 40 * 2048; i + 40 * 2048 < out.size(); ++i)
        worst = std::max(worst, std::abs(out.samples[i]));
    CHECK(worst <= 1e-3 * 5.0);
}

TEST_CASE("highpass passband gain near unity at 10 Hz") {
    RawTrace t = make_tone(10.0, 1.0, 2048.0, 10.0);
    RawTrace out = highpass_filter(t, 0.1);
    size_t lo = 2 * 2048, hi = 8 * 2048;  // 60 full cycles
    double gain = tone_amplitude(out.samples, 10.0, 2048.0, lo, hi) /
                  tone_amplitude(t.samples, 10.0, 2048.0, lo, hi);
    CHECK(gain >= 0.99);
    CHECK(gain <= 1.01);
}

TEST_CASE("highpass stopband at 0.01 Hz") {
    RawTrace t = make_tone(0.01, 1.0, 64.0, 400.0);
    RawTrace out = highpass_filter(t, 0.1);
    size_t lo = 100 * 64, hi = 300 * 64;  // 2 full cycles
    double gain = tone_amplitude(out.samples, 0.01, 64.0, lo, hi) /
                  tone_amplitude(t.samples, 0.01, 64.0, lo, hi);
    CHECK(gain <= 0.5);
}

TEST_CASE("highpass rejects non-finite input and bad cutoff") {
    RawTrace t = make_tone(10.0, 1.0, 2048.0, 1.0);
    t.samples[5] = std::nan("");
    CHECK_THROWS_AS(highpass_filter(t), input_error);
    RawTrace ok = make_tone(10.0, 1.0, 2048.0, 1.0);
    CHECK_THROWS_AS(highpass_filter(ok, 2000.0), parameter_error);
}

TEST_CASE("line noise removal on zero trace") {
    RawTrace t;
    t.sample_rate_hz = 2048.0;
    t.samples.assign(4096, 0.0);
    RawTrace out = remove_line_noise(t);
    for (double s : out.samples) CHECK(s == 0.0);
}

TEST_CASE("line noise removal kills 60 Hz, keeps 10 Hz") {
    RawTrace hum = make_tone(60.0, 1.0, 2048.0, 10.0);
    RawTrace out = remove_line_noise(hum);
    size_t lo = 2 * 2048, hi = 8 * 2048;
    CHECK(rms(out.samples, lo, hi) <= 0.01 * rms(hum.samples, lo, hi));

    RawTrace tone = make_tone(10.0, 1.0, 2048.0, 10.0);
    RawTrace kept = remove_line_noise(tone);
    double ratio = tone_amplitude(kept.samples, 10.0, 2048.0, lo, hi) /
                   tone_amplitude(tone.samples, 10.0, 2048.0, lo, hi);
    CHECK(std::abs(ratio - 1.0) <= 0.01);
}

TEST_CASE("line noise base above Nyquist rejected") {
    RawTrace t = make_tone(10.0, 1.0, 2048.0, 1.0);
    CHECK_THROWS_AS(remove_line_noise(t, 1024.0), parameter_error);
}

namespace {

Recording three_constant_traces() {
    Recording rec;
    rec.layout.shafts = {{"a1", "a2", "a3"}};
    for (int i = 0; i < 3; ++i) {
        RawTrace t;
        t.sample_rate_hz = 2048.0;
        t.samples.assign(100, static_cast<double>(i + 1));
        rec.traces["a" + std::to_string(i + 1)] = t;
    }
    return rec;
}

}  // namespace

TEST_CASE("laplacian re-reference on constants") {
    Recording rec = three_constant_traces();
    Recording out = laplacian_rereference(rec);
    REQUIRE(out.traces.size() == 1);
    for (double s : out.traces.at("a2").samples) CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("laplacian with identical traces yields zeros") {
    Recording rec;
    rec.layout.shafts = {{"e1", "e2", "e3"}};
    RawTrace t = make_tone(7.0, 2.0, 2048.0, 0.1);
    rec.traces = {{"e1", t}, {"e2", t}, {"e3", t}};
    Recording out = laplacian_rereference(rec);
    for (double s : out.traces.at("e2").samples) CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("laplacian drops short shafts and matches count formula") {
    Recording rec;
    rec.layout.shafts = {{"s1", "s2"}, {"t1", "t2", "t3", "t4", "t5"}};
    RawTrace t = make_tone(5.0, 1.0, 2048.0, 0.05);
    for (const auto& shaft : rec.layout.shafts)
        for (const auto& id : shaft) rec.traces[id] = t;
    Recording out = laplacian_rereference(rec);
    // sum over shafts of max(0, len - 2): 0 + 3
    CHECK(out.traces.size() == 3);
    CHECK(out.traces.count("s1") == 0);
    CHECK(out.traces.count("s2") == 0);
}

TEST_CASE("segmentation arithmetic") {
    RawTrace t25 = make_tone(1.0, 1.0, 2048.0, 25.0);
    CHECK(segment_recording(t25).size() == 5);

    RawTrace t49 = make_tone(1.0, 1.0, 2048.0, 4.9);
    CHECK(segment_recording(t49).empty());

    RawTrace t5;
    t5.sample_rate_hz = 2048.0;
    t5.samples.assign(10240, 1.0);
    auto segs = segment_recording(t5);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].size() == 10240);
}

TEST_CASE("segment starts are exact sample indices") {
    RawTrace t;
    t.sample_rate_hz = 100.0;
    t.samples.resize(1000);
    for (size_t i = 0; i < t.samples.size(); ++i) t.samples[i] = static_cast<double>(i);
    auto segs = segment_recording(t, 1.0, 0.7);
    REQUIRE(!segs.empty());
    for (size_t k = 0; k < segs.size(); ++k) {
        size_t expect = static_cast<size_t>(std::floor(k * 0.7 * 100.0));
        CHECK(segs[k].samples[0] == doctest::Approx(static_cast<double>(expect)));
    }
}

namespace {

Spectrogram tiny_spec(const Eigen::MatrixXd& v) {
    Spectrogram s;
    s.values = v;
    s.freqs_hz.resize(static_cast<size_t>(v.rows()));
    for (long i = 0; i < v.rows(); ++i) s.freqs_hz[static_cast<size_t>(i)] = 1.0 + i;
    s.frame_hop_s = 0.01;
    return s;
}

}  // namespace

TEST_CASE("zscore handles constant and alternating rows") {
    Eigen::MatrixXd v(2, 4);
    v.row(0).setConstant(7.3);
    v.row(1) << 1.0, -1.0, 1.0, -1.0;
    auto [z, st] = zscore(tiny_spec(v));
    for (int c = 0; c < 4; ++c) {
        CHECK(z.values(0, c) == doctest::Approx(0.0));
        CHECK(std::abs(z.values(1, c) - v(1, c)) <= 1e-12);
    }
    CHECK(st.mean[1] == doctest::Approx(0.0));
    CHECK(st.stddev[1] == doctest::Approx(1.0));
}

TEST_CASE("zscore rows have near-zero mean and is idempotent") {
    Rng rng(42);
    Eigen::MatrixXd v(6, 50);
    for (long r = 0; r < v.rows(); ++r)
        for (long c = 0; c < v.cols(); ++c) v(r, c) = rng.normal() * (r + 1) + r;
    auto [z1, st1] = zscore(tiny_spec(v));
    for (long r = 0; r < z1.values.rows(); ++r) CHECK(std::abs(z1.values.row(r).mean()) <= 1e-10);
    auto [z2, st2] = zscore(z1);
    CHECK((z2.values - z1.values).cwiseAbs().maxCoeff() <= 1e-9);
}
