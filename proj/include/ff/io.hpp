#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ff/common.hpp"
#include "ff/decode.hpp"
#include "ff/model.hpp"
#include "ff/signal.hpp"
#include "ff/spectrogram.hpp"
#include "ff/synth.hpp"

namespace ff::io {

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void get_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw io_error("unexpected end of file");
}

template <typename T>
void put(std::ostream& os, T v) {
    put_bytes(os, &v, sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    get_bytes(is, &v, sizeof(T));
    return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
    require(s.size() <= 0xffff, "io: string too long");
    put<uint16_t>(os, static_cast<uint16_t>(s.size()));
    put_bytes(os, s.data(), s.size());
}

inline std::string get_string(std::istream& is) {
    uint16_t n = get<uint16_t>(is);
    std::string s(n, '\0');
    if (n) get_bytes(is, s.data(), n);
    return s;
}

inline void check_magic(std::istream& is, const char* magic) {
    char buf[4];
    get_bytes(is, buf, 4);
    if (std::string(buf, 4) != magic) throw io_error(std::string("bad magic, expected ") + magic);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for writing: " + path.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open for reading: " + path.string());
    return is;
}

}  // namespace detail

inline constexpr uint32_t format_version = 1;

// Raw recording: magic FFRW, version, sample rate, per-electrode f32 traces.
inline void write_recording(const std::filesystem::path& path, const Recording& rec) {
    rec.validate();
    auto os = detail::open_out(path);
    detail::put_bytes(os, "FFRW", 4);
    detail::put<uint32_t>(os, format_version);
    double rate = rec.traces.empty() ? 0.0 : rec.traces.begin()->second.sample_rate_hz;
    detail::put<double>(os, rate);
    detail::put<uint32_t>(os, static_cast<uint32_t>(rec.traces.size()));
    for (const auto& [id, tr] : rec.traces) {
        detail::put_string(os, id);
        detail::put<uint64_t>(os, tr.samples.size());
        for (double s : tr.samples) detail::put<float>(os, static_cast<float>(s));
    }
    if (!os) throw io_error("write failed: " + path.string());
}

inline Recording read_recording(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    detail::check_magic(is, "FFRW");
    uint32_t ver = detail::get<uint32_t>(is);
    if (ver != format_version) throw io_error("unsupported recording version");
    double rate = detail::get<double>(is);
    uint32_t count = detail::get<uint32_t>(is);
    Recording rec;
    for (uint32_t i = 0; i < count; ++i) {
        std::string id = detail::get_string(is);
        uint64_t n = detail::get<uint64_t>(is);
        RawTrace tr;
        tr.sample_rate_hz = rate;
        tr.samples.resize(n);
        for (uint64_t k = 0; k < n; ++k) tr.samples[k] = detail::get<float>(is);
        rec.traces[id] = std::move(tr);
    }
    return rec;
}

// Probe layout: one shaft per line, comma-separated ids.
inline void write_layout(const std::filesystem::path& path, const ProbeLayout& layout) {
    auto os = detail::open_out(path);
    for (const auto& shaft : layout.shafts) {
        for (size_t i = 0; i < shaft.size(); ++i) os << (i ? "," : "") << shaft[i];
        os << "\n";
    }
}

inline ProbeLayout read_layout(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    ProbeLayout layout;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> shaft;
        std::stringstream ss(line);
        std::string id;
        while (std::getline(ss, id, ',')) shaft.push_back(id);
        layout.shafts.push_back(std::move(shaft));
    }
    layout.validate();
    return layout;
}

// Spectrogram: magic FFSG, id, dims, hop, frequencies, f32 row-major values.
inline void write_spectrogram(const std::filesystem::path& path, const Spectrogram& spec) {
    auto os = detail::open_out(path);
    detail::put_bytes(os, "FFSG", 4);
    detail::put<uint32_t>(os, format_version);
    detail::put_string(os, spec.electrode_id);
    detail::put<uint32_t>(os, static_cast<uint32_t>(spec.n_bins()));
    detail::put<uint32_t>(os, static_cast<uint32_t>(spec.n_frames()));
    detail::put<double>(os, spec.frame_hop_s);
    for (double f : spec.freqs_hz) detail::put<double>(os, f);
    for (int r = 0; r < spec.n_bins(); ++r)
        for (int c = 0; c < spec.n_frames(); ++c)
            detail::put<float>(os, static_cast<float>(spec.values(r, c)));
    if (!os) throw io_error("write failed: " + path.string());
}

inline Spectrogram read_spectrogram(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    detail::check_magic(is, "FFSG");
    if (detail::get<uint32_t>(is) != format_version)
        throw io_error("unsupported spectrogram version");
    Spectrogram spec;
    spec.electrode_id = detail::get_string(is);
    uint32_t n = detail::get<uint32_t>(is);
    uint32_t m = detail::get<uint32_t>(is);
    spec.frame_hop_s = detail::get<double>(is);
    spec.freqs_hz.resize(n);
    for (uint32_t i = 0; i < n; ++i) spec.freqs_hz[i] = detail::get<double>(is);
    spec.values.resize(n, m);
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t c = 0; c < m; ++c) spec.values(r, c) = detail::get<float>(is);
    return spec;
}

// Checkpoint: magic FFCK, config text blob, named f32 tensors.
template <typename T>
void write_checkpoint(const std::filesystem::path& path, const std::string& config_text,
                      const ParamMap<T>& tensors) {
    auto os = detail::open_out(path);
    detail::put_bytes(os, "FFCK", 4);
    detail::put<uint32_t>(os, format_version);
    detail::put<uint32_t>(os, static_cast<uint32_t>(config_text.size()));
    detail::put_bytes(os, config_text.data(), config_text.size());
    detail::put<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        detail::put_string(os, name);
        detail::put<uint8_t>(os, 0);  // dtype f32
        detail::put<uint8_t>(os, 2);  // rank
        detail::put<uint64_t>(os, static_cast<uint64_t>(t.rows()));
        detail::put<uint64_t>(os, static_cast<uint64_t>(t.cols()));
        for (long r = 0; r < t.rows(); ++r)
            for (long c = 0; c < t.cols(); ++c)
                detail::put<float>(os, static_cast<float>(t(r, c)));
    }
    if (!os) throw io_error("write failed: " + path.string());
}

template <typename T>
std::pair<std::string, ParamMap<T>> read_checkpoint(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    detail::check_magic(is, "FFCK");
    if (detail::get<uint32_t>(is) != format_version)
        throw io_error("unsupported checkpoint version");
    uint32_t cfg_len = detail::get<uint32_t>(is);
    std::string config(cfg_len, '\0');
    if (cfg_len) detail::get_bytes(is, config.data(), cfg_len);
    uint32_t count = detail::get<uint32_t>(is);
    ParamMap<T> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = detail::get_string(is);
        uint8_t dtype = detail::get<uint8_t>(is);
        uint8_t rank = detail::get<uint8_t>(is);
        if (dtype != 0 || rank != 2) throw io_error("unsupported tensor encoding");
        uint64_t rows = detail::get<uint64_t>(is);
        uint64_t cols = detail::get<uint64_t>(is);
        ad::Mat<T> t(static_cast<long>(rows), static_cast<long>(cols));
        for (uint64_t r = 0; r < rows; ++r)
            for (uint64_t c = 0; c < cols; ++c)
                t(static_cast<long>(r), static_cast<long>(c)) = T(detail::get<float>(is));
        tensors[name] = std::move(t);
    }
    return {std::move(config), std::move(tensors)};
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

inline void write_curve_csv(const std::filesystem::path& path,
                            const std::vector<CurvePoint>& curve) {
    auto os = detail::open_out(path);
    os << "step,train_l1,train_content,train_total,val_total\n";
    for (const auto& p : curve)
        os << p.step << "," << format_double(p.train_l1) << "," << format_double(p.train_content)
           << "," << format_double(p.train_total) << "," << format_double(p.val_total) << "\n";
}

inline void write_eval_csv(const std::filesystem::path& path, const EvalReport& report) {
    auto os = detail::open_out(path);
    os << "task,electrode,model,mode,seed,n_train,auc\n";
    for (const auto& r : report.rows)
        os << r.task << "," << r.electrode << "," << r.model << "," << r.mode << "," << r.seed
           << "," << r.n_train << "," << format_double(r.auc) << "\n";
}

inline EvalReport read_eval_csv(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    EvalReport report;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        EvalRow r;
        std::string seed, n_train, auc;
        std::getline(ss, r.task, ',');
        std::getline(ss, r.electrode, ',');
        std::getline(ss, r.model, ',');
        std::getline(ss, r.mode, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, n_train, ',');
        std::getline(ss, auc, ',');
        r.seed = std::stoull(seed);
        r.n_train = std::stol(n_train);
        r.auc = std::stod(auc);
        report.rows.push_back(std::move(r));
    }
    return report;
}

inline void write_manifest_csv(const std::filesystem::path& path, const TaskDataset& ds,
                               const std::vector<std::string>& electrodes) {
    auto os = detail::open_out(path);
    os << "electrode,center_time_s,label,split\n";
    for (const auto& el : electrodes)
        for (const auto& e : ds.examples)
            os << el << "," << format_double(e.center_time_s) << "," << e.label << ","
               << split_name(e.split) << "\n";
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unused") return Split::unused;
    throw io_error("manifest: unknown split tag " + s);
}

// Reads the manifest back; examples keep their electrode ids, and the list of
// distinct electrodes is returned in first-seen order.
inline std::pair<TaskDataset, std::vector<std::string>> read_manifest_csv(
    const std::filesystem::path& path, const std::string& task_name = "onset") {
    auto is = detail::open_in(path);
    TaskDataset ds;
    ds.task = task_name;
    std::vector<std::string> electrodes;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        LabeledExample e;
        std::string center, label, split;
        std::getline(ss, e.electrode, ',');
        std::getline(ss, center, ',');
        std::getline(ss, label, ',');
        std::getline(ss, split, ',');
        e.center_time_s = std::stod(center);
        e.label = std::stoi(label);
        e.split = parse_split(split);
        if (std::find(electrodes.begin(), electrodes.end(), e.electrode) == electrodes.end())
            electrodes.push_back(e.electrode);
        ds.examples.push_back(std::move(e));
    }
    ds.validate();
    return {std::move(ds), std::move(electrodes)};
}

inline void write_events_jsonl(const std::filesystem::path& path, const StimulusTrack& track) {
    auto os = detail::open_out(path);
    for (double t : track.event_times_s) os << "{\"t\": " << format_double(t) << "}\n";
}

inline std::vector<double> read_events_jsonl(const std::filesystem::path& path) {
    auto is = detail::open_in(path);
    std::vector<double> out;
    std::string line;
    while (std::getline(is, line)) {
        auto colon = line.find(':');
        auto brace = line.rfind('}');
        if (colon == std::string::npos || brace == std::string::npos) continue;
        out.push_back(std::stod(line.substr(colon + 1, brace - colon - 1)));
    }
    return out;
}

inline void write_id_csv(const std::filesystem::path& path,
                         const std::map<std::string, int>& dims,
                         const std::map<std::string, int>& n_segments) {
    auto os = detail::open_out(path);
    os << "electrode,intrinsic_dim,n_segments\n";
    for (const auto& [id, d] : dims) os << id << "," << d << "," << n_segments.at(id) << "\n";
}

// One row per electrode: id followed by its explained-variance ratios.
inline void write_variance_csv(const std::filesystem::path& path,
                               const std::map<std::string, std::vector<double>>& curves) {
    auto os = detail::open_out(path);
    os << "electrode,explained_variance_ratios\n";
    for (const auto& [id, curve] : curves) {
        os << id;
        for (double v : curve) os << "," << format_double(v);
        os << "\n";
    }
}

}  // namespace ff::io
