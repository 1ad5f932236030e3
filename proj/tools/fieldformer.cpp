// fieldformer: synth / transform / pretrain / finetune / evaluate / sweep /
// id / report front-end. Exit codes: 0 success, 1 usage error, 2 runtime
// error. FF_THREADS bounds the worker pool.
#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ff/analysis.hpp"
#include "ff/config.hpp"
#include "ff/decode.hpp"
#include "ff/io.hpp"
#include "ff/model.hpp"
#include "ff/pipeline.hpp"
#include "ff/synth.hpp"

namespace fs = std::filesystem;
using Scalar = float;

namespace {

struct Common {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;
    std::string out;
};

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
    sub->add_option("--config", c.config_path, "run configuration file (key=value lines)");
    sub->add_option("--seed", c.seed, "override run.seed")->each([&c](const std::string&) {
        c.seed_set = true;
    });
    sub->add_flag("--force", c.force, "overwrite existing outputs");
    if (with_out) sub->add_option("--out", c.out, "output directory")->required();
}

ff::RunConfig resolve_config(const Common& c) {
    ff::RunConfig rc =
        c.config_path.empty() ? ff::RunConfig{} : ff::load_config(c.config_path);
    if (c.seed_set) rc.seed = c.seed;
    return rc;
}

void prepare_dir(const fs::path& dir, bool force, const std::vector<std::string>& names) {
    fs::create_directories(dir);
    if (force) return;
    for (const auto& n : names)
        if (fs::exists(dir / n))
            throw ff::state_error("refusing to overwrite " + (dir / n).string() +
                                  " (use --force)");
}

void echo_config(const fs::path& dir, ff::RunConfig& rc) {
    auto os = ff::io::detail::open_out(dir / "config.txt");
    os << rc.echo();
}

ff::Recording load_recording(const std::string& in, const std::string& layout) {
    ff::Recording rec = ff::io::read_recording(in);
    fs::path lp = layout.empty() ? fs::path(in).parent_path() / "layout.txt" : fs::path(layout);
    rec.layout = ff::io::read_layout(lp);
    return rec;
}

std::vector<std::string> interior_electrodes(const ff::ProbeLayout& layout) {
    std::vector<std::string> out;
    for (const auto& shaft : layout.shafts)
        for (size_t p = 1; p + 1 < shaft.size(); ++p) out.push_back(shaft[p]);
    return out;
}

ff::TaskDataset filter_task(const ff::TaskDataset& ds, const std::string& electrode) {
    ff::TaskDataset out;
    out.task = ds.task;
    for (const auto& e : ds.examples)
        if (e.electrode == electrode) out.examples.push_back(e);
    if (out.examples.empty())
        throw ff::input_error("manifest has no examples for electrode " + electrode);
    return out;
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// Chops full-trace spectrograms into fixed-duration blocks, z-scored per
// block, forming the pretraining corpus.
struct Corpus {
    std::vector<ff::ad::Mat<Scalar>> segments;
    std::vector<double> freqs_hz;
    int n_bins = 0;
};

Corpus load_corpus(const fs::path& dir, double segment_s) {
    Corpus corpus;
    auto files = sorted_files(dir, ".ffsg");
    if (files.empty()) throw ff::input_error("no .ffsg files in " + dir.string());
    for (const auto& f : files) {
        ff::Spectrogram spec = ff::io::read_spectrogram(f);
        if (corpus.n_bins == 0) {
            corpus.n_bins = spec.n_bins();
            corpus.freqs_hz = spec.freqs_hz;
        }
        ff::require(spec.n_bins() == corpus.n_bins, "corpus: mixed spectrogram heights");
        long w = static_cast<long>(std::llround(segment_s / spec.frame_hop_s));
        ff::require(w >= 2, "corpus: segment shorter than two frames");
        for (long b = 0; (b + 1) * w <= spec.n_frames(); ++b) {
            ff::Spectrogram blk;
            blk.electrode_id = spec.electrode_id;
            blk.freqs_hz = spec.freqs_hz;
            blk.frame_hop_s = spec.frame_hop_s;
            blk.values = spec.values.middleCols(b * w, w);
            corpus.segments.push_back(ff::zscore(blk).first.values.cast<Scalar>());
        }
    }
    return corpus;
}

struct LoadedCheckpoint {
    ff::RunConfig rc;
    ff::BrainBertParams<Scalar> params;
};

LoadedCheckpoint load_model(const fs::path& path) {
    auto [blob, tensors] = ff::io::read_checkpoint<Scalar>(path);
    LoadedCheckpoint out;
    out.rc = ff::parse_config(blob);
    out.params.cfg = out.rc.model();
    out.params.tensors = std::move(tensors);
    return out;
}

template <typename T>
T parse_number(const std::string& s);
template <>
long parse_number<long>(const std::string& s) {
    return std::stol(s);
}
template <>
uint64_t parse_number<uint64_t>(const std::string& s) {
    return std::stoull(s);
}

template <typename T>
std::vector<T> parse_list(const std::string& csv) {
    std::vector<T> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(parse_number<T>(tok));
    if (out.empty()) throw ff::parameter_error("empty list: " + csv);
    return out;
}

// ---- subcommands ----

int run_synth(const Common& c) {
    ff::RunConfig rc = resolve_config(c);
    auto [rec, track] = ff::generate_recording(rc.synth());
    ff::TaskDataset ds =
        ff::make_task_dataset(rec, track, rc.segment_s, rc.task_guard_s, rc.seed);

    fs::path dir(c.out);
    prepare_dir(dir, c.force,
                {"recording.ffrw", "layout.txt", "events.jsonl", "manifest.csv", "config.txt"});
    ff::io::write_recording(dir / "recording.ffrw", rec);
    ff::io::write_layout(dir / "layout.txt", rec.layout);
    ff::io::write_events_jsonl(dir / "events.jsonl", track);
    ff::io::write_manifest_csv(dir / "manifest.csv", ds, interior_electrodes(rec.layout));
    echo_config(dir, rc);
    std::cout << "synth: " << rec.traces.size() << " electrodes, "
              << track.event_times_s.size() << " events, " << ds.examples.size()
              << " examples -> " << dir.string() << "\n";
    return 0;
}

int run_transform(const Common& c, const std::string& in, const std::string& layout,
                  const std::string& method) {
    ff::RunConfig rc = resolve_config(c);
    if (!method.empty()) rc.transform = method;
    ff::PipelineConfig pc = rc.pipeline();

    ff::Recording rec = load_recording(in, layout);
    ff::Recording pre = ff::preprocess_recording(rec, pc);

    fs::path dir(c.out);
    std::vector<std::string> names{"config.txt"};
    for (const auto& [id, tr] : pre.traces) names.push_back(id + ".ffsg");
    prepare_dir(dir, c.force, names);

    std::vector<std::string> ids;
    for (const auto& [id, tr] : pre.traces) ids.push_back(id);
    std::vector<ff::Spectrogram> specs(ids.size());
    ff::parallel_for(static_cast<int>(ids.size()), [&](int i) {
        specs[static_cast<size_t>(i)] =
            ff::transform_trace(pre.traces.at(ids[static_cast<size_t>(i)]), pc);
        specs[static_cast<size_t>(i)].electrode_id = ids[static_cast<size_t>(i)];
    });
    for (size_t i = 0; i < ids.size(); ++i)
        ff::io::write_spectrogram(dir / (ids[i] + ".ffsg"), specs[i]);
    echo_config(dir, rc);
    std::cout << "transform: " << ids.size() << " electrodes (" << rc.transform << ") -> "
              << dir.string() << "\n";
    return 0;
}

int run_pretrain(const Common& c, const std::string& data) {
    ff::RunConfig rc = resolve_config(c);
    Corpus corpus = load_corpus(data, rc.segment_s);

    ff::BrainBertConfig mc = rc.model();
    ff::require(mc.n_bins == corpus.n_bins,
                "pretrain: config bin count does not match the spectrogram files");
    ff::require(static_cast<long>(corpus.segments.front().cols()) <= mc.max_frames,
                "pretrain: segment longer than model.max_frames");

    auto result = ff::pretrain<Scalar>(corpus.segments, corpus.freqs_hz, mc, rc.pretrain());
    if (result.diverged) throw ff::state_error("pretrain: loss diverged");

    fs::path dir(c.out);
    prepare_dir(dir, c.force, {"model.ffck", "curve.csv", "config.txt"});
    std::string blob = rc.echo() + "# best_val=" + ff::io::format_double(result.best_val) +
                       "\n# best_step=" + std::to_string(result.best_step) + "\n";
    ff::io::write_checkpoint(dir / "model.ffck", blob, result.best.tensors);
    ff::io::write_curve_csv(dir / "curve.csv", result.curve);
    echo_config(dir, rc);
    std::cout << "pretrain: " << corpus.segments.size() << " segments, best val "
              << result.best_val << " at step " << result.best_step << " -> " << dir.string()
              << "\n";
    return 0;
}

int run_finetune(const Common& c, const std::string& in, const std::string& layout,
                 const std::string& manifest, const std::string& checkpoint,
                 std::vector<std::string> electrodes, const std::string& mode_str) {
    ff::RunConfig rc = resolve_config(c);
    LoadedCheckpoint ck = load_model(checkpoint);
    ff::PipelineConfig pc = ck.rc.pipeline();  // match the pretraining transform
    ff::DecodeConfig dc = rc.decode();

    ff::DecodeMode mode;
    if (mode_str == "frozen")
        mode = ff::DecodeMode::frozen;
    else if (mode_str == "finetune")
        mode = ff::DecodeMode::finetune;
    else
        throw ff::parameter_error("mode must be frozen or finetune, got " + mode_str);

    ff::Recording rec = load_recording(in, layout);
    auto [ds, manifest_electrodes] = ff::io::read_manifest_csv(manifest);
    if (electrodes.empty()) electrodes = manifest_electrodes;

    ff::Recording pre = ff::preprocess_recording(rec, pc);

    fs::path dir(c.out);
    std::vector<std::string> names{"eval.csv", "config.txt"};
    for (const auto& el : electrodes) names.push_back("decoder_" + el + ".ffck");
    prepare_dir(dir, c.force, names);

    ff::EvalReport report;
    for (const auto& el : electrodes) {
        ff::PreparedTask task = ff::prepare_task(pre, filter_task(ds, el), el, pc);
        auto trained = ff::train_encoder_decoder<Scalar>(task, ck.params, mode, dc);
        long n_train = static_cast<long>(task.split_indices(ff::Split::train).size());
        report.rows.push_back({task.task, el, "pretrained", ff::mode_name(mode), rc.seed,
                               n_train, trained.test_auc});

        ff::ParamMap<Scalar> tensors = trained.head.tensors;
        if (mode == ff::DecodeMode::finetune)
            for (const auto& [name, t] : trained.encoder.tensors) tensors["enc:" + name] = t;
        ff::io::write_checkpoint(dir / ("decoder_" + el + ".ffck"), rc.echo(), tensors);
        std::cout << "finetune: " << el << " " << mode_str << " auc "
                  << trained.test_auc << "\n";
    }
    ff::io::write_eval_csv(dir / "eval.csv", report);
    echo_config(dir, rc);
    return 0;
}

int run_evaluate(const Common& c, const std::string& in, const std::string& layout,
                 const std::string& manifest, std::vector<std::string> electrodes,
                 std::vector<std::string> models) {
    ff::RunConfig rc = resolve_config(c);
    ff::PipelineConfig pc = rc.pipeline();
    ff::DecodeConfig dc = rc.decode();

    if (models.empty())
        models = {"lin_time_5s", "lin_time_250ms", "deep_5ff",
                  pc.transform == ff::TransformKind::stft ? "lin_stft" : "lin_superlet"};
    std::vector<ff::BaselineKind> kinds;
    for (const auto& m : models) kinds.push_back(ff::parse_baseline(m));

    ff::Recording rec = load_recording(in, layout);
    auto [ds, manifest_electrodes] = ff::io::read_manifest_csv(manifest);
    if (electrodes.empty()) electrodes = manifest_electrodes;

    ff::Recording pre = ff::preprocess_recording(rec, pc);

    fs::path dir(c.out);
    prepare_dir(dir, c.force, {"eval.csv", "config.txt"});

    ff::EvalReport report;
    for (const auto& el : electrodes) {
        ff::PreparedTask task = ff::prepare_task(pre, filter_task(ds, el), el, pc);
        long n_train = static_cast<long>(task.split_indices(ff::Split::train).size());
        for (size_t k = 0; k < kinds.size(); ++k) {
            auto trained = ff::train_baseline<Scalar>(task, kinds[k], dc);
            report.rows.push_back({task.task, el, models[k], "baseline", rc.seed, n_train,
                                   trained.test_auc});
            std::cout << "evaluate: " << el << " " << models[k] << " auc "
                      << trained.test_auc << "\n";
        }
    }
    ff::io::write_eval_csv(dir / "eval.csv", report);
    echo_config(dir, rc);
    return 0;
}

int run_sweep(const Common& c, const std::string& in, const std::string& layout,
              const std::string& manifest, const std::string& electrode,
              const std::string& model, const std::string& checkpoint,
              const std::string& sizes_csv, const std::string& seeds_csv) {
    ff::RunConfig rc = resolve_config(c);
    std::vector<long> sizes = parse_list<long>(sizes_csv);
    std::vector<uint64_t> seeds = parse_list<uint64_t>(seeds_csv);

    const bool pretrained = model == "pretrained";
    if (pretrained && checkpoint.empty())
        throw ff::parameter_error("sweep: --checkpoint required for model=pretrained");

    LoadedCheckpoint ck;
    if (pretrained) ck = load_model(checkpoint);
    ff::PipelineConfig pc = pretrained ? ck.rc.pipeline() : rc.pipeline();
    ff::DecodeConfig dc = rc.decode();

    ff::Recording rec = load_recording(in, layout);
    auto [ds, manifest_electrodes] = ff::io::read_manifest_csv(manifest);
    ff::Recording pre = ff::preprocess_recording(rec, pc);
    ff::PreparedTask task = ff::prepare_task(pre, filter_task(ds, electrode), electrode, pc);

    auto train_fn = [&](const ff::PreparedTask& t, uint64_t seed) {
        ff::DecodeConfig run_dc = dc;
        run_dc.seed = seed;
        if (pretrained)
            return ff::train_encoder_decoder<Scalar>(t, ck.params, ff::DecodeMode::finetune,
                                                     run_dc)
                .test_auc;
        return ff::train_baseline<Scalar>(t, ff::parse_baseline(model), run_dc).test_auc;
    };
    auto points = ff::efficiency_sweep(task, sizes, seeds, train_fn);

    fs::path dir(c.out);
    prepare_dir(dir, c.force, {"sweep.csv", "config.txt"});
    auto os = ff::io::detail::open_out(dir / "sweep.csv");
    os << "task,electrode,model,size,seed,auc\n";
    for (const auto& p : points)
        os << task.task << "," << electrode << "," << model << "," << p.size << "," << p.seed
           << "," << ff::io::format_double(p.auc) << "\n";
    echo_config(dir, rc);
    std::cout << "sweep: " << points.size() << " points -> " << dir.string() << "\n";
    return 0;
}

int run_id(const Common& c, const std::string& in, const std::string& layout,
           const std::string& checkpoint) {
    ff::RunConfig rc = resolve_config(c);
    LoadedCheckpoint ck = load_model(checkpoint);
    ff::PipelineConfig pc = ck.rc.pipeline();

    ff::Recording rec = load_recording(in, layout);
    ff::IdReport report = ff::intrinsic_dimension_report(rec, ck.params, pc,
                                                         rc.analysis_components,
                                                         rc.analysis_beta);

    fs::path dir(c.out);
    prepare_dir(dir, c.force, {"id.csv", "variance.csv", "config.txt"});
    ff::io::write_id_csv(dir / "id.csv", report.intrinsic_dim, report.n_segments);
    ff::io::write_variance_csv(dir / "variance.csv", report.explained_variance);
    echo_config(dir, rc);
    for (const auto& [id, d] : report.intrinsic_dim)
        std::cout << "id: " << id << " " << d << "\n";
    return 0;
}

struct Stat {
    long n = 0;
    double sum = 0.0, sumsq = 0.0;
    void add(double v) {
        ++n;
        sum += v;
        sumsq += v * v;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double sd() const {
        if (n < 2) return 0.0;
        double m = mean();
        return std::sqrt(std::max(0.0, (sumsq - n * m * m) / static_cast<double>(n - 1)));
    }
};

int run_report(const Common& c, const std::string& run_dir) {
    std::vector<fs::path> eval_files, sweep_files;
    for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().filename() == "eval.csv") eval_files.push_back(entry.path());
        if (entry.path().filename() == "sweep.csv") sweep_files.push_back(entry.path());
    }
    std::sort(eval_files.begin(), eval_files.end());
    std::sort(sweep_files.begin(), sweep_files.end());
    if (eval_files.empty() && sweep_files.empty())
        std::cerr << "report: warning: no eval.csv or sweep.csv under " << run_dir << "\n";

    // per-(task, model, mode, n_train) aggregation over seeds
    std::map<std::tuple<std::string, std::string, std::string, long>, Stat> summary;
    for (const auto& f : eval_files)
        for (const auto& r : ff::io::read_eval_csv(f).rows)
            summary[{r.task, r.model, r.mode, r.n_train}].add(r.auc);

    std::map<std::tuple<std::string, std::string, long>, Stat> efficiency;
    for (const auto& f : sweep_files) {
        auto is = ff::io::detail::open_in(f);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string task, electrode, model, size, seed, auc;
            std::getline(ss, task, ',');
            std::getline(ss, electrode, ',');
            std::getline(ss, model, ',');
            std::getline(ss, size, ',');
            std::getline(ss, seed, ',');
            std::getline(ss, auc, ',');
            efficiency[{task, model, std::stol(size)}].add(std::stod(auc));
        }
    }

    fs::path dir(c.out);
    prepare_dir(dir, c.force, {"summary.csv", "efficiency.csv"});
    {
        auto os = ff::io::detail::open_out(dir / "summary.csv");
        os << "task,model,mode,n_train,n,mean_auc,sd_auc\n";
        for (const auto& [key, st] : summary)
            os << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
               << std::get<3>(key) << "," << st.n << "," << ff::io::format_double(st.mean())
               << "," << ff::io::format_double(st.sd()) << "\n";
    }
    {
        auto os = ff::io::detail::open_out(dir / "efficiency.csv");
        os << "task,model,size,n,mean_auc,sd_auc\n";
        for (const auto& [key, st] : efficiency)
            os << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
               << st.n << "," << ff::io::format_double(st.mean()) << ","
               << ff::io::format_double(st.sd()) << "\n";
    }
    std::cout << "report: " << summary.size() << " summary rows, " << efficiency.size()
              << " efficiency rows -> " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fieldformer: spectrogram pretraining and decoding toolkit"};
    app.require_subcommand(1);

    Common c_synth, c_transform, c_pretrain, c_finetune, c_evaluate, c_sweep, c_id, c_report;
    std::string in, layout, method, data, manifest, checkpoint, mode = "finetune";
    std::string electrode, model = "deep_5ff", sizes = "150", seeds = "0";
    std::string run_dir;
    std::vector<std::string> electrodes, models;

    auto* synth = app.add_subcommand("synth", "generate a synthetic recording and task");
    add_common(synth, c_synth);

    auto* transform = app.add_subcommand("transform", "preprocess and compute spectrograms");
    add_common(transform, c_transform);
    transform->add_option("--in", in, "input recording (.ffrw)")->required();
    transform->add_option("--layout", layout, "probe layout file (default: sibling layout.txt)");
    transform->add_option("--method", method, "stft | superlet (default: from config)");

    auto* pretrain = app.add_subcommand("pretrain", "masked-spectrogram pretraining");
    add_common(pretrain, c_pretrain);
    pretrain->add_option("--data", data, "directory of .ffsg spectrograms")->required();

    auto* finetune = app.add_subcommand("finetune", "frozen or fine-tuned decoding");
    add_common(finetune, c_finetune);
    finetune->add_option("--in", in, "input recording (.ffrw)")->required();
    finetune->add_option("--layout", layout, "probe layout file");
    finetune->add_option("--manifest", manifest, "task manifest CSV")->required();
    finetune->add_option("--checkpoint", checkpoint, "pretrained model (.ffck)")->required();
    finetune->add_option("--electrode", electrodes, "electrode id (repeatable; default: all)");
    finetune->add_option("--mode", mode, "frozen | finetune");

    auto* evaluate = app.add_subcommand("evaluate", "reference baseline decoders");
    add_common(evaluate, c_evaluate);
    evaluate->add_option("--in", in, "input recording (.ffrw)")->required();
    evaluate->add_option("--layout", layout, "probe layout file");
    evaluate->add_option("--manifest", manifest, "task manifest CSV")->required();
    evaluate->add_option("--electrode", electrodes, "electrode id (repeatable; default: all)");
    evaluate->add_option("--model", models, "baseline kind (repeatable; default: standard set)");

    auto* sweep = app.add_subcommand("sweep", "data-efficiency sweep");
    add_common(sweep, c_sweep);
    sweep->add_option("--in", in, "input recording (.ffrw)")->required();
    sweep->add_option("--layout", layout, "probe layout file");
    sweep->add_option("--manifest", manifest, "task manifest CSV")->required();
    sweep->add_option("--electrode", electrode, "electrode id")->required();
    sweep->add_option("--model", model, "baseline kind or 'pretrained'");
    sweep->add_option("--checkpoint", checkpoint, "pretrained model (.ffck)");
    sweep->add_option("--sizes", sizes, "comma-separated training-set sizes");
    sweep->add_option("--seeds", seeds, "comma-separated seeds");

    auto* id = app.add_subcommand("id", "intrinsic dimension of encoder embeddings");
    add_common(id, c_id);
    id->add_option("--in", in, "input recording (.ffrw)")->required();
    id->add_option("--layout", layout, "probe layout file");
    id->add_option("--checkpoint", checkpoint, "pretrained model (.ffck)")->required();

    auto* report = app.add_subcommand("report", "merge evaluation CSVs into summary tables");
    add_common(report, c_report);
    report->add_option("--run", run_dir, "run directory to scan")->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return run_synth(c_synth);
        if (transform->parsed()) return run_transform(c_transform, in, layout, method);
        if (pretrain->parsed()) return run_pretrain(c_pretrain, data);
        if (finetune->parsed())
            return run_finetune(c_finetune, in, layout, manifest, checkpoint, electrodes, mode);
        if (evaluate->parsed())
            return run_evaluate(c_evaluate, in, layout, manifest, electrodes, models);
        if (sweep->parsed())
            return run_sweep(c_sweep, in, layout, manifest, electrode, model, checkpoint, sizes,
                             seeds);
        if (id->parsed()) return run_id(c_id, in, layout, checkpoint);
        if (report->parsed()) return run_report(c_report, run_dir);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ff::parameter_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
