// SPDX-License-Identifier: Apache-2.0
// upright: command-line front end for LUT generation, remapping, dataset synthesis,
// training, evaluation and benchmarks.
//
// Exit codes: 0 success, 2 usage error, 3 data/format error, 4 non-finite loss.

#include "upright/bench.hpp"
#include "upright/bundle.hpp"
#include "upright/config.hpp"
#include "upright/dataset.hpp"
#include "upright/metrics.hpp"
#include "upright/pipeline.hpp"
#include "upright/remap.hpp"
#include "upright/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace upright;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

EquirectGrid parse_size(const std::string& s) {
    int h = 0, w = 0;
    char x = 0, extra = 0;
    if (std::sscanf(s.c_str(), "%d%c%d%c", &h, &x, &w, &extra) != 3 || (x != 'x' && x != 'X'))
        throw UsageError("size must look like HxW, got '" + s + "'");
    return EquirectGrid(h, w);
}

AngleLattice parse_range(const std::string& s, double step) {
    double lo = 0, hi = 0;
    char colon = 0, extra = 0;
    if (std::sscanf(s.c_str(), "%lf%c%lf%c", &lo, &colon, &hi, &extra) != 3 || colon != ':')
        throw UsageError("range must look like MIN:MAX, got '" + s + "'");
    AngleLattice l{lo, hi, step};
    l.count();  // validates
    return l;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<DatasetRecord> pick_split(DatasetSplits& d, const std::string& split) {
    if (split == "train") return std::move(d.train);
    if (split == "val") return std::move(d.val);
    if (split == "test") return std::move(d.test);
    if (split == "all") {
        std::vector<DatasetRecord> all;
        for (auto* v : {&d.train, &d.val, &d.test})
            for (auto& r : *v) all.push_back(std::move(r));
        return all;
    }
    throw UsageError("unknown split '" + split + "'");
}

void require_grid(const std::vector<DatasetRecord>& records, const ModelPreset& p) {
    for (const auto& r : records) {
        if (r.nonupright.grid() != p.image_grid || r.truth_lut.grid() != p.image_grid) {
            throw DataError("record " + std::to_string(r.id) + " is " + std::to_string(r.nonupright.height()) + "x" +
                            std::to_string(r.nonupright.width()) + ", preset '" + p.name + "' expects " +
                            std::to_string(p.image_grid.height()) + "x" + std::to_string(p.image_grid.width()));
        }
    }
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

// ---- lut ------------------------------------------------------------------

struct LutGenArgs {
    double pitch = 0, roll = 0;
    std::string size = "256x512", dir = "inv", out;
};

int run_lut_gen(const LutGenArgs& a) {
    const Lut lut = generate_lut(TiltAngles(a.pitch, a.roll), parse_size(a.size), parse_lut_direction(a.dir));
    save_lut(lut, a.out);
    std::cout << "wrote " << a.out << " (" << to_string(lut.direction()) << ", " << lut.height() << "x" << lut.width()
              << ", " << fs::file_size(a.out) << " bytes)\n";
    return kOk;
}

struct LutGridArgs {
    std::string range = "-90:90", size = "256x512", dir = "inv", out, ckpt;
    double step = 1;
};

int run_lut_grid(const LutGridArgs& a) {
    const AngleLattice lattice = parse_range(a.range, a.step);
    const EquirectGrid grid = parse_size(a.size);
    if (!a.out.empty()) {
        // Streamed one entry at a time: the full grid does not fit in memory at paper-preset size.
        const LutDirection d = parse_lut_direction(a.dir);
        fs::create_directories(a.out);
        const int n = lattice.count();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const TiltAngles t(lattice.at(i), lattice.at(j));
                char name[64];
                std::snprintf(name, sizeof name, "lut_p%+04d_r%+04d.ulut", static_cast<int>(std::lround(t.pitch())),
                              static_cast<int>(std::lround(t.roll())));
                if (lattice.step != std::floor(lattice.step))
                    std::snprintf(name, sizeof name, "lut_i%04d_j%04d.ulut", i, j);
                save_lut(generate_lut(t, grid, d), fs::path(a.out) / name);
            }
        }
        std::cout << "wrote " << n * n << " files to " << a.out << "\n";
    }
    std::optional<fs::path> ckpt;
    if (!a.ckpt.empty()) ckpt = a.ckpt;
    std::cout << storage_report_text(lattice, grid, ckpt);
    return kOk;
}

struct LutApproxArgs {
    double pitch = 0, roll = 0;
    std::string coarse = "16x32", dir = "inv";
    int factor = 16;
};

int run_lut_approx(const LutApproxArgs& a) {
    const TiltAngles t(a.pitch, a.roll);
    const EquirectGrid coarse = parse_size(a.coarse);
    if (a.factor < 1) throw UsageError("--factor must be positive");
    const EquirectGrid fine(coarse.height() * a.factor, coarse.width() * a.factor);
    const LutDirection d = parse_lut_direction(a.dir);
    const Lut oracle = generate_lut(t, fine, d);
    std::cout << "coarse " << coarse.height() << "x" << coarse.width() << " x" << a.factor << " -> " << fine.height()
              << "x" << fine.width() << " vs analytic\n";
    std::cout << "  mode       mean_abs    max_abs   psnr_x   psnr_y\n";
    for (auto [name, mode] : {std::pair{"bilinear", UpsampleMode::Bilinear}, std::pair{"nearest ", UpsampleMode::Nearest}}) {
        const LutErrorReport r = lut_error(coarse_then_upsample(t, coarse, a.factor, d, mode), oracle);
        std::printf("  %s  %9.6f  %9.6f  %7.2f  %7.2f\n", name, r.mean_abs_error, r.max_abs_error, r.psnr_db[0],
                    r.psnr_db[1]);
    }
    return kOk;
}

// ---- remap / adjust -----------------------------------------------------------

struct RemapArgs {
    std::string in, lut, out;
    bool nearest = false;
    int threads = 1;
};

int run_remap(const RemapArgs& a) {
    const Image img = read_image(a.in);
    const Lut lut = load_lut(a.lut);
    write_image(remap(img, lut, a.nearest ? Interp::Nearest : Interp::Bilinear, a.threads), a.out);
    std::cout << "wrote " << a.out << "\n";
    return kOk;
}

struct AdjustArgs {
    std::string in, out;
    double pitch = 0, roll = 0;
    int threads = 1;
};

int run_adjust(const AdjustArgs& a) {
    const Image img = read_image(a.in);
    const TiltAngles t(a.pitch, a.roll);
    const AdjustResult r = end_to_end_adjust(img, {fixed_orientation(t), analytic_lut(), identity_reconstruction()},
                                             a.threads);
    write_image(r.image, a.out);
    std::cout << "wrote " << a.out << "\n";
    return kOk;
}

// ---- data -----------------------------------------------------------------

struct SynthArgs {
    int n = 100, threads = 1;
    std::uint64_t seed = 1;
    std::string out, range = "-90:90", size = "64x128";
    double step = 1;
    bool previews = false;
};

int run_synth(const SynthArgs& a) {
    DatasetSpec spec;
    spec.n = a.n;
    spec.seed = a.seed;
    spec.angles = parse_range(a.range, a.step);
    spec.grid = spec.feature_grid = parse_size(a.size);
    spec.threads = a.threads;
    const DatasetSplits d = build_dataset(spec);
    write_dataset(d, a.out, a.previews);
    std::cout << "wrote " << a.n << " records to " << a.out << " (train " << d.train.size() << ", val " << d.val.size()
              << ", test " << d.test.size() << ")\n";
    return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string stage, data, config, ckpt;
};

int run_train(const TrainArgs& a) {
    const Stage stage = parse_stage(a.stage);
    const RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
    DatasetSplits splits = read_dataset(a.data);
    const std::vector<DatasetRecord> records = pick_split(splits, "train");
    ModelBundle b(cfg);
    require_grid(records, b.preset);

    const fs::path dir = a.ckpt;
    auto need = [&](Stage s) {
        const fs::path p = checkpoint_path(dir, s);
        if (!fs::exists(p)) throw DataError(to_string(stage) + " stage needs " + p.string() + "; train " + to_string(s) + " first");
        return p;
    };

    TrainSchedule s;
    s.steps = cfg.steps;
    s.batch = cfg.batch;
    s.seed = cfg.seed;
    fs::create_directories(dir);
    std::ofstream(dir / "config.txt") << cfg.to_text();
    std::ofstream log = open_out(dir / ("train_" + to_string(stage) + ".jsonl"));

    TrainResult r;
    switch (stage) {
        case Stage::Orientation:
            s.lr = cfg.lr_orientation;
            r = train_orientation(*b.orientation, records, s, cfg.weights(), &log);
            break;
        case Stage::LutFormer:
            nn::load_checkpoint(b.orientation->params(), need(Stage::Orientation));
            s.lr = cfg.lr_lutformer;
            r = train_lutformer(*b.lutformer, records, s, cfg.weights(), &log, b.orientation.get());
            break;
        case Stage::Reconstruction: {
            nn::load_checkpoint(b.orientation->params(), need(Stage::Orientation));
            const bool analytic = cfg.recon_lut == "analytic";
            if (!analytic) nn::load_checkpoint(b.lutformer->params(), need(Stage::LutFormer));
            s.lr = cfg.lr_generator;
            s.disc_lr = cfg.lr_discriminator;
            r = train_reconstruction(*b.generator, *b.discriminator, *b.orientation, *b.lutformer, records, s,
                                     cfg.weights(), &log, analytic);
            break;
        }
    }
    save_stage(b, stage, dir);
    std::cout << "stage " << to_string(stage) << ": " << r.losses.size() << " steps, loss "
              << fmt("%.6g", r.losses.front()) << " -> " << fmt("%.6g", r.losses.back()) << "\n"
              << "checkpoint " << checkpoint_path(dir, stage).string() << "\n";
    return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
    std::string data, ckpt, split = "test", jsonl;
    bool oracle = false;
    int threads = 1;
};

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

int run_eval(const EvalArgs& a) {
    if (!a.oracle && a.ckpt.empty()) throw UsageError("eval needs --ckpt (or --oracle)");
    DatasetSplits splits = read_dataset(a.data);
    const std::vector<DatasetRecord> records = pick_split(splits, a.split);
    if (records.empty()) throw DataError("split '" + a.split + "' is empty");

    std::optional<ModelBundle> b;
    if (!a.ckpt.empty()) {
        b.emplace(load_bundle(a.ckpt));
        if (!b->has_orientation && !a.oracle) throw DataError("no orientation checkpoint in " + a.ckpt);
        require_grid(records, b->preset);
    }

    std::vector<double> errors, adj_psnr, adj_ssim, net_psnr, net_ssim;
    const bool learned = b && b->has_reconstructor && b->has_orientation && !a.oracle;
    std::optional<PipelineStages> pipeline;
    if (learned) {
        pipeline = PipelineStages{network_orientation(*b->orientation),
                                  b->has_lutformer ? learned_lut(*b->lutformer) : analytic_lut(),
                                  learned_reconstruction(*b->generator)};
    }
    for (const auto& r : records) {
        const TiltAngles pred = a.oracle ? r.angles : b->orientation->predict(r.nonupright);
        errors.push_back(angle_error(pred, r.angles));
        const Image adj = rotate_image(r.nonupright, pred, LutDirection::InverseUpright, Interp::Bilinear, a.threads);
        adj_psnr.push_back(psnr(adj, r.upright));
        adj_ssim.push_back(ssim(adj, r.upright));
        if (pipeline) {
            const Image out = end_to_end_adjust(r.nonupright, *pipeline, a.threads).image;
            net_psnr.push_back(psnr(out, r.upright));
            net_ssim.push_back(ssim(out, r.upright));
        }
    }
    const AccuracyTable t = accuracy_table(errors);
    std::cout << "predictor  " << (a.oracle ? "oracle (ground-truth angles)" : "orientation network") << "\n"
              << "split      " << a.split << " (" << records.size() << " records)\n\n"
              << "Percentage of predicted angle deviation within threshold\n"
              << t.format() << "\n";
    // PSNR is +inf for a bit-exact match; report the finite-capped mean alongside.
    auto capped = [](std::vector<double> v) {
        for (double& x : v) x = std::min(x, 100.0);
        return mean(v);
    };
    std::printf("analytic adjust at predicted angles   PSNR %7.3f dB   SSIM %.4f\n", capped(adj_psnr), mean(adj_ssim));
    if (pipeline)
        std::printf("learned pipeline                      PSNR %7.3f dB   SSIM %.4f\n", capped(net_psnr),
                    mean(net_ssim));
    std::printf("mean angle error                      %.4f deg\n", mean(errors));

    if (!a.jsonl.empty()) {
        std::ofstream out = open_out(a.jsonl);
        nlohmann::ordered_json j{{"split", a.split},
                                 {"samples", records.size()},
                                 {"oracle", a.oracle},
                                 {"thresholds", t.thresholds},
                                 {"percentages", t.percentages},
                                 {"mean_error_deg", mean(errors)},
                                 {"adjust_psnr_db", capped(adj_psnr)},
                                 {"adjust_ssim", mean(adj_ssim)}};
        if (pipeline) {
            j["pipeline_psnr_db"] = capped(net_psnr);
            j["pipeline_ssim"] = mean(net_ssim);
        }
        out << j.dump() << "\n";
    }
    return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
    std::string pipeline = "analytic", size = "256x512", ckpt, jsonl, preset = "desk";
    int frames = 50, threads = 1;
    std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a) {
    LatencyStats s;
    std::string title;
    if (a.pipeline == "analytic") {
        const EquirectGrid g = parse_size(a.size);
        s = bench_analytic(g, a.frames, a.threads, a.seed);
        title = "analytic adjust (LUT generation + bilinear remap), 3x" + std::to_string(g.height()) + "x" +
                std::to_string(g.width());
    } else if (a.pipeline == "e2e") {
        RunConfig cfg;
        cfg.preset = a.preset;
        cfg.seed = a.seed;
        std::optional<ModelBundle> b;
        if (a.ckpt.empty()) b.emplace(cfg);
        else b.emplace(load_bundle(a.ckpt));
        const Image input = synth_panorama(a.seed, b->preset.image_grid, Style::Boxes);
        s = bench_end_to_end(learned_pipeline(*b->orientation, *b->lutformer, *b->generator), input, a.frames,
                             a.threads);
        title = "end-to-end (orientation net + LutFormer + generator), preset " + b->preset.name +
                (a.ckpt.empty() ? " with random weights" : "");
    } else {
        throw UsageError("--pipeline must be analytic or e2e");
    }
    std::cout << "hardware   " << hardware_info() << "\n"
              << s.format(title) << "reference  published about 11 fps; 0.012 s per frame on a TITAN RTX GPU "
              << "(not comparable to CPU timings)\n";
    if (!a.jsonl.empty()) open_out(a.jsonl) << s.json(a.pipeline) << "\n";
    return kOk;
}

// ---- e2e ------------------------------------------------------------------

struct E2eArgs {
    std::string in, ckpt, out;
    int threads = 1;
};

int run_e2e(const E2eArgs& a) {
    const ModelBundle b = load_bundle(a.ckpt);
    if (!b.has_orientation) throw DataError("no orientation checkpoint in " + a.ckpt);
    const Image img = read_image(a.in);
    if (img.grid() != b.preset.image_grid || img.channels() != 3)
        throw DataError("input must be 3x" + std::to_string(b.preset.image_grid.height()) + "x" +
                        std::to_string(b.preset.image_grid.width()) + " for preset " + b.preset.name);
    PipelineStages st;
    if (b.has_reconstructor) {
        st = {network_orientation(*b.orientation), b.has_lutformer ? learned_lut(*b.lutformer) : analytic_lut(),
              learned_reconstruction(*b.generator)};
    } else {
        // No reconstructor: rotate the RGB input directly.
        st = {network_angles_rgb_features(*b.orientation), b.has_lutformer ? learned_lut(*b.lutformer) : analytic_lut(),
              identity_reconstruction()};
    }
    const AdjustResult r = end_to_end_adjust(img, st, a.threads);
    std::printf("pitch %.3f\nroll  %.3f\n", r.angles.pitch(), r.angles.roll());
    std::cout << "stages     orientation network, " << (b.has_lutformer ? "LutFormer" : "analytic") << " LUT, "
              << (b.has_reconstructor ? "generator" : "no reconstruction") << "\n";
    if (!a.out.empty()) {
        write_image(r.image, a.out);
        std::cout << "wrote " << a.out << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Upright adjustment of equirectangular panoramas"};
    app.require_subcommand(1);
    int code = kOk;

    auto* lut = app.add_subcommand("lut", "LUT generation and analysis")->require_subcommand(1);

    LutGenArgs gen;
    auto* lgen = lut->add_subcommand("gen", "Write one analytic LUT as a ULUT file");
    lgen->add_option("--pitch", gen.pitch, "Pitch in degrees")->default_val(0.0);
    lgen->add_option("--roll", gen.roll, "Roll in degrees")->default_val(0.0);
    lgen->add_option("--size", gen.size, "Grid size HxW")->default_val(gen.size);
    lgen->add_option("--dir", gen.dir, "fwd (forward tilt) or inv (inverse upright)")->default_val(gen.dir);
    lgen->add_option("--out", gen.out, "Output .ulut file")->required();
    lgen->callback([&] { code = run_lut_gen(gen); });

    LutGridArgs grid;
    auto* lgrid = lut->add_subcommand("grid", "Storage report for a LUT grid; writes every entry with --out");
    lgrid->add_option("--range", grid.range, "Angle range MIN:MAX (both axes)")->default_val(grid.range);
    lgrid->add_option("--step", grid.step, "Angle step in degrees")->default_val(grid.step);
    lgrid->add_option("--size", grid.size, "Grid size HxW")->default_val(grid.size);
    lgrid->add_option("--dir", grid.dir, "fwd or inv")->default_val(grid.dir);
    lgrid->add_option("--out", grid.out, "Directory to write one .ulut per entry");
    lgrid->add_option("--ckpt", grid.ckpt, "Checkpoint directory to include in the size report");
    lgrid->callback([&] { code = run_lut_grid(grid); });

    LutApproxArgs approx;
    auto* lapprox = lut->add_subcommand("approx", "Coarse-to-fine upsampling error against the analytic LUT");
    lapprox->add_option("--pitch", approx.pitch, "Pitch in degrees")->default_val(0.0);
    lapprox->add_option("--roll", approx.roll, "Roll in degrees")->default_val(0.0);
    lapprox->add_option("--coarse", approx.coarse, "Coarse grid HxW")->default_val(approx.coarse);
    lapprox->add_option("--factor", approx.factor, "Upsampling factor")->default_val(approx.factor);
    lapprox->add_option("--dir", approx.dir, "fwd or inv")->default_val(approx.dir);
    lapprox->callback([&] { code = run_lut_approx(approx); });

    RemapArgs rm;
    auto* remap_cmd = app.add_subcommand("remap", "Remap an image through a LUT file");
    remap_cmd->add_option("--in", rm.in, "Input image (.ppm or .uimg)")->required();
    remap_cmd->add_option("--lut", rm.lut, "ULUT file")->required();
    remap_cmd->add_option("--out", rm.out, "Output image (.ppm or .uimg)")->required();
    remap_cmd->add_flag("--nearest", rm.nearest, "Nearest-neighbour instead of bilinear");
    remap_cmd->add_option("--threads", rm.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    remap_cmd->callback([&] { code = run_remap(rm); });

    AdjustArgs adj;
    auto* adjust = app.add_subcommand("adjust", "Analytic upright adjustment for known tilt angles");
    adjust->add_option("--in", adj.in, "Input image")->required();
    adjust->add_option("--pitch", adj.pitch, "Pitch in degrees")->default_val(0.0);
    adjust->add_option("--roll", adj.roll, "Roll in degrees")->default_val(0.0);
    adjust->add_option("--out", adj.out, "Output image")->required();
    adjust->add_option("--threads", adj.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    adjust->callback([&] { code = run_adjust(adj); });

    auto* data = app.add_subcommand("data", "Dataset tools")->require_subcommand(1);
    SynthArgs syn;
    auto* synth = data->add_subcommand("synth", "Synthesize a tilted-panorama dataset");
    synth->add_option("--n", syn.n, "Record count (>= 10)")->default_val(syn.n);
    synth->add_option("--seed", syn.seed, "Seed")->default_val(syn.seed);
    synth->add_option("--out", syn.out, "Output directory")->required();
    synth->add_option("--range", syn.range, "Tilt range MIN:MAX in degrees")->default_val(syn.range);
    synth->add_option("--step", syn.step, "Tilt lattice step in degrees")->default_val(syn.step);
    synth->add_option("--size", syn.size, "Image size HxW")->default_val(syn.size);
    synth->add_flag("--previews", syn.previews, "Also write .ppm previews");
    synth->add_option("--threads", syn.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    synth->callback([&] { code = run_synth(syn); });

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train one stage; writes checkpoint, JSONL log and config echo");
    train->add_option("--stage", tr.stage, "orientation | lutformer | recon")->required();
    train->add_option("--data", tr.data, "Dataset directory")->required();
    train->add_option("--config", tr.config, "key=value config file (defaults when omitted)");
    train->add_option("--ckpt", tr.ckpt, "Checkpoint directory")->required();
    train->callback([&] { code = run_train(tr); });

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Accuracy table and PSNR/SSIM summary");
    eval->add_option("--data", ev.data, "Dataset directory")->required();
    eval->add_option("--ckpt", ev.ckpt, "Checkpoint directory");
    eval->add_flag("--oracle", ev.oracle, "Use ground-truth angles as the predictor");
    eval->add_option("--split", ev.split, "train | val | test | all")->default_val(ev.split);
    eval->add_option("--jsonl", ev.jsonl, "Also write a JSON record to this file");
    eval->add_option("--threads", ev.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    eval->callback([&] { code = run_eval(ev); });

    BenchArgs bn;
    auto* bench = app.add_subcommand("bench", "Per-frame latency (image loading excluded)");
    bench->add_option("--pipeline", bn.pipeline, "analytic | e2e")->default_val(bn.pipeline);
    bench->add_option("--frames", bn.frames, "Timed frames (>= 10)")->default_val(bn.frames);
    bench->add_option("--size", bn.size, "Image size HxW (analytic)")->default_val(bn.size);
    bench->add_option("--ckpt", bn.ckpt, "Checkpoint directory (e2e; random weights when omitted)");
    bench->add_option("--preset", bn.preset, "desk | paper (e2e without --ckpt)")->default_val(bn.preset);
    bench->add_option("--seed", bn.seed, "Seed")->default_val(bn.seed);
    bench->add_option("--jsonl", bn.jsonl, "Also write a JSON record to this file");
    bench->add_option("--threads", bn.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    bench->callback([&] { code = run_bench(bn); });

    E2eArgs e2;
    auto* e2e = app.add_subcommand("e2e", "Predict angles and produce the upright image");
    e2e->add_option("--in", e2.in, "Input image")->required();
    e2e->add_option("--ckpt", e2.ckpt, "Checkpoint directory")->required();
    e2e->add_option("--out", e2.out, "Output image");
    e2e->add_option("--threads", e2.threads, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
    e2e->callback([&] { code = run_e2e(e2); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumeric;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {  // DomainError, ConfigError
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {  // data, format, checkpoint and I/O errors
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return code;
}
