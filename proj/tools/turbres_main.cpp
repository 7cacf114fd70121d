#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "turbres/deconv.hpp"
#include "turbres/diffeo.hpp"
#include "turbres/errors.hpp"
#include "turbres/image_io.hpp"
#include "turbres/metrics.hpp"
#include "turbres/parallel.hpp"
#include "turbres/pipeline.hpp"
#include "turbres/simulate.hpp"
#include "turbres/temporal.hpp"
#include "turbres/version.hpp"

namespace fs = std::filesystem;
using namespace turbres;

namespace {

class WallTimer {
public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string join_args(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        if (i) cmd += ' ';
        cmd += argv[i];
    }
    return cmd;
}

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm";
}

// Frame discovery: a directory (all .png/.pgm inside), a glob on the file
// name, or a single file. Lexicographic order is the temporal order.
std::vector<std::string> list_frames(const std::string& spec) {
    std::vector<std::string> out;
    if (spec.find('*') != std::string::npos || spec.find('?') != std::string::npos) {
        const fs::path pattern_path(spec);
        const fs::path dir =
            pattern_path.parent_path().empty() ? fs::path(".") : pattern_path.parent_path();
        std::string pattern;
        for (char c : pattern_path.filename().string()) {
            if (c == '*')
                pattern += ".*";
            else if (c == '?')
                pattern += '.';
            else if (std::string("\\^$.|+()[]{}").find(c) != std::string::npos)
                pattern += std::string("\\") + c;
            else
                pattern += c;
        }
        const std::regex re(pattern);
        if (!fs::is_directory(dir)) return out;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() &&
                std::regex_match(entry.path().filename().string(), re)) {
                out.push_back(entry.path().string());
            }
        }
    } else if (fs::is_directory(spec)) {
        for (const auto& entry : fs::directory_iterator(spec)) {
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                out.push_back(entry.path().string());
        }
    } else if (fs::is_regular_file(spec)) {
        out.push_back(spec);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Sequence load_sequence(const std::vector<std::string>& paths) {
    Sequence seq;
    for (const auto& p : paths) seq.frames.push_back(load_image(p));
    if (!seq.shapes_consistent()) throw std::invalid_argument("frames differ in shape");
    return seq;
}

void save_kernel_pgm16(const deconv::BlurKernel& kernel, const std::string& path) {
    ScalarImage img = kernel.as_image();
    double peak = 0.0;
    for (double v : img.data) peak = std::max(peak, v);
    if (peak > 0.0)
        for (auto& v : img.data) v /= peak;
    save_pgm16(img, path);
}

void write_run_manifest(const fs::path& dir, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& extra,
                        double duration_seconds) {
    std::ostringstream out;
    out << "command=" << command << "\n";
    out << "version=" << kVersion << "\n";
    for (const auto& [k, v] : extra) out << k << "=" << v << "\n";
    out << "duration_seconds=" << duration_seconds << "\n";
    write_text_file_atomic((dir / "run_manifest.txt").string(), out.str());
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

// ---- subcommand option blocks ----

struct SimulateArgs {
    std::string input;
    std::string out;
    uint64_t seed = 0;
    int frames = 10;
    double blur_sigma = 0.0;
    double warp_amplitude = 0.0;
    double warp_correlation_length = 8.0;
    double noise_sigma = 0.0;
};

struct TFilterArgs {
    std::string frames;
    std::string mode = "median";
    std::string out;
};

struct DeconvArgs {
    std::string input;
    std::string out;
    double alpha1 = 1e-5;  // blind-deconvolution demo defaults
    double alpha2 = 1e-3;
    double epsilon_tv = 1e-3;
    int kernel_size = 15;
    int iters = 10;
};

struct RegisterArgs {
    std::string moving;
    std::string reference;
    std::string out_warped;
    std::string out_map;
    double alpha = 0.01;
    double gamma = 0.7;
    int steps = 10;
    double data_weight = 20000.0;
    int max_iters = 200;
};

struct RestoreArgs {
    std::string frames;
    std::string pipeline;
    std::string out;
    int iterations = 1;
    std::string filter = "median";
    double alpha1 = 2e-2;
    double alpha2 = 1.0;
    int kernel_size = 15;
    int deconv_iters = 10;
    double alpha = 0.01;
    double gamma = 0.7;
    int steps = 10;
    double data_weight = 20000.0;
    int reg_iters = 200;
};

struct ScoreArgs {
    std::string restored;
    std::string truth_dir;
    std::string kernel;
    std::string map;
    int truth_frame = 0;
    std::string csv;
};

int run_simulate(const SimulateArgs& args, const std::string& command) {
    WallTimer timer;
    const ScalarImage clean = load_image(args.input);
    sim::SimConfig cfg;
    cfg.seed = args.seed;
    cfg.frames = args.frames;
    cfg.blur_sigma = args.blur_sigma;
    cfg.warp_amplitude = args.warp_amplitude;
    cfg.warp_correlation_length = args.warp_correlation_length;
    cfg.noise_sigma = args.noise_sigma;
    const sim::GroundTruth gt = sim::simulate(clean, cfg);
    sim::write_ground_truth(gt, cfg, args.out);
    write_run_manifest(args.out, command,
                       {{"seed", std::to_string(args.seed)},
                        {"input", args.input},
                        {"output", args.out}},
                       timer.seconds());
    std::cout << "wrote " << cfg.frames << " frames to " << args.out << "\n";
    return 0;
}

int run_tfilter(const TFilterArgs& args) {
    const auto paths = list_frames(args.frames);
    if (paths.empty()) throw std::invalid_argument("no frames found: " + args.frames);
    const Sequence seq = load_sequence(paths);
    const ScalarImage out =
        args.mode == "mean" ? temporal_mean(seq) : temporal_median(seq);
    save_image(out, args.out);
    std::cout << "filtered " << seq.frame_count() << " frames (" << args.mode << ") -> "
              << args.out << "\n";
    return 0;
}

int run_deconv(const DeconvArgs& args) {
    const ScalarImage observed = load_image(args.input);
    deconv::DeconvConfig cfg;
    cfg.alpha1 = args.alpha1;
    cfg.alpha2 = args.alpha2;
    cfg.epsilon_tv = args.epsilon_tv;
    cfg.kernel_size = args.kernel_size;
    cfg.outer_iterations = args.iters;
    const deconv::DeconvResult result = deconv::blind_deconvolve(observed, cfg);

    fs::create_directories(args.out);
    const fs::path out(args.out);
    save_image(result.image, (out / "restored.png").string());
    save_kernel_pgm16(result.kernel, (out / "kernel.pgm").string());
    std::ostringstream csv;
    csv << "iteration,energy\n";
    for (size_t i = 0; i < result.energy_trace.size(); ++i)
        csv << i << "," << format_double(result.energy_trace[i]) << "\n";
    write_text_file_atomic((out / "energy.csv").string(), csv.str());
    std::cout << "final_energy=" << format_double(result.energy_trace.back()) << "\n";
    return 0;
}

int run_register(const RegisterArgs& args) {
    const ScalarImage moving = load_image(args.moving);
    const ScalarImage reference = load_image(args.reference);
    reg::RegistrationConfig cfg;
    cfg.params.alpha = args.alpha;
    cfg.params.gamma = args.gamma;
    cfg.time_steps = args.steps;
    cfg.data_weight = args.data_weight;
    cfg.max_iterations = args.max_iters;
    for (const auto& w : reg::parameter_box_warnings(cfg.params))
        std::cerr << "warning: " << w << "\n";
    const reg::RegistrationResult rr = reg::register_images(moving, reference, cfg);
    save_image(rr.warped, args.out_warped);
    if (!args.out_map.empty()) write_flow_field(rr.forward_map, args.out_map);
    std::cout << "final_energy=" << format_double(rr.energy_trace.back()) << "\n";
    return 0;
}

int run_restore(const RestoreArgs& args, const std::string& command, int threads) {
    WallTimer timer;
    const auto paths = list_frames(args.frames);
    if (paths.empty()) throw std::invalid_argument("no frames found: " + args.frames);
    const Sequence seq = load_sequence(paths);

    pipeline::PipelineConfig cfg;
    cfg.iterations = args.iterations;
    cfg.reference_filter = args.filter == "mean" ? pipeline::ReferenceFilter::Mean
                                                 : pipeline::ReferenceFilter::Median;
    cfg.deconv.alpha1 = args.alpha1;
    cfg.deconv.alpha2 = args.alpha2;
    cfg.deconv.kernel_size = args.kernel_size;
    cfg.deconv.outer_iterations = args.deconv_iters;
    cfg.registration.params.alpha = args.alpha;
    cfg.registration.params.gamma = args.gamma;
    cfg.registration.time_steps = args.steps;
    cfg.registration.data_weight = args.data_weight;
    cfg.registration.max_iterations = args.reg_iters;
    for (const auto& w : reg::parameter_box_warnings(cfg.registration.params))
        std::cerr << "warning: " << w << "\n";

    const pipeline::PipelineReport report =
        args.pipeline == "frd" ? pipeline::frd_restore(seq, cfg, threads)
                               : pipeline::dfr_restore(seq, cfg, threads);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    fs::create_directories(args.out);
    const fs::path out(args.out);
    save_image(report.restored, (out / "restored.png").string());
    char name[32];
    for (size_t k = 0; k < report.references.size(); ++k) {
        std::snprintf(name, sizeof(name), "reference_%02zu.png", k);
        save_image(report.references[k], (out / name).string());
    }
    std::ostringstream csv;
    csv << "round,frame,final_energy\n";
    for (size_t k = 0; k < report.per_frame_registration_energies.size(); ++k) {
        const auto& row = report.per_frame_registration_energies[k];
        for (size_t n = 0; n < row.size(); ++n)
            csv << (k + 1) << "," << n << "," << format_double(row[n]) << "\n";
    }
    write_text_file_atomic((out / "energies.csv").string(), csv.str());
    write_run_manifest(args.out, command,
                       {{"pipeline", args.pipeline},
                        {"iterations", std::to_string(args.iterations)},
                        {"frames", std::to_string(seq.frame_count())},
                        {"output", args.out}},
                       timer.seconds());
    std::cout << "deconv_invocations=" << report.deconv_invocations << "\n";
    std::cout << "registration_invocations=" << report.registration_invocations << "\n";
    return 0;
}

int run_score(const ScoreArgs& args) {
    std::vector<std::string> missing;
    const fs::path truth(args.truth_dir);
    for (const char* required : {"manifest.txt", "clean.png"}) {
        if (!fs::exists(truth / required)) missing.push_back(required);
    }
    if (!missing.empty()) {
        std::string msg = "malformed truth directory " + args.truth_dir + ", missing:";
        for (const auto& m : missing) msg += " " + m;
        throw std::invalid_argument(msg);
    }

    const ScalarImage restored = load_image(args.restored);
    const ScalarImage clean = load_image((truth / "clean.png").string());
    metrics::MetricReport report;
    report.psnr_db = metrics::psnr(restored, clean);

    if (!args.kernel.empty()) {
        const auto est = sim::read_kernel_pgm(args.kernel);
        const auto ref = sim::read_kernel_pgm((truth / "kernel.pgm").string());
        report.kernel_correlation = metrics::kernel_correlation(est, ref);
    }
    if (!args.map.empty()) {
        char name[32];
        std::snprintf(name, sizeof(name), "warp_%04d.flo", args.truth_frame);
        const VectorField est = read_flow_field(args.map);
        const VectorField ref = read_flow_field((truth / name).string());
        report.mean_endpoint_error_px = metrics::mean_endpoint_error(est, ref);
    }

    std::cout << report.to_key_values();
    if (!args.csv.empty()) {
        const bool fresh = !fs::exists(args.csv);
        std::ofstream out(args.csv, std::ios::app);
        if (!out) throw io_error("cannot write csv: " + args.csv);
        if (fresh) out << metrics::MetricReport::csv_header() << "\n";
        out << report.to_csv_row(args.restored) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"turbres - restoration of image sequences degraded by "
                 "warp-plus-blur distortion"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand
    int threads = hardware_threads();
    app.add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a degraded sequence with ground truth");
    sim_cmd->set_config("--config");
    sim_cmd->add_option("--input", sim_args.input, "clean grayscale image")->required();
    sim_cmd->add_option("--out", sim_args.out, "output directory")->required();
    sim_cmd->add_option("--seed", sim_args.seed, "PRNG seed");
    sim_cmd->add_option("--frames", sim_args.frames, "frame count")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--blur-sigma", sim_args.blur_sigma, "Gaussian blur sigma (px)")
        ->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--warp-amplitude", sim_args.warp_amplitude, "max displacement (px)")
        ->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--warp-correlation-length", sim_args.warp_correlation_length,
                        "warp smoothness (px)")
        ->check(CLI::PositiveNumber);
    sim_cmd->add_option("--noise-sigma", sim_args.noise_sigma, "additive noise std")
        ->check(CLI::NonNegativeNumber);

    TFilterArgs tf_args;
    auto* tf_cmd = app.add_subcommand("tfilter", "temporal mean/median fusion");
    tf_cmd->set_config("--config");
    tf_cmd->add_option("--frames", tf_args.frames, "frame directory or glob")->required();
    tf_cmd->add_option("--mode", tf_args.mode, "mean|median")
        ->check(CLI::IsMember({"mean", "median"}));
    tf_cmd->add_option("--out", tf_args.out, "output image")->required();

    DeconvArgs dc_args;
    auto* dc_cmd = app.add_subcommand("deconv", "total-variation blind deconvolution");
    dc_cmd->set_config("--config");
    dc_cmd->add_option("--input", dc_args.input, "blurred image")->required();
    dc_cmd->add_option("--out", dc_args.out, "output directory")->required();
    dc_cmd->add_option("--alpha1", dc_args.alpha1, "image TV weight")->check(CLI::PositiveNumber);
    dc_cmd->add_option("--alpha2", dc_args.alpha2, "kernel TV weight")->check(CLI::PositiveNumber);
    dc_cmd->add_option("--epsilon-tv", dc_args.epsilon_tv, "TV smoothing constant")
        ->check(CLI::PositiveNumber);
    dc_cmd->add_option("--kernel-size", dc_args.kernel_size, "odd kernel support");
    dc_cmd->add_option("--iters", dc_args.iters, "outer iterations")->check(CLI::PositiveNumber);

    RegisterArgs rg_args;
    auto* rg_cmd = app.add_subcommand("register", "diffeomorphic registration of two images");
    rg_cmd->set_config("--config");
    rg_cmd->add_option("--moving", rg_args.moving, "image to deform")->required();
    rg_cmd->add_option("--reference", rg_args.reference, "registration target")->required();
    rg_cmd->add_option("--out-warped", rg_args.out_warped, "warped output image")->required();
    rg_cmd->add_option("--out-map", rg_args.out_map, "forward displacement (.flo)");
    rg_cmd->add_option("--alpha", rg_args.alpha, "Laplacian weight of L");
    rg_cmd->add_option("--gamma", rg_args.gamma, "zeroth-order weight of L");
    rg_cmd->add_option("--steps", rg_args.steps, "flow time steps")->check(CLI::PositiveNumber);
    rg_cmd->add_option("--data-weight", rg_args.data_weight, "matching term weight C")
        ->check(CLI::PositiveNumber);
    rg_cmd->add_option("--max-iters", rg_args.max_iters, "descent iteration cap")
        ->check(CLI::PositiveNumber);

    RestoreArgs rs_args;
    auto* rs_cmd = app.add_subcommand("restore", "run the FRD or DFR pipeline on a sequence");
    rs_cmd->set_config("--config");
    rs_cmd->add_option("--frames", rs_args.frames, "frame directory or glob")->required();
    rs_cmd->add_option("--pipeline", rs_args.pipeline, "frd|dfr")
        ->required()
        ->check(CLI::IsMember({"frd", "dfr"}));
    rs_cmd->add_option("--out", rs_args.out, "output directory")->required();
    rs_cmd->add_option("-K,--iterations", rs_args.iterations, "reference refinement rounds")
        ->check(CLI::PositiveNumber);
    rs_cmd->add_option("--filter", rs_args.filter, "mean|median reference filter")
        ->check(CLI::IsMember({"mean", "median"}));
    rs_cmd->add_option("--alpha1", rs_args.alpha1, "image TV weight")->check(CLI::PositiveNumber);
    rs_cmd->add_option("--alpha2", rs_args.alpha2, "kernel TV weight")->check(CLI::PositiveNumber);
    rs_cmd->add_option("--kernel-size", rs_args.kernel_size, "odd kernel support");
    rs_cmd->add_option("--deconv-iters", rs_args.deconv_iters, "deconvolution outer iterations")
        ->check(CLI::PositiveNumber);
    rs_cmd->add_option("--alpha", rs_args.alpha, "Laplacian weight of L");
    rs_cmd->add_option("--gamma", rs_args.gamma, "zeroth-order weight of L");
    rs_cmd->add_option("--steps", rs_args.steps, "flow time steps")->check(CLI::PositiveNumber);
    rs_cmd->add_option("--data-weight", rs_args.data_weight, "matching term weight C")
        ->check(CLI::PositiveNumber);
    rs_cmd->add_option("--reg-iters", rs_args.reg_iters, "registration iteration cap")
        ->check(CLI::PositiveNumber);

    ScoreArgs sc_args;
    auto* sc_cmd = app.add_subcommand("score", "compare a restoration against ground truth");
    sc_cmd->set_config("--config");
    sc_cmd->add_option("--restored", sc_args.restored, "restored image")->required();
    sc_cmd->add_option("--truth-dir", sc_args.truth_dir, "simulator output directory")->required();
    sc_cmd->add_option("--kernel", sc_args.kernel, "estimated kernel (16-bit PGM)");
    sc_cmd->add_option("--map", sc_args.map, "estimated displacement (.flo)");
    sc_cmd->add_option("--truth-frame", sc_args.truth_frame, "truth warp index for --map")
        ->check(CLI::NonNegativeNumber);
    sc_cmd->add_option("--csv", sc_args.csv, "append metrics to this CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string command = join_args(argc, argv);
    try {
        if (sim_cmd->parsed()) return run_simulate(sim_args, command);
        if (tf_cmd->parsed()) return run_tfilter(tf_args);
        if (dc_cmd->parsed()) return run_deconv(dc_args);
        if (rg_cmd->parsed()) return run_register(rg_args);
        if (rs_cmd->parsed()) return run_restore(rs_args, command, threads);
        if (sc_cmd->parsed()) return run_score(sc_args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
