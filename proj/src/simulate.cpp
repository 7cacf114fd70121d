#include "turbres/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "turbres/errors.hpp"
#include "turbres/image_io.hpp"
#include "turbres/rng.hpp"
#include "turbres/version.hpp"

namespace turbres::sim {

namespace {

constexpr BoundaryRule kRule = BoundaryRule::SymmetricReflect;

// Substream ids per frame: warp-u, warp-v, pixel noise.
constexpr uint64_t kStreamsPerFrame = 3;

std::vector<double> gaussian_taps_1d(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> taps(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double t = std::exp(-0.5 * (i * i) / (sigma * sigma));
        taps[static_cast<size_t>(i + radius)] = t;
        sum += t;
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

ScalarImage separable_gaussian_blur(const ScalarImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const std::vector<double> taps = gaussian_taps_1d(sigma);
    const int radius = static_cast<int>(taps.size()) / 2;
    ScalarImage rows(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int s = -radius; s <= radius; ++s)
                acc += taps[static_cast<size_t>(s + radius)] *
                       img.at(boundary_index(x - s, img.width, kRule), y);
            rows.at(x, y) = acc;
        }
    }
    ScalarImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int s = -radius; s <= radius; ++s)
                acc += taps[static_cast<size_t>(s + radius)] *
                       rows.at(x, boundary_index(y - s, img.height, kRule));
            out.at(x, y) = acc;
        }
    }
    return out;
}

void validate(const SimConfig& cfg) {
    if (cfg.frames < 1) throw std::invalid_argument("simulate: frames must be >= 1");
    if (cfg.blur_sigma < 0.0) throw std::invalid_argument("simulate: blur_sigma must be >= 0");
    if (cfg.warp_amplitude < 0.0)
        throw std::invalid_argument("simulate: warp_amplitude must be >= 0");
    if (!(cfg.warp_correlation_length > 0.0))
        throw std::invalid_argument("simulate: warp_correlation_length must be > 0");
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("simulate: noise_sigma must be >= 0");
}

// Smoothed, mean-centered white noise rescaled to exact peak magnitude.
VectorField draw_warp(int width, int height, const SimConfig& cfg, int frame) {
    VectorField warp(width, height);
    if (cfg.warp_amplitude <= 0.0) return warp;

    ScalarImage noise_u(width, height), noise_v(width, height);
    CounterRng rng_u(cfg.seed, kStreamsPerFrame * static_cast<uint64_t>(frame));
    CounterRng rng_v(cfg.seed, kStreamsPerFrame * static_cast<uint64_t>(frame) + 1);
    for (auto& v : noise_u.data) v = rng_u.next_gaussian();
    for (auto& v : noise_v.data) v = rng_v.next_gaussian();

    ScalarImage su = separable_gaussian_blur(noise_u, cfg.warp_correlation_length);
    ScalarImage sv = separable_gaussian_blur(noise_v, cfg.warp_correlation_length);

    double mean_u = 0.0, mean_v = 0.0;
    for (size_t i = 0; i < su.pixel_count(); ++i) {
        mean_u += su.data[i];
        mean_v += sv.data[i];
    }
    mean_u /= static_cast<double>(su.pixel_count());
    mean_v /= static_cast<double>(sv.pixel_count());

    double max_mag = 0.0;
    for (size_t i = 0; i < su.pixel_count(); ++i) {
        su.data[i] -= mean_u;
        sv.data[i] -= mean_v;
        max_mag = std::max(max_mag, std::hypot(su.data[i], sv.data[i]));
    }
    if (max_mag > 0.0) {
        const double scale = cfg.warp_amplitude / max_mag;
        for (size_t i = 0; i < su.pixel_count(); ++i) {
            warp.u[i] = su.data[i] * scale;
            warp.v[i] = sv.data[i] * scale;
        }
    }
    return warp;
}

}  // namespace

int default_kernel_size(double sigma) {
    if (sigma <= 0.0) return 1;
    return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
}

deconv::BlurKernel gaussian_kernel(double sigma, int size) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("gaussian_kernel: size must be odd and >= 1");
    if (sigma < 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be >= 0");
    if (sigma == 0.0) return deconv::BlurKernel::delta(size);
    const int r = size / 2;
    std::vector<double> w(static_cast<size_t>(size) * size);
    double sum = 0.0;
    for (int t = -r; t <= r; ++t) {
        for (int s = -r; s <= r; ++s) {
            const double g = std::exp(-0.5 * (s * s + t * t) / (sigma * sigma));
            w[static_cast<size_t>(t + r) * size + (s + r)] = g;
            sum += g;
        }
    }
    for (auto& x : w) x /= sum;
    return deconv::BlurKernel(size, std::move(w));
}

GroundTruth simulate(const ScalarImage& clean, const SimConfig& cfg) {
    validate(cfg);
    GroundTruth gt;
    gt.clean = clean;
    gt.kernel = gaussian_kernel(cfg.blur_sigma, default_kernel_size(cfg.blur_sigma));
    const ScalarImage blurred = convolve(clean, gt.kernel.as_image(), kRule);

    gt.warps.reserve(static_cast<size_t>(cfg.frames));
    gt.degraded.frames.reserve(static_cast<size_t>(cfg.frames));
    for (int n = 0; n < cfg.frames; ++n) {
        VectorField w = draw_warp(clean.width, clean.height, cfg, n);
        ScalarImage frame = warp(blurred, w, kRule);
        if (cfg.noise_sigma > 0.0) {
            CounterRng rng(cfg.seed, kStreamsPerFrame * static_cast<uint64_t>(n) + 2);
            for (auto& v : frame.data) v += cfg.noise_sigma * rng.next_gaussian();
        }
        gt.warps.push_back(std::move(w));
        gt.degraded.frames.push_back(std::move(frame));
    }
    return gt;
}

void write_ground_truth(const GroundTruth& gt, const SimConfig& cfg, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_image(gt.clean, (base / "clean.png").string());

    // Kernel scaled to its max weight so 16 bits cover the dynamic range;
    // readers renormalize to unit sum.
    ScalarImage kimg = gt.kernel.as_image();
    double peak = 0.0;
    for (double v : kimg.data) peak = std::max(peak, v);
    if (peak > 0.0)
        for (auto& v : kimg.data) v /= peak;
    save_pgm16(kimg, (base / "kernel.pgm").string());

    char name[32];
    for (size_t n = 0; n < gt.degraded.frames.size(); ++n) {
        std::snprintf(name, sizeof(name), "warp_%04zu.flo", n);
        write_flow_field(gt.warps[n], (base / name).string());
        std::snprintf(name, sizeof(name), "frame_%04zu.png", n);
        save_image(gt.degraded.frames[n], (base / name).string());
    }

    std::ostringstream manifest;
    manifest << "seed=" << cfg.seed << "\n"
             << "frames=" << cfg.frames << "\n"
             << "blur_sigma=" << cfg.blur_sigma << "\n"
             << "warp_amplitude=" << cfg.warp_amplitude << "\n"
             << "warp_correlation_length=" << cfg.warp_correlation_length << "\n"
             << "noise_sigma=" << cfg.noise_sigma << "\n"
             << "kernel_size=" << gt.kernel.size << "\n"
             << "width=" << gt.clean.width << "\n"
             << "height=" << gt.clean.height << "\n"
             << "version=" << kVersion << "\n";
    write_text_file_atomic((base / "manifest.txt").string(), manifest.str());
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

deconv::BlurKernel read_kernel_pgm(const std::string& path) {
    const ScalarImage img = load_image(path);
    if (img.width != img.height || img.width % 2 == 0)
        throw io_error("kernel file must be square with odd side: " + path);
    double sum = 0.0;
    for (double v : img.data) sum += v;
    if (!(sum > 0.0)) throw io_error("kernel file sums to zero: " + path);
    std::vector<double> w(img.data);
    for (auto& v : w) v /= sum;
    return deconv::BlurKernel(img.width, std::move(w));
}

}  // namespace turbres::sim
