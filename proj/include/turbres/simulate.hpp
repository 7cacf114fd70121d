#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "turbres/deconv.hpp"
#include "turbres/image.hpp"
#include "turbres/temporal.hpp"

namespace turbres::sim {

/// Seeded forward model: observed = warp(blur(clean)) + noise, one warp and
/// noise realization per frame.
struct SimConfig {
    uint64_t seed = 0;
    int frames = 1;
    double blur_sigma = 0.0;             // px
    double warp_amplitude = 0.0;         // px, max displacement magnitude
    double warp_correlation_length = 8.0;  // px, spatial smoothness of the warps
    double noise_sigma = 0.0;            // intensity units
};

struct GroundTruth {
    ScalarImage clean;
    deconv::BlurKernel kernel;
    std::vector<VectorField> warps;
    Sequence degraded;
};

/// Sampled isotropic Gaussian, unit sum; sigma == 0 yields the delta kernel.
deconv::BlurKernel gaussian_kernel(double sigma, int size);

/// Smallest odd support covering 3 sigma on each side.
int default_kernel_size(double sigma);

/// Identical (clean, cfg) always produce identical output: all randomness
/// comes from counter-based substreams keyed by frame index.
GroundTruth simulate(const ScalarImage& clean, const SimConfig& cfg);

/// Directory layout: clean.png, kernel.pgm (16-bit, scaled to max weight),
/// warp_%04d.flo, frame_%04d.png, manifest.txt (key=value).
void write_ground_truth(const GroundTruth& gt, const SimConfig& cfg, const std::string& dir);

/// Parse a key=value manifest.
std::map<std::string, std::string> read_manifest(const std::string& path);

/// Load kernel.pgm and renormalize to unit sum.
deconv::BlurKernel read_kernel_pgm(const std::string& path);

}  // namespace turbres::sim
