#pragma once

#include <vector>

#include "turbres/image.hpp"

namespace turbres::deconv {

/// Blur kernel estimate: odd square support, nonnegative weights, unit sum.
struct BlurKernel {
    int size = 0;
    std::vector<double> weights;  // row-major, size x size

    BlurKernel() = default;
    BlurKernel(int size, std::vector<double> weights);

    static BlurKernel delta(int size);

    double& at(int x, int y) { return weights[static_cast<size_t>(y) * size + x]; }
    double at(int x, int y) const { return weights[static_cast<size_t>(y) * size + x]; }

    ScalarImage as_image() const;
    double weight_sum() const;
    /// Nonnegative within tol and unit sum within 1e-10.
    bool satisfies_invariants(double tol = 1e-12) const;
};

struct DeconvConfig {
    double alpha1 = 2e-2;   // TV weight on the image
    double alpha2 = 1.0;    // TV weight on the kernel
    double epsilon_tv = 1e-3;
    int kernel_size = 15;
    int outer_iterations = 10;
    int fixed_point_iterations = 100;  // cap on inner solver iterations
    double solver_tolerance = 1e-6;    // relative residual
    BoundaryRule rule = BoundaryRule::SymmetricReflect;
};

/// Energy checkpoint around one half-step of the alternating minimization.
/// The solve itself never increases the energy; the projection back onto the
/// kernel constraint set may, which is flagged rather than fatal.
struct StepRecord {
    bool is_kernel_step = false;
    double energy_before = 0.0;
    double energy_after_solve = 0.0;
    double energy_after_projection = 0.0;
};

struct DeconvResult {
    ScalarImage image;
    BlurKernel kernel;
    std::vector<double> energy_trace;  // initial energy, then one entry per outer iteration
    std::vector<StepRecord> steps;
    bool kernel_degenerate = false;
};

/// E(I,H) = 1/2 ||H * I - observed||^2 + alpha1 TV_eps(I) + alpha2 TV_eps(H)
/// with TV_eps(u) = sum sqrt(|grad u|^2 + eps^2).
double energy(const ScalarImage& img, const BlurKernel& kernel, const ScalarImage& observed,
              const DeconvConfig& cfg);
double energy(const ScalarImage& img, const ScalarImage& kernel_image, const ScalarImage& observed,
              const DeconvConfig& cfg);

/// One lagged-diffusivity solve of the image Euler-Lagrange equation with
/// diffusivity 1/|grad current|_eps frozen at `current`. alpha1 == 0 is
/// accepted here (plain deconvolution identity).
ScalarImage image_step(const BlurKernel& kernel, const ScalarImage& observed,
                       const ScalarImage& current, const DeconvConfig& cfg);

struct KernelStepResult {
    BlurKernel kernel;
    std::vector<double> unprojected;  // linear-system solution before projection
    bool degenerate_input = false;    // flat image: kernel unidentifiable, `current` returned
};

/// One lagged-diffusivity solve of the kernel Euler-Lagrange equation on the
/// kernel support, followed by projection (clip negatives, renormalize).
KernelStepResult kernel_step(const ScalarImage& img, const ScalarImage& observed,
                             const BlurKernel& current, const DeconvConfig& cfg);

/// Exact solve of a DCT-diagonal operator: idct2(dct2(rhs) / coeff_spectrum).
/// All spectrum coefficients must be positive.
ScalarImage solve_quadratic_dct(const ScalarImage& coeff_spectrum, const ScalarImage& rhs);

/// Alternating minimization from I = observed, H = delta; kernel step first.
DeconvResult blind_deconvolve(const ScalarImage& observed, const DeconvConfig& cfg);

// Linearized-system internals, exposed so tests can materialize the
// operators and compare against dense solves.
ScalarImage image_system_apply(const ScalarImage& x, const BlurKernel& kernel,
                               const ScalarImage& current, const DeconvConfig& cfg);
std::vector<double> kernel_system_apply(const std::vector<double>& h, int size,
                                        const ScalarImage& img, const BlurKernel& current,
                                        const DeconvConfig& cfg);
std::vector<double> kernel_system_solve(const ScalarImage& img, const ScalarImage& observed,
                                        const BlurKernel& current, const DeconvConfig& cfg);

}  // namespace turbres::deconv
