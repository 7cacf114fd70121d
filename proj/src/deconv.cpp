#include "turbres/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "turbres/errors.hpp"
#include "turbres/transforms.hpp"

namespace turbres::deconv {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Diffusivity 1 / sqrt(|grad u|^2 + eps^2), the lagged-TV coefficient.
ScalarImage tv_diffusivity(const ScalarImage& u, double eps) {
    const VectorField g = gradient(u);
    ScalarImage d(u.width, u.height);
    for (size_t i = 0; i < d.pixel_count(); ++i) {
        d.data[i] = 1.0 / std::sqrt(g.u[i] * g.u[i] + g.v[i] * g.v[i] + eps * eps);
    }
    return d;
}

double tv_eps(const ScalarImage& u, double eps) {
    const VectorField g = gradient(u);
    double acc = 0.0;
    for (size_t i = 0; i < g.pixel_count(); ++i) {
        acc += std::sqrt(g.u[i] * g.u[i] + g.v[i] * g.v[i] + eps * eps);
    }
    return acc;
}

// alpha * G^T D G x  ==  -alpha * div(d .* grad x)
ScalarImage weighted_tv_operator(const ScalarImage& x, const ScalarImage& d, double alpha) {
    VectorField g = gradient(x);
    for (size_t i = 0; i < g.pixel_count(); ++i) {
        g.u[i] *= d.data[i];
        g.v[i] *= d.data[i];
    }
    ScalarImage out = divergence(g);
    for (auto& v : out.data) v *= -alpha;
    return out;
}

struct PcgResult {
    std::vector<double> x;
    int iterations = 0;
    bool converged = false;
    double initial_residual = 0.0;
    double final_residual = 0.0;
};

// Preconditioned conjugate gradients for an SPD operator, warm-started at x0.
// Starting from the current iterate means every PCG step decreases the
// quadratic form, which is what makes the outer energy trace monotone.
PcgResult pcg_solve(const std::function<std::vector<double>(const std::vector<double>&)>& apply,
                    const std::function<std::vector<double>(const std::vector<double>&)>& precond,
                    const std::vector<double>& b, const std::vector<double>& x0, double tol,
                    int max_iterations) {
    PcgResult res;
    res.x = x0;
    std::vector<double> r = apply(res.x);
    for (size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    const double bnorm = norm2(b);
    const double target = tol * (bnorm > 0.0 ? bnorm : 1.0);
    res.initial_residual = norm2(r);
    res.final_residual = res.initial_residual;
    if (res.initial_residual <= target) {
        res.converged = true;
        return res;
    }
    std::vector<double> z = precond(r);
    std::vector<double> p = z;
    double rz = dot(r, z);
    std::vector<double> ap;
    for (int it = 0; it < max_iterations; ++it) {
        ap = apply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw solver_error("solver diverged: conjugate-gradient breakdown (non-SPD system)");
        }
        const double alpha = rz / pap;
        for (size_t i = 0; i < res.x.size(); ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res.iterations = it + 1;
        res.final_residual = norm2(r);
        if (res.final_residual <= target) {
            res.converged = true;
            return res;
        }
        z = precond(r);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    if (res.final_residual > res.initial_residual) {
        throw solver_error("solver diverged: residual grew over " +
                           std::to_string(max_iterations) + " iterations");
    }
    return res;
}

ScalarImage delta_image(int width, int height) {
    ScalarImage d(width, height);
    d.at(0, 0) = 1.0;
    return d;
}

// DCT-domain symbol of convolution with the doubly symmetrized kernel under
// reflecting boundaries (exact for doubly symmetric kernels; used only to
// precondition).
ScalarImage dct_blur_symbol(const BlurKernel& kernel, int width, int height, BoundaryRule rule) {
    const int n = kernel.size;
    ScalarImage sym(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            sym.at(x, y) = 0.25 * (kernel.at(x, y) + kernel.at(n - 1 - x, y) +
                                   kernel.at(x, n - 1 - y) + kernel.at(n - 1 - x, n - 1 - y));
        }
    }
    const ScalarImage delta = delta_image(width, height);
    const ScalarImage col = convolve(delta, sym, rule);
    ScalarImage symbol = dct2(col);
    const ScalarImage denom = dct2(delta);
    for (size_t i = 0; i < symbol.pixel_count(); ++i) symbol.data[i] /= denom.data[i];
    return symbol;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

void floor_spectrum(ScalarImage& s) {
    double max_entry = 0.0;
    for (double v : s.data) max_entry = std::max(max_entry, v);
    const double floor = std::max(1e-12 * max_entry, 1e-30);
    for (auto& v : s.data) v = std::max(v, floor);
}

void validate_config(const DeconvConfig& cfg) {
    if (!(cfg.alpha1 > 0.0)) throw std::invalid_argument("deconv: alpha1 must be > 0");
    if (!(cfg.alpha2 > 0.0)) throw std::invalid_argument("deconv: alpha2 must be > 0");
    if (!(cfg.epsilon_tv > 0.0)) throw std::invalid_argument("deconv: epsilon_tv must be > 0");
    if (cfg.kernel_size < 3 || cfg.kernel_size % 2 == 0)
        throw std::invalid_argument("deconv: kernel_size must be odd and >= 3");
    if (cfg.outer_iterations < 1) throw std::invalid_argument("deconv: outer_iterations must be >= 1");
}

// C_I^T y: correlate y against the (boundary-extended) image, restricted to
// the kernel support. Exact adjoint of h -> convolve(img, h).
std::vector<double> correlate_to_kernel(const ScalarImage& y, const ScalarImage& img, int size,
                                        BoundaryRule rule) {
    const int r = size / 2;
    std::vector<double> out(static_cast<size_t>(size) * size, 0.0);
    for (int t = -r; t <= r; ++t) {
        for (int s = -r; s <= r; ++s) {
            double acc = 0.0;
            for (int yy = 0; yy < img.height; ++yy) {
                const int my = boundary_index(yy - t, img.height, rule);
                for (int xx = 0; xx < img.width; ++xx) {
                    const int mx = boundary_index(xx - s, img.width, rule);
                    acc += y.at(xx, yy) * img.at(mx, my);
                }
            }
            out[static_cast<size_t>(r + t) * size + (r + s)] = acc;
        }
    }
    return out;
}

}  // namespace

BlurKernel::BlurKernel(int size_, std::vector<double> weights_)
    : size(size_), weights(std::move(weights_)) {
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("BlurKernel: size must be odd");
    if (weights.size() != static_cast<size_t>(size) * size)
        throw std::invalid_argument("BlurKernel: weight count does not match support");
}

BlurKernel BlurKernel::delta(int size) {
    if (size < 1 || size % 2 == 0) throw std::invalid_argument("BlurKernel: size must be odd");
    std::vector<double> w(static_cast<size_t>(size) * size, 0.0);
    w[static_cast<size_t>(size / 2) * size + size / 2] = 1.0;
    return BlurKernel(size, std::move(w));
}

ScalarImage BlurKernel::as_image() const {
    ScalarImage img(size, size);
    img.data = weights;
    return img;
}

double BlurKernel::weight_sum() const {
    double acc = 0.0;
    for (double w : weights) acc += w;
    return acc;
}

bool BlurKernel::satisfies_invariants(double tol) const {
    for (double w : weights)
        if (w < -tol || !std::isfinite(w)) return false;
    return std::abs(weight_sum() - 1.0) <= 1e-10;
}

double energy(const ScalarImage& img, const ScalarImage& kernel_image, const ScalarImage& observed,
              const DeconvConfig& cfg) {
    if (!img.same_shape(observed)) throw std::invalid_argument("energy: shape mismatch");
    const ScalarImage fit = convolve(img, kernel_image, cfg.rule);
    double data = 0.0;
    for (size_t i = 0; i < fit.pixel_count(); ++i) {
        const double r = fit.data[i] - observed.data[i];
        data += r * r;
    }
    return 0.5 * data + cfg.alpha1 * tv_eps(img, cfg.epsilon_tv) +
           cfg.alpha2 * tv_eps(kernel_image, cfg.epsilon_tv);
}

double energy(const ScalarImage& img, const BlurKernel& kernel, const ScalarImage& observed,
              const DeconvConfig& cfg) {
    return energy(img, kernel.as_image(), observed, cfg);
}

ScalarImage solve_quadratic_dct(const ScalarImage& coeff_spectrum, const ScalarImage& rhs) {
    if (!coeff_spectrum.same_shape(rhs))
        throw std::invalid_argument("solve_quadratic_dct: shape mismatch");
    for (double c : coeff_spectrum.data)
        if (!(c > 0.0)) throw std::invalid_argument("solve_quadratic_dct: nonpositive spectrum");
    ScalarImage coeff = dct2(rhs);
    for (size_t i = 0; i < coeff.pixel_count(); ++i) coeff.data[i] /= coeff_spectrum.data[i];
    return idct2(coeff);
}

ScalarImage image_system_apply(const ScalarImage& x, const BlurKernel& kernel,
                               const ScalarImage& current, const DeconvConfig& cfg) {
    const ScalarImage kimg = kernel.as_image();
    const ScalarImage d = tv_diffusivity(current, cfg.epsilon_tv);
    ScalarImage out = convolve_adjoint(convolve(x, kimg, cfg.rule), kimg, cfg.rule);
    if (cfg.alpha1 > 0.0) {
        const ScalarImage reg = weighted_tv_operator(x, d, cfg.alpha1);
        for (size_t i = 0; i < out.pixel_count(); ++i) out.data[i] += reg.data[i];
    }
    return out;
}

ScalarImage image_step(const BlurKernel& kernel, const ScalarImage& observed,
                       const ScalarImage& current, const DeconvConfig& cfg) {
    if (!current.same_shape(observed)) throw std::invalid_argument("image_step: shape mismatch");
    const int w = observed.width;
    const int h = observed.height;
    const ScalarImage kimg = kernel.as_image();
    const ScalarImage d = tv_diffusivity(current, cfg.epsilon_tv);
    const double d_mean = mean_of(d.data);

    ScalarImage precond_spectrum = dct_blur_symbol(kernel, w, h, cfg.rule);
    const ScalarImage lap = neumann_laplacian_spectrum(w, h);
    for (size_t i = 0; i < precond_spectrum.pixel_count(); ++i) {
        const double s = precond_spectrum.data[i];
        precond_spectrum.data[i] = s * s + cfg.alpha1 * d_mean * lap.data[i];
    }
    floor_spectrum(precond_spectrum);

    const ScalarImage rhs = convolve_adjoint(observed, kimg, cfg.rule);

    auto apply = [&](const std::vector<double>& v) {
        ScalarImage xi(w, h);
        xi.data = v;
        ScalarImage conv = convolve(xi, kimg, cfg.rule);
        ScalarImage out = convolve_adjoint(conv, kimg, cfg.rule);
        if (cfg.alpha1 > 0.0) {
            const ScalarImage reg = weighted_tv_operator(xi, d, cfg.alpha1);
            for (size_t i = 0; i < out.pixel_count(); ++i) out.data[i] += reg.data[i];
        }
        return out.data;
    };
    auto precond = [&](const std::vector<double>& v) {
        ScalarImage r(w, h);
        r.data = v;
        return solve_quadratic_dct(precond_spectrum, r).data;
    };

    PcgResult res = pcg_solve(apply, precond, rhs.data, current.data, cfg.solver_tolerance,
                              cfg.fixed_point_iterations);
    ScalarImage out(w, h);
    out.data = std::move(res.x);
    return out;
}

std::vector<double> kernel_system_apply(const std::vector<double>& h, int size,
                                        const ScalarImage& img, const BlurKernel& current,
                                        const DeconvConfig& cfg) {
    ScalarImage hk(size, size);
    hk.data = h;
    const ScalarImage fit = convolve(img, hk, cfg.rule);
    std::vector<double> out = correlate_to_kernel(fit, img, size, cfg.rule);
    const ScalarImage d = tv_diffusivity(current.as_image(), cfg.epsilon_tv);
    const ScalarImage reg = weighted_tv_operator(hk, d, cfg.alpha2);
    for (size_t i = 0; i < out.size(); ++i) out[i] += reg.data[i];
    return out;
}

std::vector<double> kernel_system_solve(const ScalarImage& img, const ScalarImage& observed,
                                        const BlurKernel& current, const DeconvConfig& cfg) {
    const int size = current.size;
    const std::vector<double> rhs = correlate_to_kernel(observed, img, size, cfg.rule);

    // Scalar data-term preconditioner: the Gram diagonal (sum of img^2 over
    // each shifted support) is near-constant across taps.
    std::vector<double> gram_diag;
    {
        ScalarImage sq(img.width, img.height);
        for (size_t i = 0; i < sq.pixel_count(); ++i) sq.data[i] = img.data[i] * img.data[i];
        gram_diag = correlate_to_kernel(ScalarImage(img.width, img.height, 1.0), sq, size, cfg.rule);
    }
    const ScalarImage dk = tv_diffusivity(current.as_image(), cfg.epsilon_tv);
    ScalarImage precond_spectrum = neumann_laplacian_spectrum(size, size);
    const double dk_mean = mean_of(dk.data);
    const double c0 = std::max(mean_of(gram_diag), 0.0);
    for (auto& v : precond_spectrum.data) v = c0 + cfg.alpha2 * dk_mean * v;
    floor_spectrum(precond_spectrum);

    auto apply = [&](const std::vector<double>& h) {
        return kernel_system_apply(h, size, img, current, cfg);
    };
    auto precond = [&](const std::vector<double>& v) {
        ScalarImage r(size, size);
        r.data = v;
        return solve_quadratic_dct(precond_spectrum, r).data;
    };

    PcgResult res = pcg_solve(apply, precond, rhs, current.weights, cfg.solver_tolerance,
                              cfg.fixed_point_iterations);
    return res.x;
}

KernelStepResult kernel_step(const ScalarImage& img, const ScalarImage& observed,
                             const BlurKernel& current, const DeconvConfig& cfg) {
    if (!img.same_shape(observed)) throw std::invalid_argument("kernel_step: shape mismatch");

    KernelStepResult result;
    double lo = img.data[0], hi = img.data[0];
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
        // Flat image: the data term is insensitive to the kernel shape.
        result.kernel = current;
        result.unprojected = current.weights;
        result.degenerate_input = true;
        return result;
    }

    result.unprojected = kernel_system_solve(img, observed, current, cfg);

    std::vector<double> projected = result.unprojected;
    double sum = 0.0;
    for (auto& w : projected) {
        w = std::max(w, 0.0);
        sum += w;
    }
    if (!(sum > 0.0)) {
        throw solver_error("degenerate projection: all kernel weights clipped to zero");
    }
    for (auto& w : projected) w /= sum;
    result.kernel = BlurKernel(current.size, std::move(projected));
    return result;
}

DeconvResult blind_deconvolve(const ScalarImage& observed, const DeconvConfig& cfg) {
    validate_config(cfg);
    if (cfg.kernel_size > observed.width || cfg.kernel_size > observed.height)
        throw std::invalid_argument("deconv: kernel_size larger than image");

    DeconvResult result;
    result.image = observed;
    result.kernel = BlurKernel::delta(cfg.kernel_size);
    result.energy_trace.push_back(energy(result.image, result.kernel, observed, cfg));

    for (int outer = 0; outer < cfg.outer_iterations; ++outer) {
        // Kernel half-step. With I initialized to the observation the first
        // kernel fit is the meaningful one, so it runs before the image step.
        StepRecord krec;
        krec.is_kernel_step = true;
        krec.energy_before = result.energy_trace.back();
        KernelStepResult ks = kernel_step(result.image, observed, result.kernel, cfg);
        if (ks.degenerate_input) result.kernel_degenerate = true;
        {
            ScalarImage raw(cfg.kernel_size, cfg.kernel_size);
            raw.data = ks.unprojected;
            krec.energy_after_solve = energy(result.image, raw, observed, cfg);
        }
        result.kernel = ks.kernel;
        krec.energy_after_projection = energy(result.image, result.kernel, observed, cfg);
        result.steps.push_back(krec);

        // Image half-step.
        StepRecord irec;
        irec.is_kernel_step = false;
        irec.energy_before = krec.energy_after_projection;
        result.image = image_step(result.kernel, observed, result.image, cfg);
        irec.energy_after_solve = energy(result.image, result.kernel, observed, cfg);
        irec.energy_after_projection = irec.energy_after_solve;
        result.steps.push_back(irec);

        const double prev = result.energy_trace.back();
        result.energy_trace.push_back(irec.energy_after_solve);
        const double decrease = prev - irec.energy_after_solve;
        if (std::abs(decrease) < 1e-6 * std::max(std::abs(prev), 1e-30)) break;
    }
    return result;
}

}  // namespace turbres::deconv
