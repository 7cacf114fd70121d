#include "turbres/transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace turbres {

namespace {

// FFTW plan creation is not thread-safe; execution with the new-array
// interface is. Plans are cached per shape and kind, created once under a
// lock, and reused via fftw_execute_*ated new-array calls. FFTW_UNALIGNED
// keeps new-array execution valid for arbitrary heap buffers.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan r2r(int width, int height, fftw_r2r_kind kind) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_tuple(width, height, static_cast<int>(kind), 0);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<double> in(static_cast<size_t>(width) * height);
        std::vector<double> out(in.size());
        fftw_plan p = fftw_plan_r2r_2d(height, width, in.data(), out.data(), kind, kind,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    fftw_plan dft_r2c(int width, int height) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_tuple(width, height, -1, 1);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<double> in(static_cast<size_t>(width) * height);
        std::vector<fftw_complex> out(static_cast<size_t>(width / 2 + 1) * height);
        fftw_plan p = fftw_plan_dft_r2c_2d(height, width, in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    fftw_plan dft_c2r(int width, int height) {
        std::scoped_lock lock(mutex_);
        auto key = std::make_tuple(width, height, -2, 1);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<fftw_complex> in(static_cast<size_t>(width / 2 + 1) * height);
        std::vector<double> out(static_cast<size_t>(width) * height);
        fftw_plan p = fftw_plan_dft_c2r_2d(height, width, in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

double dct_scale(int k, int n) {
    // Orthonormal DCT-II coefficient scale, folded with FFTW's factor of 2.
    return 0.5 * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
}

}  // namespace

ScalarImage dct2(const ScalarImage& img) {
    ScalarImage out(img.width, img.height);
    fftw_plan p = PlanCache::instance().r2r(img.width, img.height, FFTW_REDFT10);
    std::vector<double> in(img.data);
    fftw_execute_r2r(p, in.data(), out.data.data());
    for (int ky = 0; ky < img.height; ++ky) {
        const double sy = dct_scale(ky, img.height);
        for (int kx = 0; kx < img.width; ++kx) {
            out.at(kx, ky) *= sy * dct_scale(kx, img.width);
        }
    }
    return out;
}

ScalarImage idct2(const ScalarImage& coeff) {
    ScalarImage out(coeff.width, coeff.height);
    std::vector<double> in(coeff.pixel_count());
    for (int ky = 0; ky < coeff.height; ++ky) {
        const double sy = (ky == 0 ? std::sqrt(1.0 / coeff.height) : std::sqrt(1.0 / (2.0 * coeff.height)));
        for (int kx = 0; kx < coeff.width; ++kx) {
            const double sx = (kx == 0 ? std::sqrt(1.0 / coeff.width) : std::sqrt(1.0 / (2.0 * coeff.width)));
            in[static_cast<size_t>(ky) * coeff.width + kx] = coeff.at(kx, ky) * sy * sx;
        }
    }
    fftw_plan p = PlanCache::instance().r2r(coeff.width, coeff.height, FFTW_REDFT01);
    fftw_execute_r2r(p, in.data(), out.data.data());
    return out;
}

double Spectrum::norm2() const {
    // Columns 0 and (for even width) the Nyquist column appear once in the
    // full spectrum; every other stored column stands for itself and its
    // conjugate mirror.
    double acc = 0.0;
    const int cols = spectral_cols();
    for (int ky = 0; ky < height; ++ky) {
        for (int kx = 0; kx < cols; ++kx) {
            const double m = std::norm(at(kx, ky));
            const bool shared = (kx == 0) || (width % 2 == 0 && kx == cols - 1);
            acc += shared ? m : 2.0 * m;
        }
    }
    return std::sqrt(acc);
}

Spectrum fft2_real(const ScalarImage& img) {
    Spectrum spec;
    spec.width = img.width;
    spec.height = img.height;
    spec.coeff.assign(static_cast<size_t>(spec.spectral_cols()) * img.height, {0.0, 0.0});
    fftw_plan p = PlanCache::instance().dft_r2c(img.width, img.height);
    std::vector<double> in(img.data);
    fftw_execute_dft_r2c(p, in.data(), reinterpret_cast<fftw_complex*>(spec.coeff.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(img.pixel_count()));
    for (auto& c : spec.coeff) c *= scale;
    return spec;
}

ScalarImage ifft2_real(const Spectrum& spectrum) {
    if (spectrum.width < 1 || spectrum.height < 1)
        throw std::invalid_argument("ifft2_real: empty spectrum");
    ScalarImage out(spectrum.width, spectrum.height);
    // c2r destroys its input; work on a copy.
    std::vector<std::complex<double>> in(spectrum.coeff);
    fftw_plan p = PlanCache::instance().dft_c2r(spectrum.width, spectrum.height);
    fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in.data()), out.data.data());
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.pixel_count()));
    for (auto& v : out.data) v *= scale;
    return out;
}

ScalarImage neumann_laplacian_spectrum(int width, int height) {
    ScalarImage out(width, height);
    for (int ky = 0; ky < height; ++ky) {
        const double sy = std::sin(0.5 * M_PI * ky / height);
        for (int kx = 0; kx < width; ++kx) {
            const double sx = std::sin(0.5 * M_PI * kx / width);
            out.at(kx, ky) = 4.0 * (sx * sx + sy * sy);
        }
    }
    return out;
}

}  // namespace turbres
