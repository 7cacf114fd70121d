#include <doctest.h>

#include <cmath>
#include <complex>

#include "support/test_support.hpp"
#include "turbres/rng.hpp"
#include "turbres/transforms.hpp"

using namespace turbres;

namespace {

ScalarImage random_image(int w, int h, uint64_t seed) {
    ScalarImage img(w, h);
    CounterRng rng(seed, 0);
    for (auto& v : img.data) v = rng.next_unit() - 0.5;
    return img;
}

double norm2(const ScalarImage& img) {
    double acc = 0.0;
    for (double v : img.data) acc += v * v;
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("dct2 of a constant image has a single DC coefficient c*sqrt(n*m)") {
    const int w = 12, h = 8;
    const double c = 0.42;
    const ScalarImage img(w, h, c);
    const ScalarImage coeff = dct2(img);
    CHECK(coeff.at(0, 0) == doctest::Approx(c * std::sqrt(double(w) * h)).epsilon(1e-12));
    for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx)
            if (kx || ky) CHECK(std::abs(coeff.at(kx, ky)) < 1e-12);
}

TEST_CASE("idct2(dct2(x)) round-trips to 1e-10") {
    const ScalarImage img = random_image(32, 32, 7);
    const ScalarImage back = idct2(dct2(img));
    double max_err = 0.0;
    for (size_t i = 0; i < img.pixel_count(); ++i)
        max_err = std::max(max_err, std::abs(back.data[i] - img.data[i]));
    CHECK(max_err < 1e-10);
}

TEST_CASE("dct2 preserves the 2-norm") {
    const ScalarImage img = random_image(17, 23, 9);
    const double a = norm2(img);
    const double b = norm2(dct2(img));
    CHECK(b == doctest::Approx(a).epsilon(1e-10));
}

TEST_CASE("fft2_real of a delta has flat magnitude") {
    ScalarImage img(16, 16);
    img.at(0, 0) = 1.0;
    const Spectrum spec = fft2_real(img);
    const double expected = 1.0 / 16.0;  // 1/sqrt(256)
    for (int ky = 0; ky < 16; ++ky)
        for (int kx = 0; kx < spec.spectral_cols(); ++kx)
            CHECK(std::abs(spec.at(kx, ky)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ifft2_real(fft2_real(x)) round-trips to 1e-10") {
    for (auto [w, h] : {std::pair{32, 32}, std::pair{15, 22}}) {
        const ScalarImage img = random_image(w, h, 11);
        const ScalarImage back = ifft2_real(fft2_real(img));
        double max_err = 0.0;
        for (size_t i = 0; i < img.pixel_count(); ++i)
            max_err = std::max(max_err, std::abs(back.data[i] - img.data[i]));
        CHECK(max_err < 1e-10);
    }
}

TEST_CASE("fft2_real preserves the 2-norm") {
    const ScalarImage img = random_image(20, 14, 13);
    CHECK(fft2_real(img).norm2() == doctest::Approx(norm2(img)).epsilon(1e-10));
}

TEST_CASE("convolution theorem: spectra product matches periodic convolution") {
    const int n = 16;
    const ScalarImage a = random_image(n, n, 15);
    const ScalarImage b = random_image(n, n, 16);

    // Spatial periodic convolution oracle.
    ScalarImage oracle(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int t = 0; t < n; ++t)
                for (int s = 0; s < n; ++s)
                    acc += a.at(s, t) * b.at(((x - s) % n + n) % n, ((y - t) % n + n) % n);
            oracle.at(x, y) = acc;
        }

    Spectrum fa = fft2_real(a);
    const Spectrum fb = fft2_real(b);
    for (size_t i = 0; i < fa.coeff.size(); ++i) fa.coeff[i] *= fb.coeff[i];
    ScalarImage conv = ifft2_real(fa);
    // Orthonormal scaling introduces a sqrt(n*m) factor in the theorem.
    const double scale = std::sqrt(static_cast<double>(n) * n);
    for (auto& v : conv.data) v *= scale;

    for (size_t i = 0; i < conv.pixel_count(); ++i)
        CHECK(conv.data[i] == doctest::Approx(oracle.data[i]).epsilon(1e-10));
}

TEST_CASE("neumann laplacian spectrum matches the materialized operator eigenvalues") {
    // G^T G applied to a DCT-II basis vector must equal lambda_k times it.
    const int n = 8;
    const ScalarImage lambda = neumann_laplacian_spectrum(n, 1);
    for (int k = 0; k < n; ++k) {
        ScalarImage basis(n, 1);
        for (int x = 0; x < n; ++x)
            basis.at(x, 0) = std::cos(M_PI * k * (2.0 * x + 1.0) / (2.0 * n));
        const VectorField g = gradient(basis);
        VectorField gg = g;
        const ScalarImage gtg_neg = divergence(gg);  // div grad = -G^T G
        for (int x = 0; x < n; ++x)
            CHECK(-gtg_neg.at(x, 0) ==
                  doctest::Approx(lambda.at(k, 0) * basis.at(x, 0)).epsilon(1e-12));
    }
}
