#pragma once

#include <complex>
#include <vector>

#include "turbres/image.hpp"

namespace turbres {

/// Orthonormal 2D DCT-II. Parseval holds: ||dct2(x)||_2 == ||x||_2.
ScalarImage dct2(const ScalarImage& img);

/// Inverse of dct2 (orthonormal DCT-III).
ScalarImage idct2(const ScalarImage& coeff);

/// Half-plane spectrum of a real image (Hermitian symmetry implied).
/// Storage is height rows by (width/2 + 1) columns, row-major.
struct Spectrum {
    int width = 0;   // logical image width
    int height = 0;  // logical image height
    std::vector<std::complex<double>> coeff;

    int spectral_cols() const { return width / 2 + 1; }
    std::complex<double>& at(int kx, int ky) {
        return coeff[static_cast<size_t>(ky) * spectral_cols() + kx];
    }
    std::complex<double> at(int kx, int ky) const {
        return coeff[static_cast<size_t>(ky) * spectral_cols() + kx];
    }
    /// 2-norm over the full (logically expanded) spectrum.
    double norm2() const;
};

/// Orthonormal real-input 2D DFT and its inverse (scaling 1/sqrt(w*h) each way).
Spectrum fft2_real(const ScalarImage& img);
ScalarImage ifft2_real(const Spectrum& spectrum);

/// DCT-domain symbol of the Neumann Laplacian G^T G built from gradient() /
/// divergence(): lambda(kx,ky) = 4 sin^2(pi kx / 2w) + 4 sin^2(pi ky / 2h).
ScalarImage neumann_laplacian_spectrum(int width, int height);

}  // namespace turbres
