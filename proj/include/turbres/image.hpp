#pragma once

#include <cstddef>
#include <vector>

namespace turbres {

/// Boundary handling for sampling, differential operators and convolution.
/// SymmetricReflect is half-sample symmetric (index -1 maps to 0), the
/// extension under which convolution matrices are DCT-diagonalizable.
enum class BoundaryRule {
    SymmetricReflect,
    ClampToEdge,
};

/// 2D grid of real intensities, row-major. Frames, kernels and references
/// all live in this type; intensities are nominally in [0,1] but values are
/// not clamped outside file I/O.
struct ScalarImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    ScalarImage() = default;
    ScalarImage(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t pixel_count() const { return data.size(); }
    bool same_shape(const ScalarImage& other) const {
        return width == other.width && height == other.height;
    }
    bool all_finite() const;
};

/// 2D grid of 2-vectors (x-displacement u, y-displacement v), row-major.
struct VectorField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;

    VectorField() = default;
    VectorField(int w, int h);

    double& ux(int x, int y) { return u[static_cast<size_t>(y) * width + x]; }
    double ux(int x, int y) const { return u[static_cast<size_t>(y) * width + x]; }
    double& vy(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
    double vy(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }

    size_t pixel_count() const { return u.size(); }
    bool same_shape(const VectorField& other) const {
        return width == other.width && height == other.height;
    }
    bool same_shape(const ScalarImage& img) const {
        return width == img.width && height == img.height;
    }
    bool all_finite() const;
};

/// Map an out-of-range index into [0, n) under the given rule.
int boundary_index(int i, int n, BoundaryRule rule);

double sample_bilinear(const ScalarImage& img, double x, double y, BoundaryRule rule);

/// Value and spatial derivative of the bilinear interpolant. At exactly
/// integral coordinates the interpolant has a kink; the derivative returned
/// is the mean of the two one-sided cell derivatives (a central difference),
/// which is what a symmetric finite difference of the interpolant measures.
struct SampleGrad {
    double value;
    double dx;
    double dy;
};
SampleGrad sample_bilinear_grad(const ScalarImage& img, double x, double y, BoundaryRule rule);

/// output(x,y) = img(x + map.u(x,y), y + map.v(x,y)) via bilinear sampling.
ScalarImage warp(const ScalarImage& img, const VectorField& map, BoundaryRule rule);

/// Forward differences; the last column (resp. row) is zero, consistent with
/// symmetric reflection.
VectorField gradient(const ScalarImage& img);

/// Exact negative adjoint of gradient(): <gradient(a), b> = -<a, divergence(b)>
/// holds in exact arithmetic.
ScalarImage divergence(const VectorField& field);

/// True convolution (kernel flipped), output shaped like img. Kernel side
/// lengths must be odd and no larger than the image.
ScalarImage convolve(const ScalarImage& img, const ScalarImage& kernel, BoundaryRule rule);

/// Exact adjoint of convolve() in its image argument.
ScalarImage convolve_adjoint(const ScalarImage& img, const ScalarImage& kernel, BoundaryRule rule);

}  // namespace turbres
