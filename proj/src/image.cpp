#include "turbres/image.hpp"

#include <cmath>
#include <stdexcept>

namespace turbres {

ScalarImage::ScalarImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("ScalarImage: dimensions must be >= 1");
    data.assign(static_cast<size_t>(w) * h, fill);
}

bool ScalarImage::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

VectorField::VectorField(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("VectorField: dimensions must be >= 1");
    u.assign(static_cast<size_t>(w) * h, 0.0);
    v.assign(static_cast<size_t>(w) * h, 0.0);
}

bool VectorField::all_finite() const {
    for (double x : u)
        if (!std::isfinite(x)) return false;
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

int boundary_index(int i, int n, BoundaryRule rule) {
    if (i >= 0 && i < n) return i;
    if (rule == BoundaryRule::ClampToEdge) return i < 0 ? 0 : n - 1;
    if (n == 1) return 0;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

double sample_bilinear(const ScalarImage& img, double x, double y, BoundaryRule rule) {
    const double xf = std::floor(x);
    const double yf = std::floor(y);
    const int x0 = static_cast<int>(xf);
    const int y0 = static_cast<int>(yf);
    const double fx = x - xf;
    const double fy = y - yf;

    const int xa = boundary_index(x0, img.width, rule);
    const int xb = boundary_index(x0 + 1, img.width, rule);
    const int ya = boundary_index(y0, img.height, rule);
    const int yb = boundary_index(y0 + 1, img.height, rule);

    const double top = (1.0 - fx) * img.at(xa, ya) + fx * img.at(xb, ya);
    const double bot = (1.0 - fx) * img.at(xa, yb) + fx * img.at(xb, yb);
    return (1.0 - fy) * top + fy * bot;
}

namespace {

// In-cell x-derivative of the interpolant for the cell whose left column is
// cx, at vertical fraction fy between rows y0 and y0+1.
double cell_dx(const ScalarImage& img, int cx, int y0, double fy, BoundaryRule rule) {
    const int xa = boundary_index(cx, img.width, rule);
    const int xb = boundary_index(cx + 1, img.width, rule);
    const int ya = boundary_index(y0, img.height, rule);
    const int yb = boundary_index(y0 + 1, img.height, rule);
    return (1.0 - fy) * (img.at(xb, ya) - img.at(xa, ya)) + fy * (img.at(xb, yb) - img.at(xa, yb));
}

double cell_dy(const ScalarImage& img, int cy, int x0, double fx, BoundaryRule rule) {
    const int ya = boundary_index(cy, img.height, rule);
    const int yb = boundary_index(cy + 1, img.height, rule);
    const int xa = boundary_index(x0, img.width, rule);
    const int xb = boundary_index(x0 + 1, img.width, rule);
    return (1.0 - fx) * (img.at(xa, yb) - img.at(xa, ya)) + fx * (img.at(xb, yb) - img.at(xb, ya));
}

}  // namespace

SampleGrad sample_bilinear_grad(const ScalarImage& img, double x, double y, BoundaryRule rule) {
    const double xf = std::floor(x);
    const double yf = std::floor(y);
    const int x0 = static_cast<int>(xf);
    const int y0 = static_cast<int>(yf);
    const double fx = x - xf;
    const double fy = y - yf;

    SampleGrad g;
    g.value = sample_bilinear(img, x, y, rule);
    if (fx == 0.0) {
        g.dx = 0.5 * (cell_dx(img, x0, y0, fy, rule) + cell_dx(img, x0 - 1, y0, fy, rule));
    } else {
        g.dx = cell_dx(img, x0, y0, fy, rule);
    }
    if (fy == 0.0) {
        g.dy = 0.5 * (cell_dy(img, y0, x0, fx, rule) + cell_dy(img, y0 - 1, x0, fx, rule));
    } else {
        g.dy = cell_dy(img, y0, x0, fx, rule);
    }
    return g;
}

ScalarImage warp(const ScalarImage& img, const VectorField& map, BoundaryRule rule) {
    if (!map.same_shape(img)) throw std::invalid_argument("warp: image/map shape mismatch");
    ScalarImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            out.at(x, y) = sample_bilinear(img, x + map.ux(x, y), y + map.vy(x, y), rule);
        }
    }
    return out;
}

VectorField gradient(const ScalarImage& img) {
    VectorField g(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            g.ux(x, y) = (x + 1 < img.width) ? img.at(x + 1, y) - img.at(x, y) : 0.0;
            g.vy(x, y) = (y + 1 < img.height) ? img.at(x, y + 1) - img.at(x, y) : 0.0;
        }
    }
    return g;
}

ScalarImage divergence(const VectorField& field) {
    const int w = field.width;
    const int h = field.height;
    ScalarImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double div = 0.0;
            if (w > 1) {
                if (x == 0)
                    div += field.ux(0, y);
                else if (x == w - 1)
                    div += -field.ux(w - 2, y);
                else
                    div += field.ux(x, y) - field.ux(x - 1, y);
            }
            if (h > 1) {
                if (y == 0)
                    div += field.vy(x, 0);
                else if (y == h - 1)
                    div += -field.vy(x, h - 2);
                else
                    div += field.vy(x, y) - field.vy(x, y - 1);
            }
            out.at(x, y) = div;
        }
    }
    return out;
}

namespace {

void check_kernel_shape(const ScalarImage& img, const ScalarImage& kernel) {
    if (kernel.width % 2 == 0 || kernel.height % 2 == 0)
        throw std::invalid_argument("convolve: kernel side lengths must be odd");
    if (kernel.width > img.width || kernel.height > img.height)
        throw std::invalid_argument("convolve: kernel larger than image");
}

}  // namespace

ScalarImage convolve(const ScalarImage& img, const ScalarImage& kernel, BoundaryRule rule) {
    check_kernel_shape(img, kernel);
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    ScalarImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const bool interior = x >= rx && x + rx < img.width && y >= ry && y + ry < img.height;
            double acc = 0.0;
            if (interior) {
                for (int t = -ry; t <= ry; ++t)
                    for (int s = -rx; s <= rx; ++s)
                        acc += kernel.at(rx + s, ry + t) * img.at(x - s, y - t);
            } else {
                for (int t = -ry; t <= ry; ++t) {
                    const int yy = boundary_index(y - t, img.height, rule);
                    for (int s = -rx; s <= rx; ++s) {
                        const int xx = boundary_index(x - s, img.width, rule);
                        acc += kernel.at(rx + s, ry + t) * img.at(xx, yy);
                    }
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

ScalarImage convolve_adjoint(const ScalarImage& img, const ScalarImage& kernel, BoundaryRule rule) {
    check_kernel_shape(img, kernel);
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    ScalarImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double val = img.at(x, y);
            if (val == 0.0) continue;
            for (int t = -ry; t <= ry; ++t) {
                const int yy = boundary_index(y - t, img.height, rule);
                for (int s = -rx; s <= rx; ++s) {
                    const int xx = boundary_index(x - s, img.width, rule);
                    out.at(xx, yy) += kernel.at(rx + s, ry + t) * val;
                }
            }
        }
    }
    return out;
}

}  // namespace turbres
