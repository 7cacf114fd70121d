#include "turbres/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace turbres::metrics {

namespace {

std::string format_value(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

}  // namespace

std::string MetricReport::to_key_values() const {
    std::ostringstream out;
    out << "psnr_db=" << format_value(psnr_db) << "\n";
    if (mean_endpoint_error_px)
        out << "mean_endpoint_error_px=" << format_value(*mean_endpoint_error_px) << "\n";
    if (kernel_correlation)
        out << "kernel_correlation=" << format_value(*kernel_correlation) << "\n";
    return out.str();
}

std::string MetricReport::csv_header() {
    return "label,psnr_db,mean_endpoint_error_px,kernel_correlation";
}

std::string MetricReport::to_csv_row(const std::string& label) const {
    std::ostringstream out;
    out << label << "," << format_value(psnr_db) << ",";
    if (mean_endpoint_error_px) out << format_value(*mean_endpoint_error_px);
    out << ",";
    if (kernel_correlation) out << format_value(*kernel_correlation);
    return out.str();
}

double psnr(const ScalarImage& a, const ScalarImage& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixel_count());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double mean_endpoint_error(const VectorField& estimated, const VectorField& truth) {
    if (!estimated.same_shape(truth))
        throw std::invalid_argument("mean_endpoint_error: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < estimated.pixel_count(); ++i) {
        acc += std::hypot(estimated.u[i] - truth.u[i], estimated.v[i] - truth.v[i]);
    }
    return acc / static_cast<double>(estimated.pixel_count());
}

double kernel_correlation(const deconv::BlurKernel& a, const deconv::BlurKernel& b) {
    const int size = std::max(a.size, b.size);
    auto padded = [size](const deconv::BlurKernel& k) {
        ScalarImage img(size, size);
        const int off = (size - k.size) / 2;
        for (int y = 0; y < k.size; ++y)
            for (int x = 0; x < k.size; ++x) img.at(x + off, y + off) = k.at(x, y);
        return img;
    };
    const ScalarImage pa = padded(a);
    const ScalarImage pb = padded(b);

    double na = 0.0, nb = 0.0;
    for (double v : pa.data) na += v * v;
    for (double v : pb.data) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;

    double best = -1.0;
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            double cross = 0.0;
            for (int y = 0; y < size; ++y) {
                const int yb = y + dy;
                if (yb < 0 || yb >= size) continue;
                for (int x = 0; x < size; ++x) {
                    const int xb = x + dx;
                    if (xb < 0 || xb >= size) continue;
                    cross += pa.at(x, y) * pb.at(xb, yb);
                }
            }
            best = std::max(best, cross / std::sqrt(na * nb));
        }
    }
    return std::clamp(best, -1.0, 1.0);
}

}  // namespace turbres::metrics
