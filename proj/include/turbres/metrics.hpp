#pragma once

#include <optional>
#include <string>

#include "turbres/deconv.hpp"
#include "turbres/image.hpp"

namespace turbres::metrics {

struct MetricReport {
    double psnr_db = 0.0;
    std::optional<double> mean_endpoint_error_px;
    std::optional<double> kernel_correlation;

    /// key=value lines; absent metrics omitted.
    std::string to_key_values() const;
    static std::string csv_header();
    /// Comma-separated row matching csv_header(); absent metrics are empty cells.
    std::string to_csv_row(const std::string& label) const;
};

/// 10 log10(1 / MSE) for intensities in [0,1]; +infinity when a == b.
double psnr(const ScalarImage& a, const ScalarImage& b);

/// Mean Euclidean distance between displacement vectors.
double mean_endpoint_error(const VectorField& estimated, const VectorField& truth);

/// Normalized cross-correlation at the best integer shift within +-2 px
/// (blind deconvolution carries a translation ambiguity). Supports of
/// different size are compared by zero-padding the smaller one.
double kernel_correlation(const deconv::BlurKernel& a, const deconv::BlurKernel& b);

}  // namespace turbres::metrics
