#include "turbres/pipeline.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "turbres/errors.hpp"
#include "turbres/parallel.hpp"

namespace turbres::pipeline {

namespace {

ScalarImage apply_filter(const Sequence& seq, ReferenceFilter filter) {
    return filter == ReferenceFilter::Median ? temporal_median(seq) : temporal_mean(seq);
}

ScalarImage filter_excluding(const Sequence& seq, const std::vector<int>& dropped,
                             ReferenceFilter filter) {
    if (dropped.empty()) return apply_filter(seq, filter);
    Sequence kept;
    for (int n = 0; n < seq.frame_count(); ++n) {
        bool skip = false;
        for (int d : dropped) skip = skip || (d == n);
        if (!skip) kept.frames.push_back(seq.frames[static_cast<size_t>(n)]);
    }
    if (kept.frames.empty())
        throw solver_error("refine_reference: every frame failed registration");
    return apply_filter(kept, filter);
}

void check_sequence(const Sequence& seq) {
    if (seq.frames.empty()) throw std::invalid_argument("pipeline: empty sequence");
    if (!seq.shapes_consistent())
        throw std::invalid_argument("pipeline: frames differ in shape");
}

}  // namespace

RefineResult refine_reference(const Sequence& seq, const ScalarImage& reference,
                              const PipelineConfig& cfg, int threads) {
    check_sequence(seq);
    if (!seq.frames.front().same_shape(reference))
        throw std::invalid_argument("refine_reference: reference shape mismatch");

    const int n = seq.frame_count();
    RefineResult result;
    result.warped.frames.assign(seq.frames.begin(), seq.frames.end());
    result.frame_energies.assign(static_cast<size_t>(n),
                                 std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(static_cast<size_t>(n));

    parallel_for(n, threads, [&](int i) {
        try {
            reg::RegistrationResult rr =
                reg::register_images(seq.frames[static_cast<size_t>(i)], reference, cfg.registration);
            result.warped.frames[static_cast<size_t>(i)] = std::move(rr.warped);
            result.frame_energies[static_cast<size_t>(i)] = rr.energy_trace.back();
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(i)] = e.what();
        }
    });

    for (int i = 0; i < n; ++i) {
        if (!errors[static_cast<size_t>(i)].empty()) {
            result.dropped_frames.push_back(i);
            result.warnings.push_back("frame " + std::to_string(i) +
                                      " dropped: " + errors[static_cast<size_t>(i)]);
        }
    }
    result.reference = filter_excluding(result.warped, result.dropped_frames, cfg.reference_filter);
    return result;
}

PipelineReport frd_restore(const Sequence& seq, const PipelineConfig& cfg, int threads) {
    check_sequence(seq);
    if (cfg.iterations < 1) throw std::invalid_argument("pipeline: iterations must be >= 1");

    PipelineReport report;
    report.references.push_back(apply_filter(seq, cfg.reference_filter));
    for (int k = 0; k < cfg.iterations; ++k) {
        RefineResult rr = refine_reference(seq, report.references.back(), cfg, threads);
        report.registration_invocations += seq.frame_count();
        report.per_frame_registration_energies.push_back(std::move(rr.frame_energies));
        report.warnings.insert(report.warnings.end(), rr.warnings.begin(), rr.warnings.end());
        report.references.push_back(std::move(rr.reference));
    }
    report.deconv_result = deconv::blind_deconvolve(report.references.back(), cfg.deconv);
    report.deconv_invocations = 1;
    report.restored = report.deconv_result.image;
    return report;
}

PipelineReport dfr_restore(const Sequence& seq, const PipelineConfig& cfg, int threads) {
    check_sequence(seq);
    if (cfg.iterations < 1) throw std::invalid_argument("pipeline: iterations must be >= 1");

    PipelineReport report;
    const int n = seq.frame_count();
    std::vector<deconv::DeconvResult> results(static_cast<size_t>(n));
    std::vector<std::string> errors(static_cast<size_t>(n));
    parallel_for(n, threads, [&](int i) {
        try {
            results[static_cast<size_t>(i)] =
                deconv::blind_deconvolve(seq.frames[static_cast<size_t>(i)], cfg.deconv);
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(i)] = e.what();
        }
    });
    report.deconv_invocations = n;

    Sequence sharpened;
    for (int i = 0; i < n; ++i) {
        if (errors[static_cast<size_t>(i)].empty()) {
            sharpened.frames.push_back(std::move(results[static_cast<size_t>(i)].image));
            report.deconv_result.kernel = results[static_cast<size_t>(i)].kernel;
            report.deconv_result.energy_trace = results[static_cast<size_t>(i)].energy_trace;
            report.deconv_result.steps = results[static_cast<size_t>(i)].steps;
        } else {
            report.warnings.push_back("frame " + std::to_string(i) +
                                      " dropped before filtering: " + errors[static_cast<size_t>(i)]);
        }
    }
    if (sharpened.frames.empty()) throw solver_error("dfr: every frame failed deconvolution");
    report.deconv_result.image = sharpened.frames.back();

    report.references.push_back(apply_filter(sharpened, cfg.reference_filter));
    for (int k = 0; k < cfg.iterations; ++k) {
        RefineResult rr = refine_reference(sharpened, report.references.back(), cfg, threads);
        report.registration_invocations += sharpened.frame_count();
        report.per_frame_registration_energies.push_back(std::move(rr.frame_energies));
        report.warnings.insert(report.warnings.end(), rr.warnings.begin(), rr.warnings.end());
        report.references.push_back(std::move(rr.reference));
    }
    report.restored = report.references.back();
    return report;
}

}  // namespace turbres::pipeline
