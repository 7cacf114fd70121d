#pragma once

#include <string>
#include <vector>

#include "turbres/deconv.hpp"
#include "turbres/diffeo.hpp"
#include "turbres/temporal.hpp"

namespace turbres::pipeline {

enum class ReferenceFilter { Mean, Median };

struct PipelineConfig {
    int iterations = 1;  // the K of the reference-refinement loop
    ReferenceFilter reference_filter = ReferenceFilter::Median;
    deconv::DeconvConfig deconv;
    reg::RegistrationConfig registration;
};

struct RefineResult {
    Sequence warped;
    ScalarImage reference;
    std::vector<double> frame_energies;  // final registration energy per frame
    std::vector<int> dropped_frames;     // frames excluded from the filter
    std::vector<std::string> warnings;
};

/// Register every frame onto `reference`, then recompute the temporal-filter
/// reference from the warped frames. Frames whose registration fails are kept
/// unwarped in the output sequence but excluded from the filter.
RefineResult refine_reference(const Sequence& seq, const ScalarImage& reference,
                              const PipelineConfig& cfg, int threads = 1);

struct PipelineReport {
    ScalarImage restored;
    std::vector<ScalarImage> references;  // K+1 entries
    std::vector<std::vector<double>> per_frame_registration_energies;  // K rows, N columns
    deconv::DeconvResult deconv_result;   // FRD: the final deconvolution; DFR: last frame's
    int deconv_invocations = 0;
    int registration_invocations = 0;
    std::vector<std::string> warnings;
};

/// Filter/Register/Deconvolve: temporal reference, K refinement rounds, one
/// blind deconvolution of the last reference.
PipelineReport frd_restore(const Sequence& seq, const PipelineConfig& cfg, int threads = 1);

/// Deconvolve/Filter/Register: blind deconvolution of every frame first,
/// then temporal reference and K refinement rounds; the restored image is
/// the last reference.
PipelineReport dfr_restore(const Sequence& seq, const PipelineConfig& cfg, int threads = 1);

}  // namespace turbres::pipeline
