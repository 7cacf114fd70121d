#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "support/test_support.hpp"
#include "turbres/metrics.hpp"
#include "turbres/pipeline.hpp"
#include "turbres/simulate.hpp"

using namespace turbres;
using namespace turbres::pipeline;
namespace ts = turbres::testsupport;

namespace {

// Small, fast configuration for structural tests.
PipelineConfig cheap_config() {
    PipelineConfig cfg;
    cfg.deconv.kernel_size = 5;
    cfg.deconv.outer_iterations = 2;
    cfg.registration.max_iterations = 30;
    return cfg;
}

Sequence warp_only_sequence(const ScalarImage& clean, int frames, uint64_t seed,
                            double amplitude, std::vector<VectorField>* warps = nullptr) {
    sim::SimConfig cfg;
    cfg.seed = seed;
    cfg.frames = frames;
    cfg.warp_amplitude = amplitude;
    cfg.warp_correlation_length = 6.0;
    sim::GroundTruth gt = sim::simulate(clean, cfg);
    if (warps) *warps = gt.warps;
    return gt.degraded;
}

}  // namespace

TEST_CASE("refine_reference is a fixed point on an already-registered sequence") {
    const ScalarImage ref = ts::make_texture_card(24, 24, 1);
    Sequence seq;
    for (int i = 0; i < 3; ++i) seq.frames.push_back(ref);
    const RefineResult rr = refine_reference(seq, ref, cheap_config());
    CHECK(rr.dropped_frames.empty());
    for (const auto& frame : rr.warped.frames)
        for (size_t i = 0; i < frame.pixel_count(); ++i)
            CHECK(frame.data[i] == doctest::Approx(ref.data[i]));
    for (size_t i = 0; i < ref.pixel_count(); ++i)
        CHECK(rr.reference.data[i] == doctest::Approx(ref.data[i]));
}

TEST_CASE("refine_reference of a single frame returns the registered frame") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 2);
    const ScalarImage ref = ts::make_texture_card(24, 24, 2);
    Sequence seq;
    seq.frames.push_back(clean);
    const RefineResult rr = refine_reference(seq, ref, cheap_config());
    REQUIRE(rr.warped.frame_count() == 1);
    for (size_t i = 0; i < ref.pixel_count(); ++i)
        CHECK(rr.reference.data[i] == doctest::Approx(rr.warped.frames[0].data[i]));
}

TEST_CASE("refine_reference improves the reference on a warp-only sequence") {
    const ScalarImage clean = ts::make_texture_card(40, 40, 3);
    const Sequence seq = warp_only_sequence(clean, 7, 21, 1.5);
    PipelineConfig cfg = cheap_config();
    cfg.registration.max_iterations = 120;

    const ScalarImage ref0 = temporal_median(seq);
    const RefineResult rr = refine_reference(seq, ref0, cfg);
    CHECK(rr.dropped_frames.empty());
    const double before = metrics::psnr(ref0, clean);
    const double after = metrics::psnr(rr.reference, clean);
    CHECK(after > before);
}

TEST_CASE("FRD runs one deconvolution and produces K+1 references") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 4);
    const Sequence seq = warp_only_sequence(clean, 3, 31, 1.0);
    PipelineConfig cfg = cheap_config();
    cfg.iterations = 2;
    const PipelineReport report = frd_restore(seq, cfg);
    CHECK(report.deconv_invocations == 1);
    CHECK(report.registration_invocations == 2 * 3);
    CHECK(report.references.size() == 3);
    CHECK(report.per_frame_registration_energies.size() == 2);
    CHECK(report.restored.all_finite());
}

TEST_CASE("DFR runs one deconvolution per frame and K+1 references") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 5);
    const Sequence seq = warp_only_sequence(clean, 4, 41, 1.0);
    PipelineConfig cfg = cheap_config();
    cfg.iterations = 1;
    const PipelineReport report = dfr_restore(seq, cfg);
    CHECK(report.deconv_invocations == 4);
    CHECK(report.registration_invocations == 4);
    CHECK(report.references.size() == 2);
    CHECK(report.restored.all_finite());
}

TEST_CASE("FRD matches a hand-rolled two-frame trace") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 6);
    Sequence seq = warp_only_sequence(clean, 2, 51, 1.0);
    PipelineConfig cfg = cheap_config();
    cfg.iterations = 1;

    const PipelineReport report = frd_restore(seq, cfg);

    const ScalarImage ref0 = temporal_median(seq);
    const auto r0 = reg::register_images(seq.frames[0], ref0, cfg.registration);
    const auto r1 = reg::register_images(seq.frames[1], ref0, cfg.registration);
    Sequence registered;
    registered.frames = {r0.warped, r1.warped};
    const ScalarImage ref1 = temporal_median(registered);

    REQUIRE(report.references.size() == 2);
    for (size_t i = 0; i < ref0.pixel_count(); ++i) {
        CHECK(report.references[0].data[i] == doctest::Approx(ref0.data[i]));
        CHECK(report.references[1].data[i] == doctest::Approx(ref1.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("pipelines are deterministic and independent of the thread count") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 7);
    const Sequence seq = warp_only_sequence(clean, 4, 61, 1.0);
    PipelineConfig cfg = cheap_config();
    const PipelineReport a = frd_restore(seq, cfg, 1);
    const PipelineReport b = frd_restore(seq, cfg, 4);
    for (size_t i = 0; i < a.restored.pixel_count(); ++i)
        CHECK(a.restored.data[i] == b.restored.data[i]);
    const PipelineReport c = dfr_restore(seq, cfg, 1);
    const PipelineReport d = dfr_restore(seq, cfg, 4);
    for (size_t i = 0; i < c.restored.pixel_count(); ++i)
        CHECK(c.restored.data[i] == d.restored.data[i]);
}

TEST_CASE("zero-degradation sequences restore to the clean image") {
    const ScalarImage clean = ts::make_texture_card(32, 32, 8);
    sim::SimConfig scfg;
    scfg.frames = 3;
    const sim::GroundTruth gt = sim::simulate(clean, scfg);

    PipelineConfig cfg = cheap_config();
    cfg.deconv.alpha1 = 1e-5;
    cfg.deconv.alpha2 = 1e-3;
    cfg.deconv.outer_iterations = 3;

    const PipelineReport frd = frd_restore(gt.degraded, cfg);
    CHECK(metrics::psnr(frd.restored, clean) >= 45.0);
    const PipelineReport dfr = dfr_restore(gt.degraded, cfg);
    CHECK(metrics::psnr(dfr.restored, clean) >= 45.0);
}

TEST_CASE("a second refinement round does not hurt the reference on warp-heavy data") {
    const ScalarImage clean = ts::make_texture_card(40, 40, 9);
    const Sequence seq = warp_only_sequence(clean, 6, 71, 2.5);
    PipelineConfig cfg = cheap_config();
    cfg.registration.max_iterations = 120;

    cfg.iterations = 1;
    const PipelineReport k1 = frd_restore(seq, cfg);
    cfg.iterations = 2;
    const PipelineReport k2 = frd_restore(seq, cfg);
    const double p1 = metrics::psnr(k1.references.back(), clean);
    const double p2 = metrics::psnr(k2.references.back(), clean);
    CHECK(p2 >= p1 - 1e-9);
}

TEST_CASE("blur-dominant comparison of DFR and FRD (advisory)") {
    const ScalarImage clean = ts::make_cartoon_card(40, 40);
    sim::SimConfig scfg;
    scfg.seed = 5;
    scfg.frames = 4;
    scfg.blur_sigma = 1.5;
    scfg.warp_amplitude = 0.5;
    scfg.warp_correlation_length = 6.0;
    const sim::GroundTruth gt = sim::simulate(clean, scfg);

    PipelineConfig cfg = cheap_config();
    cfg.deconv.kernel_size = 9;
    cfg.deconv.outer_iterations = 6;
    cfg.deconv.alpha1 = 1e-3;
    cfg.deconv.alpha2 = 0.1;
    cfg.registration.max_iterations = 80;

    const double dfr = metrics::psnr(dfr_restore(gt.degraded, cfg).restored, clean);
    const double frd = metrics::psnr(frd_restore(gt.degraded, cfg).restored, clean);
    // Directional observation, not a hard contract.
    WARN_MESSAGE(dfr >= frd, "DFR (", dfr, " dB) did not beat FRD (", frd, " dB) here");
}

TEST_CASE("pipeline input validation") {
    CHECK_THROWS_AS(frd_restore(Sequence{}, cheap_config()), std::invalid_argument);
    PipelineConfig cfg = cheap_config();
    cfg.iterations = 0;
    Sequence seq;
    seq.frames.push_back(ts::make_texture_card(16, 16, 10));
    CHECK_THROWS_AS(frd_restore(seq, cfg), std::invalid_argument);
}
