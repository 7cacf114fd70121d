#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>

#include "support/test_support.hpp"
#include "turbres/image_io.hpp"
#include "turbres/metrics.hpp"
#include "turbres/simulate.hpp"

using namespace turbres;
using namespace turbres::sim;
namespace ts = turbres::testsupport;

TEST_CASE("identity configuration reproduces the clean image") {
    const ScalarImage clean = ts::make_texture_card(24, 24);
    SimConfig cfg;
    cfg.frames = 3;
    const GroundTruth gt = simulate(clean, cfg);
    REQUIRE(gt.degraded.frame_count() == 3);
    for (const auto& frame : gt.degraded.frames)
        for (size_t i = 0; i < frame.pixel_count(); ++i)
            CHECK(frame.data[i] == clean.data[i]);
}

TEST_CASE("blur-only degradation equals the direct convolution") {
    const ScalarImage clean = ts::make_cartoon_card(32, 32);
    SimConfig cfg;
    cfg.frames = 1;
    cfg.blur_sigma = 1.5;
    const GroundTruth gt = simulate(clean, cfg);
    const ScalarImage expected =
        convolve(clean, gt.kernel.as_image(), BoundaryRule::SymmetricReflect);
    for (size_t i = 0; i < expected.pixel_count(); ++i)
        CHECK(gt.degraded.frames[0].data[i] == expected.data[i]);
    CHECK(gt.kernel.size == default_kernel_size(1.5));
}

TEST_CASE("fixed seeds give bit-identical simulations") {
    const ScalarImage clean = ts::make_texture_card(20, 20);
    SimConfig cfg;
    cfg.seed = 42;
    cfg.frames = 4;
    cfg.blur_sigma = 1.0;
    cfg.warp_amplitude = 2.0;
    cfg.warp_correlation_length = 5.0;
    cfg.noise_sigma = 0.01;
    const GroundTruth a = simulate(clean, cfg);
    const GroundTruth b = simulate(clean, cfg);
    for (int n = 0; n < 4; ++n) {
        for (size_t i = 0; i < a.degraded.frames[n].pixel_count(); ++i)
            CHECK(a.degraded.frames[n].data[i] == b.degraded.frames[n].data[i]);
        for (size_t i = 0; i < a.warps[n].pixel_count(); ++i) {
            CHECK(a.warps[n].u[i] == b.warps[n].u[i]);
            CHECK(a.warps[n].v[i] == b.warps[n].v[i]);
        }
    }
}

TEST_CASE("degraded frames decompose as warp(blur(clean)) + noise") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 3);
    SimConfig cfg;
    cfg.seed = 7;
    cfg.frames = 2;
    cfg.blur_sigma = 1.2;
    cfg.warp_amplitude = 1.5;
    cfg.noise_sigma = 0.0;  // makes the composition exact
    const GroundTruth gt = simulate(clean, cfg);
    const ScalarImage blurred = convolve(clean, gt.kernel.as_image(), BoundaryRule::SymmetricReflect);
    for (int n = 0; n < 2; ++n) {
        const ScalarImage expected = warp(blurred, gt.warps[n], BoundaryRule::SymmetricReflect);
        for (size_t i = 0; i < expected.pixel_count(); ++i)
            CHECK(gt.degraded.frames[n].data[i] == expected.data[i]);
    }
}

TEST_CASE("gaussian_kernel basics") {
    CHECK_THROWS_AS(gaussian_kernel(1.0, 6), std::invalid_argument);

    const auto delta = gaussian_kernel(0.0, 5);
    CHECK(delta.at(2, 2) == 1.0);
    CHECK(delta.weight_sum() == doctest::Approx(1.0));

    const auto g = gaussian_kernel(1.7, 11);
    CHECK(std::abs(g.weight_sum() - 1.0) < 1e-12);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 11; ++x) {
            CHECK(g.at(x, y) == doctest::Approx(g.at(y, 10 - x)).epsilon(1e-12));  // 90 degrees
            CHECK(g.at(x, y) == doctest::Approx(g.at(10 - x, y)).epsilon(1e-12));
        }
}

TEST_CASE("gaussian_kernel center weight matches the closed-form evaluation") {
    const auto g = gaussian_kernel(1.0, 7);
    double sum = 0.0;
    for (int t = -3; t <= 3; ++t)
        for (int s = -3; s <= 3; ++s) sum += std::exp(-0.5 * (s * s + t * t));
    CHECK(g.at(3, 3) == doctest::Approx(1.0 / sum).epsilon(1e-12));
}

TEST_CASE("warps honor the amplitude contract and are mean-free") {
    const ScalarImage clean = ts::make_texture_card(48, 48, 5);
    SimConfig cfg;
    cfg.seed = 11;
    cfg.frames = 3;
    cfg.warp_amplitude = 2.0;
    cfg.warp_correlation_length = 6.0;
    const GroundTruth gt = simulate(clean, cfg);
    for (const auto& w : gt.warps) {
        double max_mag = 0.0, mean_u = 0.0, mean_v = 0.0;
        for (size_t i = 0; i < w.pixel_count(); ++i) {
            max_mag = std::max(max_mag, std::hypot(w.u[i], w.v[i]));
            mean_u += w.u[i];
            mean_v += w.v[i];
        }
        mean_u /= static_cast<double>(w.pixel_count());
        mean_v /= static_cast<double>(w.pixel_count());
        CHECK(max_mag == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(std::hypot(mean_u, mean_v) < 0.1);
    }
}

TEST_CASE("frames draw from independent substreams") {
    const ScalarImage clean = ts::make_texture_card(24, 24, 6);
    SimConfig cfg;
    cfg.seed = 13;
    cfg.frames = 2;
    cfg.warp_amplitude = 1.0;
    const GroundTruth gt = simulate(clean, cfg);
    double diff = 0.0;
    for (size_t i = 0; i < gt.warps[0].pixel_count(); ++i)
        diff += std::abs(gt.warps[0].u[i] - gt.warps[1].u[i]);
    CHECK(diff > 1e-3);
}

TEST_CASE("ground truth directory layout round-trips") {
    const ScalarImage clean = ts::make_cartoon_card(24, 24);
    SimConfig cfg;
    cfg.seed = 99;
    cfg.frames = 2;
    cfg.blur_sigma = 1.0;
    cfg.warp_amplitude = 1.0;
    const GroundTruth gt = simulate(clean, cfg);
    const std::string dir = ts::make_temp_dir("sim_layout");
    write_ground_truth(gt, cfg, dir);

    namespace fs = std::filesystem;
    for (const char* f : {"clean.png", "kernel.pgm", "manifest.txt", "frame_0000.png",
                          "frame_0001.png", "warp_0000.flo", "warp_0001.flo"})
        CHECK(fs::exists(fs::path(dir) / f));

    const auto manifest = read_manifest(dir + "/manifest.txt");
    CHECK(manifest.at("seed") == "99");
    CHECK(manifest.at("frames") == "2");
    CHECK(manifest.at("width") == "24");

    const auto kernel = read_kernel_pgm(dir + "/kernel.pgm");
    CHECK(metrics::kernel_correlation(kernel, gt.kernel) > 0.9999);

    const VectorField w0 = read_flow_field(dir + "/warp_0000.flo");
    CHECK(metrics::mean_endpoint_error(w0, gt.warps[0]) < 1e-5);
}
