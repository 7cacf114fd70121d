#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbres/image.hpp"

namespace turbres::testsupport {

/// Piecewise-constant cartoon card (flat background, rectangle, disk, bar)
/// with a flat margin band; the TV-friendly deconvolution target.
ScalarImage make_cartoon_card(int width, int height);

/// Smoothly textured card with detail everywhere (sum of bounded random
/// sinusoids over a ramp); the registration target.
ScalarImage make_texture_card(int width, int height, uint64_t seed = 7);

/// Dense Gaussian elimination with partial pivoting; a is row-major n x n.
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b, int n);

/// Inverse displacement of (id + w) via fixed-point iteration, so that
/// composing the two is the identity up to the iteration tolerance.
VectorField invert_displacement(const VectorField& w, int iterations = 80);

/// Mean |values| helper for displacement statistics.
double mean_magnitude(const VectorField& f);

int run_command(const std::string& cmd);
int run_command_capture(const std::string& cmd, std::string& output);

/// Byte-wise file equality.
bool files_identical(const std::string& a, const std::string& b);

std::string make_temp_dir(const std::string& tag);

}  // namespace turbres::testsupport
