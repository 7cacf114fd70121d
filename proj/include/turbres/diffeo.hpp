#pragma once

#include <string>
#include <vector>

#include "turbres/image.hpp"

namespace turbres::reg {

/// Discretization of t -> v_t on T uniform steps, dt = 1/T.
struct TimeVaryingVelocity {
    std::vector<VectorField> steps;

    static TimeVaryingVelocity zeros(int width, int height, int time_steps);
    int time_steps() const { return static_cast<int>(steps.size()); }
    double dt() const { return 1.0 / static_cast<double>(steps.size()); }
};

/// Parameters of the Cauchy-Navier operator L = -alpha Laplacian + gamma.
struct CauchyNavierParams {
    double alpha = 0.01;
    double gamma = 0.7;
};

/// Empirical recommended box (alpha, gamma) in [0.01,0.3] x [0.1,1] with
/// alpha < gamma. Violations warn, they do not fail.
std::vector<std::string> parameter_box_warnings(const CauchyNavierParams& params);

struct RegistrationConfig {
    CauchyNavierParams params;
    double data_weight = 20000.0;  // the C in front of the matching term
    int time_steps = 10;
    double step_size = 1.0;  // initial descent step, adapted by backtracking
    int max_iterations = 200;
    double convergence_tol = 1e-6;     // relative energy decrease
    double diffeo_tolerance_px = 0.1;  // forward-inverse composition budget
};

struct RegistrationResult {
    TimeVaryingVelocity velocity;
    VectorField forward_map;  // displacement of phi_{0,T}
    VectorField inverse_map;  // displacement of phi_{T,0}
    ScalarImage warped;       // moving image composed with phi_{T,0}
    std::vector<double> energy_trace;
    std::vector<std::string> warnings;
};

/// <Lf, Lg>_{L2} computed spectrally: multiplier (gamma + alpha*lambda_k)
/// per DCT frequency and channel, lambda_k the Neumann Laplacian symbol.
double cn_inner_product(const VectorField& f, const VectorField& g,
                        const CauchyNavierParams& params);

/// (L^T L) f, applied spectrally. Inverse of smooth_gradient.
VectorField cn_normal_apply(const VectorField& f, const CauchyNavierParams& params);

/// K = (L^T L)^{-1}: per-frequency division by (gamma + alpha*lambda_k)^2.
VectorField smooth_gradient(const VectorField& raw_gradient, const CauchyNavierParams& params);

enum class FlowDirection {
    Forward,   // phi_{0,T}
    Backward,  // phi_{T,0}
};

/// Semi-Lagrangian integration of dphi/dt = v_t(phi); returns the endpoint
/// displacement field. Zero velocity yields zero displacement.
VectorField integrate_flow(const TimeVaryingVelocity& vel, FlowDirection direction);

/// E(v) = 1/2 sum_t dt ||v_t||_V^2 + (C/2) ||moving o phi_{T,0} - reference||^2.
double registration_energy(const TimeVaryingVelocity& vel, const ScalarImage& moving,
                           const ScalarImage& reference, const RegistrationConfig& cfg);

/// Sobolev gradient of the discrete energy, one field per time step:
/// grad_t = v_t + K(dE_data/dv_t)/dt. The data part is the exact adjoint of
/// the discrete flow, so it matches finite differences of
/// registration_energy to solver precision.
TimeVaryingVelocity energy_gradient(const TimeVaryingVelocity& vel, const ScalarImage& moving,
                                    const ScalarImage& reference, const RegistrationConfig& cfg);

/// dt-weighted V inner product on time-varying velocities (the metric the
/// energy and gradient are expressed in).
double velocity_inner_product(const TimeVaryingVelocity& a, const TimeVaryingVelocity& b,
                              const CauchyNavierParams& params);

/// Steepest descent from v = 0 with halving backtracking; the energy trace
/// is strictly non-increasing. Throws solver_error if no decrease exists at
/// the very first iteration despite a nonzero gradient.
RegistrationResult register_images(const ScalarImage& moving, const ScalarImage& reference,
                                   const RegistrationConfig& cfg);

/// Displacement of (id + outer) composed with (id + inner).
VectorField compose_displacements(const VectorField& outer, const VectorField& inner);

/// Jacobian determinant of x + displacement(x), central differences in the
/// interior, one-sided at the border.
ScalarImage jacobian_determinant(const VectorField& displacement);

}  // namespace turbres::reg
