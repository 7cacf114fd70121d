#include "turbres/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "turbres/errors.hpp"
#include "turbres/transforms.hpp"

namespace turbres::reg {

namespace {

constexpr BoundaryRule kTransportRule = BoundaryRule::ClampToEdge;

// Multiplier of L = -alpha Laplacian + gamma per DCT frequency. The Laplacian
// symbol is scaled to the unit square (grid spacing 1/width, 1/height) so the
// documented (alpha, gamma) ranges keep their meaning at any resolution; with
// pixel-unit spacing the alpha term would be negligible against gamma and the
// velocity field would be free to develop pixel-scale noise.
ScalarImage cn_multiplier(int width, int height, const CauchyNavierParams& params) {
    ScalarImage m(width, height);
    for (int ky = 0; ky < height; ++ky) {
        const double sy = std::sin(0.5 * M_PI * ky / height);
        for (int kx = 0; kx < width; ++kx) {
            const double sx = std::sin(0.5 * M_PI * kx / width);
            const double lambda = 4.0 * (static_cast<double>(width) * width * sx * sx +
                                         static_cast<double>(height) * height * sy * sy);
            m.at(kx, ky) = params.gamma + params.alpha * lambda;
        }
    }
    return m;
}

VectorField spectral_scale(const VectorField& f, const ScalarImage& factor) {
    VectorField out(f.width, f.height);
    ScalarImage ch(f.width, f.height);

    ch.data = f.u;
    ScalarImage hat = dct2(ch);
    for (size_t i = 0; i < hat.pixel_count(); ++i) hat.data[i] *= factor.data[i];
    out.u = idct2(hat).data;

    ch.data = f.v;
    hat = dct2(ch);
    for (size_t i = 0; i < hat.pixel_count(); ++i) hat.data[i] *= factor.data[i];
    out.v = idct2(hat).data;
    return out;
}

// Backward-map displacements d_k of phi_{t_k,0} for k = 0..T, built by the
// semi-Lagrangian recursion d_{k+1}(x) = d_k(x - dt v_k(x)) - dt v_k(x).
std::vector<VectorField> backward_displacements(const TimeVaryingVelocity& vel) {
    const int w = vel.steps.front().width;
    const int h = vel.steps.front().height;
    const double dt = vel.dt();
    std::vector<VectorField> d;
    d.reserve(vel.steps.size() + 1);
    d.emplace_back(w, h);
    for (const VectorField& v : vel.steps) {
        const VectorField& prev = d.back();
        VectorField next(w, h);
        ScalarImage pu(w, h), pv(w, h);
        pu.data = prev.u;
        pv.data = prev.v;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double sx = x - dt * v.ux(x, y);
                const double sy = y - dt * v.vy(x, y);
                next.ux(x, y) = sample_bilinear(pu, sx, sy, kTransportRule) - dt * v.ux(x, y);
                next.vy(x, y) = sample_bilinear(pv, sx, sy, kTransportRule) - dt * v.vy(x, y);
            }
        }
        d.push_back(std::move(next));
    }
    return d;
}

// Adjoint of d -> interp(d; x - dt v(x)): scatter with the sampling weights.
void splat_bilinear(VectorField& acc, double x, double y, double gu, double gv) {
    const double xf = std::floor(x);
    const double yf = std::floor(y);
    const int x0 = static_cast<int>(xf);
    const int y0 = static_cast<int>(yf);
    const double fx = x - xf;
    const double fy = y - yf;
    const int xa = std::clamp(x0, 0, acc.width - 1);
    const int xb = std::clamp(x0 + 1, 0, acc.width - 1);
    const int ya = std::clamp(y0, 0, acc.height - 1);
    const int yb = std::clamp(y0 + 1, 0, acc.height - 1);
    const double w00 = (1.0 - fx) * (1.0 - fy);
    const double w10 = fx * (1.0 - fy);
    const double w01 = (1.0 - fx) * fy;
    const double w11 = fx * fy;
    acc.ux(xa, ya) += w00 * gu;
    acc.vy(xa, ya) += w00 * gv;
    acc.ux(xb, ya) += w10 * gu;
    acc.vy(xb, ya) += w10 * gv;
    acc.ux(xa, yb) += w01 * gu;
    acc.vy(xa, yb) += w01 * gv;
    acc.ux(xb, yb) += w11 * gu;
    acc.vy(xb, yb) += w11 * gv;
}

void check_pair(const ScalarImage& moving, const ScalarImage& reference) {
    if (!moving.same_shape(reference))
        throw std::invalid_argument("registration: moving/reference shape mismatch");
}

}  // namespace

TimeVaryingVelocity TimeVaryingVelocity::zeros(int width, int height, int time_steps) {
    if (time_steps < 1) throw std::invalid_argument("TimeVaryingVelocity: need at least one step");
    TimeVaryingVelocity v;
    v.steps.assign(static_cast<size_t>(time_steps), VectorField(width, height));
    return v;
}

std::vector<std::string> parameter_box_warnings(const CauchyNavierParams& params) {
    std::vector<std::string> warnings;
    if (params.alpha < 0.01 || params.alpha > 0.3)
        warnings.push_back("alpha = " + std::to_string(params.alpha) +
                           " outside recommended [0.01, 0.3]");
    if (params.gamma < 0.1 || params.gamma > 1.0)
        warnings.push_back("gamma = " + std::to_string(params.gamma) +
                           " outside recommended [0.1, 1]");
    if (!(params.alpha < params.gamma))
        warnings.push_back("alpha < gamma recommended (alpha = " + std::to_string(params.alpha) +
                           ", gamma = " + std::to_string(params.gamma) + ")");
    return warnings;
}

double cn_inner_product(const VectorField& f, const VectorField& g,
                        const CauchyNavierParams& params) {
    if (!f.same_shape(g)) throw std::invalid_argument("cn_inner_product: shape mismatch");
    const ScalarImage m = cn_multiplier(f.width, f.height, params);
    ScalarImage ch(f.width, f.height);
    double acc = 0.0;

    ch.data = f.u;
    const ScalarImage fu = dct2(ch);
    ch.data = g.u;
    const ScalarImage gu = dct2(ch);
    for (size_t i = 0; i < fu.pixel_count(); ++i)
        acc += m.data[i] * m.data[i] * fu.data[i] * gu.data[i];

    ch.data = f.v;
    const ScalarImage fv = dct2(ch);
    ch.data = g.v;
    const ScalarImage gv = dct2(ch);
    for (size_t i = 0; i < fv.pixel_count(); ++i)
        acc += m.data[i] * m.data[i] * fv.data[i] * gv.data[i];
    return acc;
}

VectorField cn_normal_apply(const VectorField& f, const CauchyNavierParams& params) {
    ScalarImage m = cn_multiplier(f.width, f.height, params);
    for (auto& v : m.data) v = v * v;
    return spectral_scale(f, m);
}

VectorField smooth_gradient(const VectorField& raw_gradient, const CauchyNavierParams& params) {
    ScalarImage m = cn_multiplier(raw_gradient.width, raw_gradient.height, params);
    for (auto& v : m.data) v = 1.0 / (v * v);
    return spectral_scale(raw_gradient, m);
}

VectorField integrate_flow(const TimeVaryingVelocity& vel, FlowDirection direction) {
    if (vel.steps.empty()) throw std::invalid_argument("integrate_flow: empty velocity");
    if (direction == FlowDirection::Backward) return backward_displacements(vel).back();

    const int w = vel.steps.front().width;
    const int h = vel.steps.front().height;
    const double dt = vel.dt();
    VectorField f(w, h);
    ScalarImage vu(w, h), vv(w, h);
    for (const VectorField& v : vel.steps) {
        vu.data = v.u;
        vv.data = v.v;
        VectorField next(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double px = x + f.ux(x, y);
                const double py = y + f.vy(x, y);
                next.ux(x, y) = f.ux(x, y) + dt * sample_bilinear(vu, px, py, kTransportRule);
                next.vy(x, y) = f.vy(x, y) + dt * sample_bilinear(vv, px, py, kTransportRule);
            }
        }
        f = std::move(next);
    }
    return f;
}

double registration_energy(const TimeVaryingVelocity& vel, const ScalarImage& moving,
                           const ScalarImage& reference, const RegistrationConfig& cfg) {
    check_pair(moving, reference);
    const double dt = vel.dt();
    double reg_term = 0.0;
    for (const VectorField& v : vel.steps) reg_term += cn_inner_product(v, v, cfg.params);
    reg_term *= 0.5 * dt;

    const VectorField psi = integrate_flow(vel, FlowDirection::Backward);
    const ScalarImage warped = warp(moving, psi, kTransportRule);
    double data = 0.0;
    for (size_t i = 0; i < warped.pixel_count(); ++i) {
        const double r = warped.data[i] - reference.data[i];
        data += r * r;
    }
    return reg_term + 0.5 * cfg.data_weight * data;
}

TimeVaryingVelocity energy_gradient(const TimeVaryingVelocity& vel, const ScalarImage& moving,
                                    const ScalarImage& reference, const RegistrationConfig& cfg) {
    check_pair(moving, reference);
    const int w = moving.width;
    const int h = moving.height;
    const int T = vel.time_steps();
    const double dt = vel.dt();

    const std::vector<VectorField> d = backward_displacements(vel);

    // Seed the adjoint at the endpoint: dE_data/dd_T through the warp.
    VectorField g(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const SampleGrad s =
                sample_bilinear_grad(moving, x + d[T].ux(x, y), y + d[T].vy(x, y), kTransportRule);
            const double r = cfg.data_weight * (s.value - reference.at(x, y));
            g.ux(x, y) = r * s.dx;
            g.vy(x, y) = r * s.dy;
        }
    }

    TimeVaryingVelocity grad = TimeVaryingVelocity::zeros(w, h, T);
    ScalarImage du(w, h), dv(w, h);
    for (int k = T - 1; k >= 0; --k) {
        const VectorField& vk = vel.steps[static_cast<size_t>(k)];
        du.data = d[static_cast<size_t>(k)].u;
        dv.data = d[static_cast<size_t>(k)].v;

        // dE_data/dv_k(x) = -dt (J + I)^T g(x), with J the interpolant
        // Jacobian of d_k at the semi-Lagrangian sample point.
        VectorField force(w, h);
        VectorField g_prev(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double sx = x - dt * vk.ux(x, y);
                const double sy = y - dt * vk.vy(x, y);
                const SampleGrad su = sample_bilinear_grad(du, sx, sy, kTransportRule);
                const SampleGrad sv = sample_bilinear_grad(dv, sx, sy, kTransportRule);
                const double gu = g.ux(x, y);
                const double gv = g.vy(x, y);
                force.ux(x, y) = -dt * (su.dx * gu + sv.dx * gv + gu);
                force.vy(x, y) = -dt * (su.dy * gu + sv.dy * gv + gv);
                splat_bilinear(g_prev, sx, sy, gu, gv);
            }
        }
        VectorField smoothed = smooth_gradient(force, cfg.params);
        VectorField& out = grad.steps[static_cast<size_t>(k)];
        const double inv_dt = 1.0 / dt;
        for (size_t i = 0; i < out.pixel_count(); ++i) {
            out.u[i] = vk.u[i] + inv_dt * smoothed.u[i];
            out.v[i] = vk.v[i] + inv_dt * smoothed.v[i];
        }
        g = std::move(g_prev);
    }
    return grad;
}

double velocity_inner_product(const TimeVaryingVelocity& a, const TimeVaryingVelocity& b,
                              const CauchyNavierParams& params) {
    if (a.time_steps() != b.time_steps())
        throw std::invalid_argument("velocity_inner_product: step count mismatch");
    double acc = 0.0;
    for (int k = 0; k < a.time_steps(); ++k)
        acc += cn_inner_product(a.steps[static_cast<size_t>(k)], b.steps[static_cast<size_t>(k)],
                                params);
    return acc * a.dt();
}

RegistrationResult register_images(const ScalarImage& moving, const ScalarImage& reference,
                                   const RegistrationConfig& cfg) {
    check_pair(moving, reference);
    if (cfg.time_steps < 1) throw std::invalid_argument("registration: time_steps must be >= 1");
    if (!(cfg.data_weight > 0.0)) throw std::invalid_argument("registration: data_weight must be > 0");
    if (!(cfg.step_size > 0.0)) throw std::invalid_argument("registration: step_size must be > 0");

    RegistrationResult result;
    result.warnings = parameter_box_warnings(cfg.params);
    TimeVaryingVelocity v = TimeVaryingVelocity::zeros(moving.width, moving.height, cfg.time_steps);
    double e = registration_energy(v, moving, reference, cfg);
    result.energy_trace.push_back(e);

    // The step is persistent across iterations with mild growth, so 20
    // halvings always reach a workable size again after an overshoot.
    double step = cfg.step_size;
    const double step_cap = cfg.step_size * 16.0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const TimeVaryingVelocity grad = energy_gradient(v, moving, reference, cfg);
        const double gnorm2 = velocity_inner_product(grad, grad, cfg.params);
        if (!(gnorm2 > 1e-24)) break;  // stationary point, e.g. moving == reference

        bool accepted = false;
        for (int halving = 0; halving <= 20; ++halving) {
            TimeVaryingVelocity trial = v;
            for (int k = 0; k < cfg.time_steps; ++k) {
                auto& tk = trial.steps[static_cast<size_t>(k)];
                const auto& gk = grad.steps[static_cast<size_t>(k)];
                for (size_t i = 0; i < tk.pixel_count(); ++i) {
                    tk.u[i] -= step * gk.u[i];
                    tk.v[i] -= step * gk.v[i];
                }
            }
            const double e_trial = registration_energy(trial, moving, reference, cfg);
            if (e_trial < e) {
                v = std::move(trial);
                const double prev = e;
                e = e_trial;
                result.energy_trace.push_back(e);
                accepted = true;
                step = std::min(step * 2.0, step_cap);
                if (prev - e < cfg.convergence_tol * std::max(std::abs(prev), 1e-30)) {
                    it = cfg.max_iterations;  // converged
                }
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (it == 1)
                throw solver_error(
                    "registration made no progress at the first iteration (backtracking exhausted)");
            break;
        }
    }

    result.velocity = v;
    result.forward_map = integrate_flow(v, FlowDirection::Forward);
    result.inverse_map = integrate_flow(v, FlowDirection::Backward);
    result.warped = warp(moving, result.inverse_map, kTransportRule);
    return result;
}

VectorField compose_displacements(const VectorField& outer, const VectorField& inner) {
    if (!outer.same_shape(inner))
        throw std::invalid_argument("compose_displacements: shape mismatch");
    VectorField out(outer.width, outer.height);
    ScalarImage ou(outer.width, outer.height), ov(outer.width, outer.height);
    ou.data = outer.u;
    ov.data = outer.v;
    for (int y = 0; y < outer.height; ++y) {
        for (int x = 0; x < outer.width; ++x) {
            const double px = x + inner.ux(x, y);
            const double py = y + inner.vy(x, y);
            out.ux(x, y) = inner.ux(x, y) + sample_bilinear(ou, px, py, kTransportRule);
            out.vy(x, y) = inner.vy(x, y) + sample_bilinear(ov, px, py, kTransportRule);
        }
    }
    return out;
}

ScalarImage jacobian_determinant(const VectorField& displacement) {
    const int w = displacement.width;
    const int h = displacement.height;
    ScalarImage det(w, h);
    auto dx = [&](const std::vector<double>& c, int x, int y) {
        const int x0 = std::max(x - 1, 0);
        const int x1 = std::min(x + 1, w - 1);
        return (c[static_cast<size_t>(y) * w + x1] - c[static_cast<size_t>(y) * w + x0]) /
               static_cast<double>(x1 - x0);
    };
    auto dy = [&](const std::vector<double>& c, int x, int y) {
        const int y0 = std::max(y - 1, 0);
        const int y1 = std::min(y + 1, h - 1);
        return (c[static_cast<size_t>(y1) * w + x] - c[static_cast<size_t>(y0) * w + x]) /
               static_cast<double>(y1 - y0);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double a = 1.0 + dx(displacement.u, x, y);
            const double b = dy(displacement.u, x, y);
            const double c = dx(displacement.v, x, y);
            const double d = 1.0 + dy(displacement.v, x, y);
            det.at(x, y) = a * d - b * c;
        }
    }
    return det;
}

}  // namespace turbres::reg
