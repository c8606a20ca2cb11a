#pragma once

// Deterministic forward model of one 1D porous strip: coupled solid/fluid
// temperatures and coolant density, marched in x in [0,1] by explicit Euler.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "ccbi/errors.hpp"
#include "ccbi/model_params.hpp"

namespace ccbi {

struct StripState {
    double t_fluid = 0.0;
    double t_solid = 0.0;
    double density = 0.0;
};

struct StripTrajectory {
    std::vector<double> x_grid;
    std::vector<double> t_fluid;
    std::vector<double> t_solid;
    std::vector<double> density;
    std::vector<double> velocity; // 1/density at each node

    std::size_t size() const { return x_grid.size(); }
};

struct ForwardOptions {
    std::size_t n_steps = 1000;
    double singular_epsilon = 1e-12;
};

/// Evaluation point of the uncertain inputs (heat flux, porosity).
struct GermPoint {
    double q = 0.0;
    double phi = 0.0;
};

namespace detail {

/// Temperature right-hand sides. They do not depend on the density.
struct TemperatureRates {
    double t_solid;
    double t_fluid;
};

inline TemperatureRates temperature_rates(const ModelParams& p, double q, double phi, double re,
                                          double t_fluid, double t_solid)
{
    const double solid_scale = (1.0 - phi) * p.kappa_solid;
    return {
        p.kappa_fluid / solid_scale * re * p.prandtl * (t_fluid - p.hot_gas_temp)
            + p.heat_flux_scale * q / solid_scale,
        p.nusselt / (p.prandtl * re) * (t_solid - t_fluid),
    };
}

/// N(x; Re) * rho, the density right-hand side.
inline double density_rate(const ModelParams& p, double phi, double re, double t_fluid,
                           double t_solid, double density, double epsilon)
{
    const double rho2 = density * density;
    const double denominator = 1.0 / (phi * phi) - rho2 * t_fluid;
    if (!(std::abs(denominator) >= epsilon)) {
        std::ostringstream msg;
        msg << "density closure denominator " << denominator << " below epsilon " << epsilon
            << " (rho=" << density << ", T_f=" << t_fluid << ", phi=" << phi << ", Re=" << re
            << ")";
        throw SingularDenominatorError(msg.str());
    }
    const double drag = p.length * p.length / (re * p.permeability_darcy) + p.length / p.forchheimer;
    const double numerator = p.nusselt / (re * p.prandtl) * rho2 * (t_solid - t_fluid) + drag;
    return numerator / denominator * density;
}

inline void check_strip_inputs(double phi, double re, std::size_t n_steps)
{
    require(n_steps >= 1, "n_steps must be at least 1");
    require(phi > 0.0 && phi < 1.0, "porosity must lie in (0,1)");
    require(re > 0.0, "Reynolds number must be positive");
}

inline void check_finite(const StripState& s, std::size_t step)
{
    if (!std::isfinite(s.t_fluid) || !std::isfinite(s.t_solid) || !std::isfinite(s.density)) {
        std::ostringstream msg;
        msg << "non-finite strip state at step " << step;
        throw NonFiniteStateError(msg.str());
    }
}

/// Marches the strip and calls visit(step, state) for step = 0..n_steps.
template <typename Visitor>
StripState march_strip(const ModelParams& p, double q, double phi, double re,
                       const ForwardOptions& opt, Visitor&& visit)
{
    check_strip_inputs(phi, re, opt.n_steps);
    const double h = 1.0 / static_cast<double>(opt.n_steps);
    StripState s{p.coolant_temp, p.solid_temp, p.reservoir_pressure / p.coolant_temp};
    visit(std::size_t{0}, s);
    for (std::size_t k = 1; k <= opt.n_steps; ++k) {
        const auto rates = temperature_rates(p, q, phi, re, s.t_fluid, s.t_solid);
        const double drho =
            density_rate(p, phi, re, s.t_fluid, s.t_solid, s.density, opt.singular_epsilon);
        s.t_solid += h * rates.t_solid;
        s.t_fluid += h * rates.t_fluid;
        s.density += h * drho;
        check_finite(s, k);
        visit(k, s);
    }
    return s;
}

} // namespace detail

/// Integrates the strip DAE from x=0 to x=1 with n_steps explicit Euler steps.
inline StripTrajectory integrate_strip(const ModelParams& params, double q, double phi, double re,
                                       std::size_t n_steps, double singular_epsilon = 1e-12)
{
    const ForwardOptions opt{n_steps, singular_epsilon};
    detail::check_strip_inputs(phi, re, n_steps);
    StripTrajectory traj;
    const std::size_t n = n_steps + 1;
    traj.x_grid.resize(n);
    traj.t_fluid.resize(n);
    traj.t_solid.resize(n);
    traj.density.resize(n);
    traj.velocity.resize(n);
    detail::march_strip(params, q, phi, re, opt, [&](std::size_t k, const StripState& s) {
        traj.x_grid[k] = k == n_steps ? 1.0 : static_cast<double>(k) / static_cast<double>(n_steps);
        traj.t_fluid[k] = s.t_fluid;
        traj.t_solid[k] = s.t_solid;
        traj.density[k] = s.density;
        traj.velocity[k] = 1.0 / s.density;
    });
    return traj;
}

/// Outlet state only; no trajectory storage. Same arithmetic as integrate_strip.
inline StripState strip_outlet(const ModelParams& params, double q, double phi, double re,
                               const ForwardOptions& opt = {})
{
    return detail::march_strip(params, q, phi, re, opt, [](std::size_t, const StripState&) {});
}

/// p = T_f(1) * rho_f(1).
inline double interface_pressure(const StripTrajectory& traj)
{
    detail::require(!traj.x_grid.empty() && traj.t_fluid.size() == traj.x_grid.size()
                        && traj.density.size() == traj.x_grid.size(),
                    "invalid strip trajectory");
    return traj.t_fluid.back() * traj.density.back();
}

/// F(Re): interface pressure with the uncertain inputs fixed at their means.
inline double forward_pressure_at_mean(const ModelParams& params, GermPoint xi_mean, double re,
                                       const ForwardOptions& opt = {})
{
    const StripState out = strip_outlet(params, xi_mean.q, xi_mean.phi, re, opt);
    return out.t_fluid * out.density;
}

} // namespace ccbi
