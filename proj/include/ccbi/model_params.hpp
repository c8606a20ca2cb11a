#pragma once

#include <cmath>

#include "ccbi/errors.hpp"

namespace ccbi {

/// Deterministic physical constants of the porous strip model. Defaults are
/// the reference data set (dimensional values, used as-is).
struct ModelParams {
    double reynolds_nominal = 405.0;
    double prandtl = 0.64;
    double nusselt = 7500.0;
    double heat_flux_nominal = 30845.0; // W/m^2
    double hot_gas_temp = 347.0;        // K
    double porosity = 0.111;
    double kappa_fluid = 0.03;          // W/(m K)
    double kappa_solid = 15.2;          // W/(m K)
    double permeability_darcy = 3.57e-13; // m^2
    double forchheimer = 5.17e-8;       // m
    double coolant_temp = 304.2;        // K
    double solid_temp = 321.9;          // K
    double reservoir_pressure = 600000.0; // Pa
    double length = 0.015;              // m

    /// Scaling hook: multiplies the heat-flux source term q/((1-phi) kappa_s).
    /// 1 integrates the equations with the raw values; setting it to `length`
    /// gives the flux term the same per-unit-x scaling as the convective term.
    double heat_flux_scale = 1.0;

    /// Second porosity of the two-section interface geometry.
    double porosity_second = 0.4;

    void validate() const
    {
        using detail::require;
        require(porosity > 0.0 && porosity < 1.0, "porosity must lie in (0,1)");
        require(porosity_second > 0.0 && porosity_second < 1.0, "porosity_second must lie in (0,1)");
        require(reynolds_nominal > 0.0, "reynolds_nominal must be positive");
        require(prandtl > 0.0 && nusselt > 0.0, "prandtl and nusselt must be positive");
        require(kappa_fluid > 0.0 && kappa_solid > 0.0, "conductivities must be positive");
        require(permeability_darcy > 0.0 && forchheimer > 0.0, "K_D and K_F must be positive");
        require(hot_gas_temp > 0.0 && coolant_temp > 0.0 && solid_temp > 0.0,
                "temperatures must be positive");
        require(reservoir_pressure > 0.0, "reservoir_pressure must be positive");
        require(length > 0.0, "length must be positive");
        require(std::isfinite(heat_flux_scale) && heat_flux_scale >= 0.0,
                "heat_flux_scale must be finite and non-negative");
    }
};

} // namespace ccbi
