#include <gtest/gtest.h>

#include <cmath>

#include "ccbi/porous_flow.hpp"

using namespace ccbi;

namespace {

ModelParams scaled()
{
    ModelParams p;
    p.heat_flux_scale = p.length;
    return p;
}

} // namespace

// Reference values from tests/oracles/strip_oracle.py (independent NumPy march).
TEST(PorousFlow, RawValuesMatchOracle)
{
    const ModelParams p;
    const auto traj = integrate_strip(p, p.heat_flux_nominal, p.porosity, 405.0, 1000);
    EXPECT_NEAR(traj.t_fluid.back(), 3179.6788726265886, 1e-9 * 3179.7);
    EXPECT_NEAR(traj.density.back(), 185.87888759969246, 1e-9 * 185.9);
    EXPECT_NEAR(interface_pressure(traj), 591035.1717680745, 1e-9 * 591035.0);
}

TEST(PorousFlow, EulerConvergesAtFirstOrder)
{
    const ModelParams p;
    const double reference = 595117.2947023136; // n = 1e6
    const double e3 = std::abs(forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 405.0, {1000}) - reference);
    const double e4 = std::abs(forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 405.0, {10000}) - reference);
    const double e5 = std::abs(forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 405.0, {100000}) - reference);
    // errors measured against the n = 1e6 run: (1/n - 1e-6) ratios are 999/99 and 99/9
    EXPECT_NEAR(e3 / e4, 999.0 / 99.0, 0.2);
    EXPECT_NEAR(e4 / e5, 11.0, 0.2);
    EXPECT_NEAR(forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 405.0, {100000}), 595080.5297444125, 1e-3);
}

TEST(PorousFlow, RawPressureScanMatchesOracle)
{
    const ModelParams p;
    const double expected[] = {589707.2402446059, 590988.2534051274, 591740.9381599807, 592230.436430557,
                               592570.6615234201, 592818.7960942943, 593006.7361789831, 593153.6701639639};
    for (int i = 0; i < 8; ++i) {
        const double re = 300.0 + 100.0 * i;
        EXPECT_NEAR(forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, re), expected[i], 1e-9 * expected[i]);
    }
}

TEST(PorousFlow, ScaledFluxCoolsWithReynolds)
{
    const ModelParams p = scaled();
    const double res[] = {405.0, 540.0, 700.0};
    const double tf[] = {346.26219710720886, 340.8646493207178, 332.9737760380521};
    const double pr[] = {598944.208832808, 599176.247437718, 599337.5952194199};
    for (int i = 0; i < 3; ++i) {
        const auto out = strip_outlet(p, p.heat_flux_nominal, p.porosity, res[i]);
        EXPECT_NEAR(out.t_fluid, tf[i], 1e-9 * tf[i]);
        EXPECT_NEAR(out.t_fluid * out.density, pr[i], 1e-9 * pr[i]);
    }
}

TEST(PorousFlow, InitialConditionsAndVelocity)
{
    const ModelParams p;
    const auto traj = integrate_strip(p, p.heat_flux_nominal, p.porosity, 405.0, 50);
    ASSERT_EQ(traj.size(), 51u);
    EXPECT_EQ(traj.x_grid.front(), 0.0);
    EXPECT_EQ(traj.x_grid.back(), 1.0);
    EXPECT_DOUBLE_EQ(traj.t_fluid[0], p.coolant_temp);
    EXPECT_DOUBLE_EQ(traj.t_solid[0], p.solid_temp);
    EXPECT_DOUBLE_EQ(traj.density[0], p.reservoir_pressure / p.coolant_temp);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        EXPECT_DOUBLE_EQ(traj.velocity[i], 1.0 / traj.density[i]);
    }
}

TEST(PorousFlow, OutletAgreesWithTrajectory)
{
    const ModelParams p = scaled();
    const auto traj = integrate_strip(p, 31000.0, 0.12, 610.0, 1000);
    const auto out = strip_outlet(p, 31000.0, 0.12, 610.0);
    EXPECT_EQ(out.t_fluid, traj.t_fluid.back());
    EXPECT_EQ(out.t_solid, traj.t_solid.back());
    EXPECT_EQ(out.density, traj.density.back());
}

TEST(PorousFlow, TemperaturesIgnoreDensity)
{
    ModelParams a = scaled();
    ModelParams b = a;
    b.reservoir_pressure = 3.0e5;
    const auto ta = strip_outlet(a, a.heat_flux_nominal, a.porosity, 500.0);
    const auto tb = strip_outlet(b, b.heat_flux_nominal, b.porosity, 500.0);
    EXPECT_EQ(ta.t_fluid, tb.t_fluid);
    EXPECT_EQ(ta.t_solid, tb.t_solid);
    EXPECT_NE(ta.density, tb.density);
}

TEST(PorousFlow, ZeroFluxAtEquilibriumStaysPut)
{
    ModelParams p;
    p.hot_gas_temp = 300.0;
    p.coolant_temp = 300.0;
    p.solid_temp = 300.0;
    const auto out = strip_outlet(p, 0.0, p.porosity, 500.0);
    EXPECT_DOUBLE_EQ(out.t_fluid, 300.0);
    EXPECT_DOUBLE_EQ(out.t_solid, 300.0);
}

TEST(PorousFlow, RejectsBadInputs)
{
    const ModelParams p;
    EXPECT_THROW(integrate_strip(p, p.heat_flux_nominal, 0.0, 405.0, 100), ValidationError);
    EXPECT_THROW(integrate_strip(p, p.heat_flux_nominal, 1.0, 405.0, 100), ValidationError);
    EXPECT_THROW(integrate_strip(p, p.heat_flux_nominal, 0.1, -1.0, 100), ValidationError);
    EXPECT_THROW(integrate_strip(p, p.heat_flux_nominal, 0.1, 405.0, 0), ValidationError);
}

TEST(PorousFlow, SingularDenominatorThrows)
{
    const ModelParams p;
    const double phi = 0.5;
    const double t_fluid = 300.0;
    const double rho = std::sqrt(1.0 / (phi * phi) / t_fluid); // phi^-2 == rho^2 T_f
    EXPECT_THROW(detail::density_rate(p, phi, 405.0, t_fluid, 310.0, rho, 1e-9), SingularDenominatorError);
    EXPECT_NO_THROW(detail::density_rate(p, phi, 405.0, t_fluid, 310.0, 2.0 * rho, 1e-9));
}

TEST(PorousFlow, NonFiniteStateThrows)
{
    ModelParams p;
    p.nusselt = 1e300;
    EXPECT_THROW(strip_outlet(p, p.heat_flux_nominal, p.porosity, 1e-300, {10}), Error);
}

TEST(ModelParams, Validation)
{
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    p.porosity = 1.5;
    EXPECT_THROW(p.validate(), ValidationError);
    p = ModelParams{};
    p.kappa_solid = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = ModelParams{};
    p.heat_flux_scale = -1.0;
    EXPECT_THROW(p.validate(), ValidationError);
}
