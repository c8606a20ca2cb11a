// Chance constraint on the outlet coolant temperature of one porous strip:
// P(T_f(1) <= beta) at a few Reynolds numbers, then the feasible boundary.

#include <cmath>
#include <cstdio>

#include "ccbi/ccbi.hpp"

int main()
{
    ccbi::ModelParams params;
    params.heat_flux_scale = params.length;

    const ccbi::GermSpec germ{{{"q", ccbi::GermKind::gaussian, params.heat_flux_nominal, 3084.5},
                               {"phi", ccbi::GermKind::gaussian, params.porosity, 0.01}}};
    const ccbi::ChanceConstraintSpec spec{348.4, 0.95, 100000, 7};

    auto factory = [&](double re) -> ccbi::AnyChanceFunction {
        return ccbi::StripOutletConstraint(ccbi::build_strip_surrogate(params, germ, re));
    };
    ccbi::FeasibilityOracle oracle(spec, factory);

    for (double re : {450.0, 540.0, 650.0}) {
        const auto s = ccbi::build_strip_surrogate(params, germ, re);
        const auto m = ccbi::surrogate_moments(s, s.n_nodes() - 1);
        std::printf("Re %6.1f  mean %.3f K  sd %.3f K  P %.4f\n", re, m.mean, std::sqrt(m.variance),
                    oracle.probability(re));
    }

    const auto scan = ccbi::scan_feasible_boundary({300.0, 1000.0}, spec.alpha,
                                                   [&](double re) { return oracle.probability(re); }, 0.05);
    for (const auto& iv : scan.set.intervals()) {
        std::printf("feasible on [%.2f, %.2f]\n", iv.lo, iv.hi);
    }
}
