// Constrained random walk on N(0,1) restricted to [0.5, inf).

#include <cstdio>

#include "ccbi/ccbi.hpp"

int main()
{
    auto log_post = [](double x) { return -0.5 * x * x; };
    auto feasible = [](double x) { return x >= 0.5; };

    const auto chain = ccbi::run_crw(log_post, feasible, {1.5, 100000, 1.0, 42});
    const auto ref = ccbi::reference_posterior(ccbi::linspace(0.5, 5.5, 2001), log_post, feasible);
    const auto hist = ccbi::chain_histogram(chain.samples, 50, 0.5, 5.5);

    std::printf("acceptance %.3f\n", chain.acceptance_rate());
    std::printf("relative L2 %.4f\n", ccbi::relative_l2_error(hist, ref));
}
