#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "ccbi/samplers.hpp"

using namespace ccbi;

namespace {

double std_normal_lp(double x) { return -0.5 * x * x; }
double std_normal_grad(double x) { return -x; }

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double var_of(std::span<const double> v)
{
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size());
}

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows)
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7) {
                         throw ValidationError("boom");
                     }
                 }),
                 ValidationError);
}

TEST(Crw, StandardNormalMoments)
{
    const auto chain = run_crw(std_normal_lp, [](double) { return true; }, {2.4, 100000, 0.0, 5});
    const auto s = std::span<const double>(chain.samples).subspan(1000);
    EXPECT_NEAR(mean_of(s), 0.0, 0.05);
    EXPECT_NEAR(var_of(s), 1.0, 0.05);
    EXPECT_GT(chain.acceptance_rate(), 0.3);
    EXPECT_LT(chain.acceptance_rate(), 0.6);
}

TEST(Crw, NeverLeavesTheFeasibleSet)
{
    const auto feasible = [](double x) { return x >= 0.5; };
    const auto chain = run_crw(std_normal_lp, feasible, {1.0, 20000, 1.0, 2});
    for (double x : chain.samples) {
        ASSERT_GE(x, 0.5);
    }
    EXPECT_EQ(chain.infeasible_fraction(), 0.0);
    EXPECT_TRUE(chain.is_markov);
}

TEST(Crw, RejectedProposalsRepeatTheState)
{
    const auto chain = run_crw(std_normal_lp, [](double x) { return x > 0.0; }, {3.0, 2000, 1.0, 3});
    double prev = 1.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (!chain.accepted[i]) {
            EXPECT_EQ(chain.samples[i], prev);
        }
        prev = chain.samples[i];
    }
}

TEST(Crw, InfeasibleStartThrows)
{
    EXPECT_THROW(run_crw(std_normal_lp, [](double x) { return x > 1.0; }, {1.0, 10, 0.0, 1}), InfeasibleStartError);
}

TEST(Crw, SeedDeterminism)
{
    const auto a = run_crw(std_normal_lp, [](double) { return true; }, {1.0, 500, 0.0, 77});
    const auto b = run_crw(std_normal_lp, [](double) { return true; }, {1.0, 500, 0.0, 77});
    const auto c = run_crw(std_normal_lp, [](double) { return true; }, {1.0, 500, 0.0, 78});
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, c.samples);
}

TEST(Chmc, StandardNormalMoments)
{
    ChmcOptions opt;
    opt.step = 0.3;
    opt.max_leapfrog = 10;
    opt.n_samples = 40000;
    opt.seed = 9;
    const auto chain = run_chmc(std_normal_lp, std_normal_grad, [](double) { return true; }, opt);
    const auto s = std::span<const double>(chain.samples).subspan(500);
    EXPECT_NEAR(mean_of(s), 0.0, 0.05);
    EXPECT_NEAR(var_of(s), 1.0, 0.05);
    EXPECT_GT(chain.acceptance_rate(), 0.9);
    EXPECT_EQ(chain.divergences, 0u);
}

TEST(Chmc, RecordsInfeasibilityWithoutEnforcing)
{
    ChmcOptions opt;
    opt.step = 0.3;
    opt.n_samples = 5000;
    const auto chain = run_chmc(std_normal_lp, std_normal_grad, [](double x) { return x >= 0.5; }, opt);
    EXPECT_GT(chain.infeasible_fraction(), 0.3);
    const auto post = postprocess_feasible(chain, [](double x) { return x >= 0.5; });
    EXPECT_FALSE(post.is_markov);
    EXPECT_EQ(post.original_length, chain.size());
    EXPECT_EQ(post.removed + post.size(), chain.size());
    for (double x : post.samples) {
        EXPECT_GE(x, 0.5);
    }
}

TEST(Chmc, GradientFailuresCountAsDivergences)
{
    ChmcOptions opt;
    opt.step = 0.3;
    opt.n_samples = 2000;
    const auto grad = [](double x) {
        if (x > 1.5) {
            throw NonFiniteStateError("bad gradient");
        }
        return -x;
    };
    const auto chain = run_chmc(std_normal_lp, grad, [](double) { return true; }, opt);
    EXPECT_GT(chain.divergences, 0u);
    for (double x : chain.samples) {
        EXPECT_LE(x, 1.5);
    }
}

TEST(Svgd, BandwidthMedianHeuristic)
{
    const std::vector<double> x{0.0, 1.0, 3.0};
    // squared distances 1, 4, 9 -> median 4
    EXPECT_NEAR(detail::svgd_bandwidth(x, 0.0), std::sqrt(0.5 * 4.0 / std::log(4.0)), 1e-14);
    EXPECT_EQ(detail::svgd_bandwidth(x, 2.5), 2.5);
    const std::vector<double> same(5, 1.0);
    EXPECT_EQ(detail::svgd_bandwidth(same, 0.0), 1.0);
}

TEST(Svgd, SteinDirectionBruteForce)
{
    const std::vector<double> x{-1.0, 0.2, 0.9, 2.0};
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        g[i] = -x[i];
    }
    const double h = 0.8;
    const auto phi = detail::stein_direction(x, g, h);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double k = std::exp(-(x[j] - x[i]) * (x[j] - x[i]) / (2 * h * h));
            const double dk = -(x[j] - x[i]) / (h * h) * k; // derivative in x_j
            acc += k * g[j] + dk;
        }
        EXPECT_NEAR(phi[i], acc / 4.0, 1e-14);
    }
}

TEST(Svgd, UnconstrainedGaussianMoments)
{
    SvgdOptions opt;
    opt.n_particles = 200;
    opt.n_generations = 400;
    opt.step = 0.05;
    opt.init_mean = 3.0;
    opt.init_std = 0.5;
    opt.seed = 4;
    const auto hist = run_csvgd(std_normal_grad, [](double) { return true; }, opt);
    ASSERT_EQ(hist.generations.size(), 401u);
    const auto& last = hist.generations.back();
    EXPECT_NEAR(mean_of(last), 0.0, 0.1);
    EXPECT_NEAR(var_of(last), 1.0, 0.15);
    EXPECT_EQ(hist.pooled_samples().size(), 200u * 400u);
}

TEST(Svgd, JobsDoNotChangeResults)
{
    SvgdOptions opt;
    opt.n_particles = 50;
    opt.n_generations = 30;
    opt.seed = 8;
    const auto one = run_csvgd(std_normal_grad, [](double x) { return x > -1.0; }, opt);
    opt.jobs = 4;
    const auto four = run_csvgd(std_normal_grad, [](double x) { return x > -1.0; }, opt);
    EXPECT_EQ(one.generations, four.generations);
    EXPECT_EQ(one.feasible, four.feasible);
}

TEST(Svgd, ProjectedStaysFeasibleEveryGeneration)
{
    SvgdOptions opt;
    opt.n_particles = 100;
    opt.n_generations = 200;
    opt.step = 0.05;
    opt.init_std = 1.0;
    const auto project = [](double x) { return std::max(x, 0.5); };
    const auto hist = run_projected_svgd(std_normal_grad, project, opt);
    for (const auto& gen : hist.generations) {
        for (double x : gen) {
            ASSERT_GE(x, 0.5);
        }
    }
}

TEST(Svgd, RecordsFeasibilityPerGeneration)
{
    SvgdOptions opt;
    opt.n_particles = 40;
    opt.n_generations = 10;
    const auto hist = run_csvgd(std_normal_grad, [](double x) { return x > 0.0; }, opt);
    ASSERT_EQ(hist.feasible.size(), hist.generations.size());
    for (std::size_t g = 0; g < hist.generations.size(); ++g) {
        for (std::size_t i = 0; i < 40; ++i) {
            EXPECT_EQ(hist.feasible[g][i], hist.generations[g][i] > 0.0);
        }
    }
    const auto chain = particles_as_chain(hist);
    EXPECT_EQ(chain.size(), 400u);
    EXPECT_FALSE(chain.is_markov);
}

TEST(ChainCsv, RoundTripIsExact)
{
    const auto chain = run_crw(std_normal_lp, [](double) { return true; }, {1.0, 300, 0.0, 12});
    const auto path = temp_path("ccbi_chain_roundtrip.csv");
    write_chain_csv(path, chain);
    const auto back = read_chain_csv(path);
    EXPECT_EQ(back.samples, chain.samples);
    EXPECT_EQ(back.accepted, chain.accepted);
    EXPECT_EQ(back.log_post, chain.log_post);
    std::filesystem::remove(path);
}

TEST(ChainCsv, RejectsMalformedFiles)
{
    const auto path = temp_path("ccbi_chain_bad.csv");
    {
        std::ofstream out(path);
        out << "index,theta\n0,1\n";
    }
    EXPECT_THROW(read_chain_csv(path), ValidationError);
    {
        std::ofstream out(path);
        out << "index,theta,accepted,feasible,log_post,cumulative_seconds\n0,abc,1,1,0,0\n";
    }
    EXPECT_THROW(read_chain_csv(path), ValidationError);
    std::filesystem::remove(path);
}
