#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "ccbi/bayes.hpp"

using namespace ccbi;

namespace {

ModelParams scaled()
{
    ModelParams p;
    p.heat_flux_scale = p.length;
    return p;
}

ObservationSet model1_data(std::size_t n_obs = 50, std::uint64_t seed = 11)
{
    const ModelParams p = scaled();
    return generate_observations(p, {{"p", p.porosity, {p.heat_flux_nominal, p.porosity}, 100.0}}, 700.0, n_obs, seed);
}

double central_difference(const std::function<double(double)>& f, double x, double h)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace

TEST(Prior, GaussianDensityAndGradient)
{
    const auto prior = PriorSpec::gaussian(600.0, 150.0);
    EXPECT_NEAR(log_prior(600.0, prior), -std::log(std::sqrt(2.0 * std::numbers::pi) * 150.0), 1e-14);
    EXPECT_NEAR(log_prior(750.0, prior) - log_prior(600.0, prior), -0.5, 1e-12);
    for (double t : {200.0, 550.0, 900.0}) {
        EXPECT_NEAR(grad_log_prior(t, prior), central_difference([&](double x) { return log_prior(x, prior); }, t, 1e-3),
                    1e-8);
    }
}

TEST(Prior, UniformSupportAndFloor)
{
    const auto prior = PriorSpec::uniform(300.0, 1000.0);
    EXPECT_NEAR(log_prior(500.0, prior), -std::log(700.0), 1e-14);
    EXPECT_EQ(log_prior(1000.0, prior), log_prior(300.0, prior));
    EXPECT_EQ(log_prior(1000.5, prior), std::log(1e-300));
    EXPECT_EQ(grad_log_prior(500.0, prior), 0.0);
    EXPECT_TRUE(prior.in_support(300.0));
    EXPECT_FALSE(prior.in_support(299.9));
    EXPECT_THROW(PriorSpec::uniform(2.0, 1.0).validate(), ValidationError);
    EXPECT_THROW(PriorSpec::gaussian(0.0, 0.0).validate(), ValidationError);
}

TEST(Observations, DeterministicAndCentredOnTruth)
{
    const ModelParams p = scaled();
    const auto a = model1_data(2000, 5);
    const auto b = model1_data(2000, 5);
    EXPECT_EQ(a.groups[0].values, b.groups[0].values);
    const double clean = forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 700.0);
    double m = 0.0;
    double m2 = 0.0;
    for (double v : a.groups[0].values) {
        m += v - clean;
        m2 += (v - clean) * (v - clean);
    }
    m /= 2000.0;
    m2 /= 2000.0;
    EXPECT_NEAR(m, 0.0, 4.0 * 100.0 / std::sqrt(2000.0));
    EXPECT_NEAR(std::sqrt(m2), 100.0, 6.0);
}

TEST(Observations, NoiselessDataEqualsForwardModel)
{
    const ModelParams p = scaled();
    const auto obs = generate_observations(p, {{"p", p.porosity, {p.heat_flux_nominal, p.porosity}, 0.0}}, 640.0, 3, 1);
    const double clean = forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, 640.0);
    for (double v : obs.groups[0].values) {
        EXPECT_EQ(v, clean);
    }
}

TEST(Likelihood, TemperedAndClassicForms)
{
    const ModelParams p = scaled();
    const auto obs = model1_data(10, 3);
    const double theta = 650.0;
    const double model = forward_pressure_at_mean(p, {p.heat_flux_nominal, p.porosity}, theta);
    double sq = 0.0;
    for (double d : obs.groups[0].values) {
        sq += (d - model) * (d - model);
    }
    const double log_norm = -std::log(std::sqrt(2.0 * std::numbers::pi) * 100.0);
    EXPECT_NEAR(log_likelihood(obs, theta, p), log_norm - sq / (2.0 * 10.0 * 1e4), 1e-9);
    LikelihoodOptions classic;
    classic.classic_iid = true;
    EXPECT_NEAR(log_likelihood(obs, theta, p, classic), 10.0 * log_norm - sq / (2.0 * 1e4), 1e-9);
}

TEST(Likelihood, PeaksNearTruth)
{
    const ModelParams p = scaled();
    const auto obs = model1_data();
    double best = 0.0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (double t = 400.0; t <= 1100.0; t += 5.0) {
        const double v = log_likelihood(obs, t, p);
        if (v > best_value) {
            best_value = v;
            best = t;
        }
    }
    EXPECT_NEAR(best, 700.0, 60.0);
}

TEST(Likelihood, ForwardFailureGivesMinusInfinity)
{
    const ModelParams p = scaled();
    const auto obs = model1_data(5);
    EXPECT_EQ(log_likelihood(obs, -50.0, p), -std::numeric_limits<double>::infinity());
    const PosteriorModel post(p, obs, PriorSpec::gaussian(600.0, 150.0));
    EXPECT_EQ(post.log_posterior(-50.0), -std::numeric_limits<double>::infinity());
}

TEST(Gradient, MatchesCentralDifferenceOfLogPosterior)
{
    const ModelParams p = scaled();
    const PosteriorModel post(p, model1_data(), PriorSpec::gaussian(600.0, 150.0));
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(550.0, 1100.0);
    for (int i = 0; i < 10; ++i) {
        const double t = u(rng);
        const double fd = central_difference([&](double x) { return post.log_posterior(x); }, t, 0.05);
        EXPECT_NEAR(post.gradient(t), fd, 1e-3 * std::abs(fd) + 2e-6) << t;
    }
}

TEST(Gradient, TwoGroupsClassicForm)
{
    const ModelParams p = scaled();
    const auto obs = generate_observations(p, {{"p0", 0.111, {p.heat_flux_nominal, 0.111}, 100.0},
                                               {"p1", 0.4, {p.heat_flux_nominal, 0.4}, 100.0}},
                                           700.0, 20, 12);
    LikelihoodOptions opt;
    opt.classic_iid = true;
    const PosteriorModel post(p, obs, PriorSpec::uniform(300.0, 1000.0), opt);
    for (double t : {450.0, 690.0, 880.0}) {
        const double fd = central_difference([&](double x) { return post.log_posterior(x); }, t, 0.05);
        EXPECT_NEAR(post.gradient(t), fd, 1e-3 * std::abs(fd) + 2e-6) << t;
    }
}

TEST(Gradient, PenaltyPointsTowardFeasibleSet)
{
    EXPECT_EQ(penalized_gradient(1.5, true, 0.05, 1.0), 1.5);
    EXPECT_EQ(penalized_gradient(1.5, false, 0.05, 1.0), 1.55);
    EXPECT_EQ(penalized_gradient(1.5, false, 0.05, -1.0), 1.45);
    EXPECT_EQ(penalized_gradient(1.5, false, 0.05, 0.0), 1.5);
}

TEST(ObservationsCsv, RoundTrip)
{
    const ModelParams p = scaled();
    const auto obs = generate_observations(p, {{"p0", 0.111, {p.heat_flux_nominal, 0.111}, 80.0},
                                               {"p1", 0.4, {p.heat_flux_nominal, 0.4}, 90.0}},
                                           700.0, 7, 4);
    const auto path = (std::filesystem::temp_directory_path() / "ccbi_obs_roundtrip.csv").string();
    write_observations_csv(path, obs);
    std::vector<ObservationGroup> templates{{"p0", {}, 80.0, 0.111}, {"p1", {}, 90.0, 0.4}};
    const auto back = read_observations_csv(path, templates);
    ASSERT_EQ(back.groups.size(), 2u);
    EXPECT_EQ(back.groups[0].values, obs.groups[0].values);
    EXPECT_EQ(back.groups[1].values, obs.groups[1].values);
    EXPECT_THROW(read_observations_csv(path, {{"p0", {}, 80.0, 0.111}}), ValidationError);
    std::filesystem::remove(path);
}

TEST(PosteriorModel, ValidatesInputs)
{
    const ModelParams p = scaled();
    ObservationSet empty;
    EXPECT_THROW(PosteriorModel(p, empty, PriorSpec::gaussian(0.0, 1.0)), ValidationError);
    EXPECT_THROW(PosteriorModel(p, model1_data(3), PriorSpec::uniform(1.0, 0.0)), ValidationError);
}
