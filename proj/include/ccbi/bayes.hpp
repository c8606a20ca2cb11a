#pragma once

// Prior, synthetic pressure data, likelihood, and gradients of the
// unconstrained log-posterior in the scalar parameter theta = Re.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccbi/errors.hpp"
#include "ccbi/model_params.hpp"
#include "ccbi/porous_flow.hpp"
#include "ccbi/random.hpp"

namespace ccbi {

enum class PriorKind { gaussian, uniform };

struct PriorSpec {
    PriorKind kind = PriorKind::gaussian;
    double mean = 0.0;
    double std_dev = 1.0;
    double low = 0.0;
    double high = 1.0;
    double floor = 1e-300; // density outside a uniform support

    static PriorSpec gaussian(double mean, double std_dev) { return {PriorKind::gaussian, mean, std_dev, 0.0, 1.0}; }
    static PriorSpec uniform(double low, double high) { return {PriorKind::uniform, 0.0, 1.0, low, high}; }

    bool in_support(double theta) const { return kind == PriorKind::gaussian || (theta >= low && theta <= high); }

    void validate() const
    {
        if (kind == PriorKind::gaussian) {
            detail::require(std_dev > 0.0 && std::isfinite(mean), "gaussian prior needs finite mean and std > 0");
        } else {
            detail::require(low < high, "uniform prior needs low < high");
        }
        detail::require(floor > 0.0 && floor < 1.0, "prior floor must lie in (0,1)");
    }
};

inline double log_prior(double theta, const PriorSpec& prior)
{
    if (prior.kind == PriorKind::gaussian) {
        const double z = (theta - prior.mean) / prior.std_dev;
        return -std::log(std::sqrt(2.0 * std::numbers::pi) * prior.std_dev) - 0.5 * z * z;
    }
    return prior.in_support(theta) ? -std::log(prior.high - prior.low) : std::log(prior.floor);
}

inline double grad_log_prior(double theta, const PriorSpec& prior)
{
    if (prior.kind == PriorKind::gaussian) {
        return -(theta - prior.mean) / (prior.std_dev * prior.std_dev);
    }
    return 0.0;
}

/// One pressure data set, measured on a flow of the given porosity.
struct ObservationGroup {
    std::string label;
    std::vector<double> values;
    double noise_std = 1.0;
    double porosity = 0.0;
};

struct ObservationSet {
    std::vector<ObservationGroup> groups;

    void validate() const
    {
        detail::require(!groups.empty(), "observation set has no groups");
        for (const auto& g : groups) {
            detail::require(!g.values.empty(), "observation group '" + g.label + "' is empty");
            detail::require(g.noise_std > 0.0, "observation group '" + g.label + "' needs noise_std > 0");
            detail::require(g.porosity > 0.0 && g.porosity < 1.0, "observation group '" + g.label + "' porosity outside (0,1)");
        }
    }
};

/// Data-generating flow: label, porosity seen by the likelihood, and the
/// true germ realization xi* used to synthesize the data.
struct ObservationGroupSpec {
    std::string label;
    double porosity = 0.0;
    GermPoint xi_true;
    double noise_std = 1.0;
};

/// F(theta*, xi*) once per group plus i.i.d. N(0, noise_std^2) noise.
inline ObservationSet generate_observations(const ModelParams& params, const std::vector<ObservationGroupSpec>& specs,
                                            double theta_true, std::size_t n_obs, std::uint64_t seed,
                                            const ForwardOptions& opt = {})
{
    detail::require(n_obs >= 1, "n_obs must be >= 1");
    detail::require(!specs.empty(), "no observation groups requested");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ObservationSet obs;
    for (const auto& s : specs) {
        detail::require(s.noise_std >= 0.0, "noise_std must be >= 0");
        const double clean = forward_pressure_at_mean(params, s.xi_true, theta_true, opt);
        ObservationGroup g{s.label, {}, s.noise_std, s.porosity};
        g.values.reserve(n_obs);
        for (std::size_t i = 0; i < n_obs; ++i) {
            g.values.push_back(clean + s.noise_std * normal(rng));
        }
        obs.groups.push_back(std::move(g));
    }
    return obs;
}

struct LikelihoodOptions {
    bool classic_iid = false; // standard per-observation Gaussian instead of the 1/N-tempered form
    double fd_step = 1e-2;    // one-sided step for dp/dtheta
    ForwardOptions forward;
};

namespace detail {

inline double group_pressure(const ModelParams& params, const ObservationGroup& g, double theta,
                             const ForwardOptions& opt)
{
    return forward_pressure_at_mean(params, {params.heat_flux_nominal, g.porosity}, theta, opt);
}

inline double group_log_likelihood(const ObservationGroup& g, double model, bool classic)
{
    const auto n = static_cast<double>(g.values.size());
    const double s2 = g.noise_std * g.noise_std;
    double sq = 0.0;
    for (double d : g.values) {
        sq += (d - model) * (d - model);
    }
    const double log_norm = -std::log(std::sqrt(2.0 * std::numbers::pi) * g.noise_std);
    return classic ? n * log_norm - sq / (2.0 * s2) : log_norm - sq / (2.0 * n * s2);
}

} // namespace detail

/// Sum over groups; F is the pressure at the germ mean (q0, group porosity).
/// Forward failures give -inf.
inline double log_likelihood(const ObservationSet& obs, double theta, const ModelParams& params,
                             const LikelihoodOptions& opt = {})
{
    double total = 0.0;
    for (const auto& g : obs.groups) {
        try {
            total += detail::group_log_likelihood(g, detail::group_pressure(params, g, theta, opt.forward), opt.classic_iid);
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
    }
    return total;
}

inline double log_unconstrained_posterior(double theta, const ObservationSet& obs, const PriorSpec& prior,
                                          const ModelParams& params, const LikelihoodOptions& opt = {})
{
    return log_prior(theta, prior) + log_likelihood(obs, theta, params, opt);
}

/// Chain rule with dp/dtheta from a forward difference; forward failures throw.
inline double grad_log_posterior(double theta, const ObservationSet& obs, const PriorSpec& prior,
                                 const ModelParams& params, const LikelihoodOptions& opt = {})
{
    detail::require(opt.fd_step > 0.0, "fd_step must be positive");
    double grad = grad_log_prior(theta, prior);
    for (const auto& g : obs.groups) {
        const double p0 = detail::group_pressure(params, g, theta, opt.forward);
        const double p1 = detail::group_pressure(params, g, theta + opt.fd_step, opt.forward);
        const double dp = (p1 - p0) / opt.fd_step;
        double resid = 0.0;
        for (double d : g.values) {
            resid += d - p0;
        }
        const double s2 = g.noise_std * g.noise_std;
        const double scale = opt.classic_iid ? 1.0 / s2 : 1.0 / (static_cast<double>(g.values.size()) * s2);
        grad += scale * resid * dp;
    }
    return grad;
}

/// Adds delta pointing toward the feasible set when theta is infeasible.
/// `direction` is +1, -1 or 0.
inline double penalized_gradient(double base_gradient, bool feasible, double delta, double direction)
{
    return feasible ? base_gradient : base_gradient + delta * direction;
}

/// Bundles the pieces of the unconstrained posterior for the samplers.
class PosteriorModel {
public:
    PosteriorModel(ModelParams params, ObservationSet obs, PriorSpec prior, LikelihoodOptions opt = {})
        : params_(params), obs_(std::move(obs)), prior_(prior), opt_(opt)
    {
        params_.validate();
        obs_.validate();
        prior_.validate();
    }

    double log_likelihood(double theta) const { return ccbi::log_likelihood(obs_, theta, params_, opt_); }
    double log_prior(double theta) const { return ccbi::log_prior(theta, prior_); }
    double log_posterior(double theta) const { return log_prior(theta) + log_likelihood(theta); }
    double gradient(double theta) const { return grad_log_posterior(theta, obs_, prior_, params_, opt_); }

    const ModelParams& params() const { return params_; }
    const ObservationSet& observations() const { return obs_; }
    const PriorSpec& prior() const { return prior_; }
    const LikelihoodOptions& options() const { return opt_; }

private:
    ModelParams params_;
    ObservationSet obs_;
    PriorSpec prior_;
    LikelihoodOptions opt_;
};

inline void write_observations_csv(const std::string& path, const ObservationSet& obs)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "group,value\n";
    for (const auto& g : obs.groups) {
        for (double v : g.values) {
            out << g.label << ',' << v << '\n';
        }
    }
}

/// Fills the values of `templates` (label, noise, porosity) from a
/// group,value CSV. Unknown labels and empty groups are errors.
inline ObservationSet read_observations_csv(const std::string& path, std::vector<ObservationGroup> templates)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read " + path);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        templates[i].values.clear();
        index[templates[i].label] = i;
    }
    std::string line;
    std::getline(in, line);
    detail::require(line.rfind("group,value", 0) == 0, path + ": expected header 'group,value'");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        detail::require(comma != std::string::npos, path + ":" + std::to_string(lineno) + ": missing comma");
        const std::string label = line.substr(0, comma);
        const auto it = index.find(label);
        detail::require(it != index.end(), path + ":" + std::to_string(lineno) + ": unknown group '" + label + "'");
        double v = 0.0;
        std::istringstream ss(line.substr(comma + 1));
        ss >> v;
        detail::require(!ss.fail() && std::isfinite(v), path + ":" + std::to_string(lineno) + ": bad value");
        templates[it->second].values.push_back(v);
    }
    ObservationSet obs{std::move(templates)};
    obs.validate();
    return obs;
}

} // namespace ccbi
