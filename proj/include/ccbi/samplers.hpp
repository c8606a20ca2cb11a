#pragma once

// Constrained samplers for a scalar parameter: random-walk Metropolis with a
// hard feasibility indicator (cRW), penalized HMC (cHMC), penalized SVGD
// (cSVGD) and SVGD with projection onto the feasible set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ccbi/errors.hpp"
#include "ccbi/random.hpp"

namespace ccbi {

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index is
/// handled by exactly one call, so results never depend on `jobs`.
template <typename Body>
void parallel_for(std::size_t n, std::size_t jobs, Body&& body)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += jobs) {
                    body(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

struct MarkovChain {
    std::vector<double> samples;
    std::vector<bool> accepted;
    std::vector<bool> feasible;
    std::vector<double> log_post;
    std::vector<double> cumulative_seconds; // zeros unless timing was requested
    std::uint64_t seed = 0;
    std::map<std::string, double> config;
    std::string sampler;

    bool is_markov = true; // false after feasibility post-processing
    std::size_t original_length = 0;
    std::size_t removed = 0;
    std::size_t divergences = 0;
    double total_seconds = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    double acceptance_rate() const
    {
        if (accepted.empty()) {
            return 0.0;
        }
        return static_cast<double>(std::count(accepted.begin(), accepted.end(), true))
            / static_cast<double>(accepted.size());
    }

    double infeasible_fraction() const
    {
        if (feasible.empty()) {
            return 0.0;
        }
        return static_cast<double>(std::count(feasible.begin(), feasible.end(), false))
            / static_cast<double>(feasible.size());
    }

    void push(double theta, bool acc, bool feas, double lp, double seconds)
    {
        samples.push_back(theta);
        accepted.push_back(acc);
        feasible.push_back(feas);
        log_post.push_back(lp);
        cumulative_seconds.push_back(seconds);
    }
};

namespace detail {

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace detail

struct CrwOptions {
    double proposal_std = 1.0;
    std::size_t n_samples = 1000;
    double theta_init = 0.0;
    std::uint64_t seed = 1;
    bool record_timing = false;
};

/// Metropolis random walk whose kernel multiplies the acceptance probability
/// by the feasibility indicator of the proposal.
template <typename LogPost, typename Feasible>
MarkovChain run_crw(const LogPost& log_post, const Feasible& feasible, const CrwOptions& opt)
{
    detail::require(opt.proposal_std > 0.0, "proposal_std must be positive");
    if (!feasible(opt.theta_init)) {
        throw InfeasibleStartError("initial theta " + std::to_string(opt.theta_init)
                                   + " violates the chance constraint; run scan-feasible to locate the feasible set");
    }
    MarkovChain chain;
    chain.sampler = "crw";
    chain.seed = opt.seed;
    chain.config = {{"proposal_std", opt.proposal_std},
                    {"n_samples", static_cast<double>(opt.n_samples)},
                    {"theta_init", opt.theta_init}};
    chain.samples.reserve(opt.n_samples);
    Rng rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const detail::Stopwatch clock;
    double theta = opt.theta_init;
    double lp = log_post(theta);
    for (std::size_t i = 0; i < opt.n_samples; ++i) {
        const double proposal = theta + opt.proposal_std * normal(rng);
        const double u = unif(rng);
        bool acc = false;
        if (feasible(proposal)) {
            const double lp_new = log_post(proposal);
            if (std::log(u) < lp_new - lp) {
                theta = proposal;
                lp = lp_new;
                acc = true;
            }
        }
        chain.push(theta, acc, true, lp, opt.record_timing ? clock.seconds() : 0.0);
    }
    chain.original_length = chain.size();
    chain.total_seconds = clock.seconds();
    return chain;
}

struct ChmcOptions {
    double mass = 1.0;
    double step = 0.1;
    std::size_t max_leapfrog = 10;
    std::size_t n_samples = 1000;
    double theta_init = 0.0;
    std::uint64_t seed = 1;
    bool record_timing = false;
};

/// HMC with the symmetric leapfrog driven by the (penalized) gradient.
/// Feasibility is recorded, not enforced.
template <typename LogPost, typename Gradient, typename Feasible>
MarkovChain run_chmc(const LogPost& log_post, const Gradient& grad, const Feasible& feasible, const ChmcOptions& opt)
{
    detail::require(opt.mass > 0.0 && opt.step > 0.0, "mass and step must be positive");
    detail::require(opt.max_leapfrog >= 1, "max_leapfrog must be >= 1");
    MarkovChain chain;
    chain.sampler = "chmc";
    chain.seed = opt.seed;
    chain.config = {{"mass", opt.mass},
                    {"step", opt.step},
                    {"max_leapfrog", static_cast<double>(opt.max_leapfrog)},
                    {"n_samples", static_cast<double>(opt.n_samples)},
                    {"theta_init", opt.theta_init}};
    chain.samples.reserve(opt.n_samples);
    Rng rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> n_leap(1, opt.max_leapfrog);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const detail::Stopwatch clock;
    const double sqrt_mass = std::sqrt(opt.mass);
    double theta = opt.theta_init;
    double lp = log_post(theta);
    bool feas = feasible(theta);
    for (std::size_t i = 0; i < opt.n_samples; ++i) {
        const double m0 = sqrt_mass * normal(rng);
        const std::size_t steps = n_leap(rng);
        const double u = unif(rng);
        double x = theta;
        double m = m0;
        bool ok = true;
        try {
            m += 0.5 * opt.step * grad(x);
            for (std::size_t l = 0; l < steps; ++l) {
                x += opt.step * m / opt.mass;
                const double g = grad(x);
                m += (l + 1 == steps ? 0.5 : 1.0) * opt.step * g;
            }
        } catch (const Error&) {
            ok = false;
        }
        bool acc = false;
        if (ok && std::isfinite(x) && std::isfinite(m)) {
            const double lp_new = log_post(x);
            const double h_old = -lp + 0.5 * m0 * m0 / opt.mass;
            const double h_new = -lp_new + 0.5 * m * m / opt.mass;
            if (!std::isfinite(h_new - h_old)) {
                ++chain.divergences;
            } else if (std::log(u) < h_old - h_new) {
                theta = x;
                lp = lp_new;
                feas = feasible(theta);
                acc = true;
            }
        } else {
            ++chain.divergences;
        }
        chain.push(theta, acc, feas, lp, opt.record_timing ? clock.seconds() : 0.0);
    }
    chain.original_length = chain.size();
    chain.total_seconds = clock.seconds();
    return chain;
}

struct ParticleHistory {
    std::vector<std::vector<double>> generations; // generation 0 is the initial set
    std::vector<double> step_sizes;               // mean applied step per generation
    std::vector<std::vector<bool>> feasible;      // filled when a feasibility test is supplied
    std::uint64_t seed = 0;
    std::string sampler;
    double total_seconds = 0.0;

    std::size_t n_particles() const { return generations.empty() ? 0 : generations.front().size(); }

    /// Generations 1..last flattened; n_particles x n_generations samples.
    std::vector<double> pooled_samples(std::size_t first_generation = 1) const
    {
        std::vector<double> out;
        for (std::size_t g = first_generation; g < generations.size(); ++g) {
            out.insert(out.end(), generations[g].begin(), generations[g].end());
        }
        return out;
    }
};

struct SvgdOptions {
    std::size_t n_particles = 100;
    std::size_t n_generations = 500;
    double step = 0.05;
    double decay = 0.9;         // accumulator weight of the step adaption
    double bandwidth = 0.0;     // <= 0 selects the median heuristic
    std::vector<double> initial; // empty: draw N(init_mean, init_std^2)
    double init_mean = 0.0;
    double init_std = 1.0;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
};

namespace detail {

inline std::vector<double> initial_particles(const SvgdOptions& opt)
{
    if (!opt.initial.empty()) {
        detail::require(opt.initial.size() == opt.n_particles, "initial particle count does not match n_particles");
        return opt.initial;
    }
    detail::require(opt.init_std >= 0.0, "init_std must be >= 0");
    Rng rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(opt.n_particles);
    for (auto& v : x) {
        v = opt.init_mean + opt.init_std * normal(rng);
    }
    return x;
}

/// Median heuristic over distinct pairs of squared distances.
inline double svgd_bandwidth(std::span<const double> x, double fixed)
{
    if (fixed > 0.0) {
        return fixed;
    }
    const std::size_t n = x.size();
    if (n < 2) {
        return 1.0;
    }
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d2.push_back((x[i] - x[j]) * (x[i] - x[j]));
        }
    }
    const std::size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    double med = d2[mid];
    if (d2.size() % 2 == 0) {
        med = 0.5 * (med + *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    if (med <= 0.0) {
        return 1.0;
    }
    return std::sqrt(0.5 * med / std::log(static_cast<double>(n) + 1.0));
}

/// Stein direction (1/n) sum_j [k(x_j,x_i) g_j + d/dx_j k(x_j,x_i)].
inline std::vector<double> stein_direction(std::span<const double> x, std::span<const double> g, double h)
{
    const std::size_t n = x.size();
    std::vector<double> phi(n, 0.0);
    const double inv_h2 = 1.0 / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x[j] - x[i];
            const double k = std::exp(-0.5 * d * d * inv_h2);
            acc += k * g[j] - d * inv_h2 * k;
        }
        phi[i] = acc / static_cast<double>(n);
    }
    return phi;
}

/// Per-particle accumulator step adaption.
class StepAdaption {
public:
    StepAdaption(std::size_t n, double step, double decay) : hist_(n, 0.0), step_(step), decay_(decay) {}

    /// Scaled displacement; the first call seeds the accumulator.
    std::vector<double> apply(std::span<const double> direction)
    {
        std::vector<double> out(direction.size());
        for (std::size_t i = 0; i < direction.size(); ++i) {
            const double g2 = direction[i] * direction[i];
            hist_[i] = first_ ? g2 : decay_ * hist_[i] + (1.0 - decay_) * g2;
            out[i] = step_ * direction[i] / (1e-6 + std::sqrt(hist_[i]));
        }
        first_ = false;
        return out;
    }

private:
    std::vector<double> hist_;
    double step_;
    double decay_;
    bool first_ = true;
};

inline double mean_abs(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += std::abs(x);
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace detail

/// SVGD with a (penalized) gradient; generations are synchronous, so results
/// are independent of opt.jobs. `feasible` is only recorded.
template <typename Gradient, typename Feasible>
ParticleHistory run_csvgd(const Gradient& grad, const Feasible& feasible, const SvgdOptions& opt)
{
    detail::require(opt.n_particles >= 1, "n_particles must be >= 1");
    detail::require(opt.step > 0.0, "step must be positive");
    ParticleHistory hist;
    hist.sampler = "csvgd";
    hist.seed = opt.seed;
    const detail::Stopwatch clock;
    std::vector<double> x = detail::initial_particles(opt);
    const std::size_t n = x.size();
    detail::StepAdaption adapt(n, opt.step, opt.decay);
    std::vector<double> g(n);
    std::vector<char> feas(n);
    auto record = [&](const std::vector<double>& particles) {
        parallel_for(n, opt.jobs, [&](std::size_t i) { feas[i] = feasible(particles[i]) ? 1 : 0; });
        hist.generations.push_back(particles);
        hist.feasible.emplace_back(feas.begin(), feas.end());
    };
    record(x);
    hist.step_sizes.push_back(0.0);
    for (std::size_t gen = 0; gen < opt.n_generations; ++gen) {
        parallel_for(n, opt.jobs, [&](std::size_t i) {
            try {
                g[i] = grad(x[i]);
            } catch (const Error&) {
                g[i] = 0.0;
            }
        });
        const double h = detail::svgd_bandwidth(x, opt.bandwidth);
        const auto phi = detail::stein_direction(x, g, h);
        const auto dx = adapt.apply(phi);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += dx[i];
        }
        hist.step_sizes.push_back(detail::mean_abs(dx));
        record(x);
    }
    hist.total_seconds = clock.seconds();
    return hist;
}

/// SVGD whose per-particle move is d = Pr(x + phi) - x, with the result
/// projected again so every generation lies in the feasible set.
template <typename Gradient, typename Projection>
ParticleHistory run_projected_svgd(const Gradient& grad, const Projection& project, const SvgdOptions& opt)
{
    detail::require(opt.n_particles >= 1, "n_particles must be >= 1");
    detail::require(opt.step > 0.0, "step must be positive");
    ParticleHistory hist;
    hist.sampler = "projected_svgd";
    hist.seed = opt.seed;
    const detail::Stopwatch clock;
    std::vector<double> x = detail::initial_particles(opt);
    const std::size_t n = x.size();
    for (auto& v : x) {
        v = project(v);
    }
    detail::StepAdaption adapt(n, opt.step, opt.decay);
    std::vector<double> g(n);
    hist.generations.push_back(x);
    hist.feasible.emplace_back(n, true);
    hist.step_sizes.push_back(0.0);
    for (std::size_t gen = 0; gen < opt.n_generations; ++gen) {
        parallel_for(n, opt.jobs, [&](std::size_t i) {
            try {
                g[i] = grad(x[i]);
            } catch (const Error&) {
                g[i] = 0.0;
            }
        });
        const double h = detail::svgd_bandwidth(x, opt.bandwidth);
        const auto phi = detail::stein_direction(x, g, h);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = project(x[i] + phi[i]) - x[i];
        }
        const auto dx = adapt.apply(d);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = project(x[i] + dx[i]);
        }
        hist.step_sizes.push_back(detail::mean_abs(dx));
        hist.generations.push_back(x);
        hist.feasible.emplace_back(n, true);
    }
    hist.total_seconds = clock.seconds();
    return hist;
}

/// Keeps only samples the oracle accepts. The result is not a Markov chain.
template <typename Feasible>
MarkovChain postprocess_feasible(const MarkovChain& chain, const Feasible& feasible)
{
    MarkovChain out;
    out.sampler = chain.sampler;
    out.seed = chain.seed;
    out.config = chain.config;
    out.divergences = chain.divergences;
    out.total_seconds = chain.total_seconds;
    out.is_markov = false;
    out.original_length = chain.size();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (feasible(chain.samples[i])) {
            out.push(chain.samples[i], chain.accepted[i], true, chain.log_post[i], chain.cumulative_seconds[i]);
        }
    }
    out.removed = chain.size() - out.size();
    return out;
}

/// Chain view of pooled particles so the chain tools apply to SVGD output.
inline MarkovChain particles_as_chain(const ParticleHistory& hist, std::size_t first_generation = 1)
{
    MarkovChain chain;
    chain.sampler = hist.sampler;
    chain.seed = hist.seed;
    chain.is_markov = false;
    chain.total_seconds = hist.total_seconds;
    for (std::size_t g = first_generation; g < hist.generations.size(); ++g) {
        for (std::size_t i = 0; i < hist.generations[g].size(); ++i) {
            const bool feas = g < hist.feasible.size() ? hist.feasible[g][i] : true;
            chain.push(hist.generations[g][i], true, feas, std::numeric_limits<double>::quiet_NaN(), 0.0);
        }
    }
    chain.original_length = chain.size();
    return chain;
}

inline void write_chain_csv(const std::string& path, const MarkovChain& chain)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "index,theta,accepted,feasible,log_post,cumulative_seconds\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out << i << ',' << chain.samples[i] << ',' << (chain.accepted[i] ? 1 : 0) << ',' << (chain.feasible[i] ? 1 : 0)
            << ',' << chain.log_post[i] << ',' << chain.cumulative_seconds[i] << '\n';
    }
}

/// Inverse of write_chain_csv; seed and config are not stored in the CSV.
inline MarkovChain read_chain_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read " + path);
    }
    std::string line;
    std::getline(in, line);
    detail::require(line == "index,theta,accepted,feasible,log_post,cumulative_seconds",
                    path + ": unexpected chain header");
    MarkovChain chain;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) {
            cells.push_back(cell);
        }
        detail::require(cells.size() == 6, path + ":" + std::to_string(lineno) + ": expected 6 columns");
        try {
            chain.push(std::stod(cells[1]), cells[2] == "1", cells[3] == "1", std::stod(cells[4]), std::stod(cells[5]));
        } catch (const std::logic_error&) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    chain.original_length = chain.size();
    if (!chain.cumulative_seconds.empty()) {
        chain.total_seconds = chain.cumulative_seconds.back();
    }
    return chain;
}

inline void write_particles_csv(const std::string& path, const ParticleHistory& hist)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "generation,particle_index,theta\n";
    for (std::size_t g = 0; g < hist.generations.size(); ++g) {
        for (std::size_t i = 0; i < hist.generations[g].size(); ++i) {
            out << g << ',' << i << ',' << hist.generations[g][i] << '\n';
        }
    }
}

} // namespace ccbi
