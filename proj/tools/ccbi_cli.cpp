// Command-line front end: ccbi <subcommand> --config scenario.json [options]

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>

#include "pipeline.hpp"
#include "surrogate_io.hpp"

namespace fs = std::filesystem;
using namespace ccbi;
using namespace ccbi::app;
using nlohmann::json;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::string output;
};

void log_line(const std::string& msg) { std::cerr << "[ccbi] " << msg << '\n'; }

ScenarioConfig load(const GlobalOptions& g)
{
    ScenarioConfig cfg = load_scenario(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (!g.output.empty()) {
        cfg.output_dir = g.output;
    }
    fs::create_directories(cfg.output_dir);
    return cfg;
}

fs::path out_path(const ScenarioConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

void simulate_forward(const GlobalOptions& g, double theta, std::optional<double> q, std::optional<double> phi)
{
    const auto cfg = load(g);
    const double re = theta > 0.0 ? theta : cfg.params.reynolds_nominal;
    const auto traj = integrate_strip(cfg.params, q.value_or(cfg.params.heat_flux_nominal),
                                      phi.value_or(cfg.params.porosity), re, cfg.surrogate.n_steps);
    const auto path = out_path(cfg, "strip_trajectory.csv");
    std::ofstream out(path);
    out.precision(17);
    out << "x,t_fluid,t_solid,density,velocity\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << traj.x_grid[i] << ',' << traj.t_fluid[i] << ',' << traj.t_solid[i] << ',' << traj.density[i] << ','
            << traj.velocity[i] << '\n';
    }
    std::cout.precision(10);
    std::cout << "Re=" << re << " T_f(1)=" << traj.t_fluid.back() << " T_s(1)=" << traj.t_solid.back()
              << " p=" << interface_pressure(traj) << '\n';
    write_json(out_path(cfg, "provenance.json").string(), provenance(cfg, "simulate-forward"));
}

void build_surrogate(const GlobalOptions& g, double theta)
{
    const auto cfg = load(g);
    const double re = theta > 0.0 ? theta : cfg.params.reynolds_nominal;
    const auto cache = cache_dir();
    json doc = {{"re", re}, {"strips", json::array()}};
    std::vector<std::pair<ModelParams, GermSpec>> kinds;
    if (cfg.model == 1) {
        kinds.emplace_back(cfg.params, cfg.strip_germ(0));
    } else {
        std::vector<std::tuple<double, double, double>> seen;
        for (std::size_t i = 0; i < cfg.geometry->n_strips; ++i) {
            const auto phi = cfg.geometry->strip_porosity(i);
            if (!phi) {
                continue;
            }
            const auto germ = cfg.strip_germ(i);
            const auto key = std::make_tuple(*phi, germ.variables[0].mean, germ.variables[0].std_dev);
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                continue;
            }
            seen.push_back(key);
            ModelParams p = cfg.params;
            p.porosity = *phi;
            kinds.emplace_back(p, germ);
        }
    }
    std::size_t hits = 0;
    for (const auto& [params, germ] : kinds) {
        bool hit = false;
        const StripSurrogate s = cache ? cached_surrogate(params, germ, re, cfg.surrogate, *cache, &hit)
                                       : build_strip_surrogate(params, germ, re, cfg.surrogate);
        hits += hit ? 1 : 0;
        const auto m = surrogate_moments(s, s.n_nodes() - 1);
        json entry = surrogate_to_json(s);
        entry["porosity"] = params.porosity;
        entry["outlet_fluid_mean"] = m.mean;
        entry["outlet_fluid_variance"] = m.variance;
        doc["strips"].push_back(entry);
        std::cout.precision(10);
        std::cout << "phi=" << params.porosity << " T_f(1) mean=" << m.mean << " var=" << m.variance << '\n';
    }
    write_json(out_path(cfg, "surrogate.json").string(), doc);
    if (cache) {
        log_line("cache " + *cache + ": " + std::to_string(hits) + " of " + std::to_string(kinds.size()) + " hits");
    }
}

void scan_feasible(const GlobalOptions& g)
{
    const auto cfg = load(g);
    const Problem problem(cfg, g.jobs, log_line);
    write_scan_csv(out_path(cfg, "scan.csv").string(), problem.scan());
    json set = json::array();
    for (const auto& i : problem.scan().set.intervals()) {
        set.push_back({std::isfinite(i.lo) ? json(i.lo) : json(nullptr), std::isfinite(i.hi) ? json(i.hi) : json(nullptr)});
    }
    write_json(out_path(cfg, "feasible_set.json").string(),
               {{"intervals", set}, {"transitions", problem.scan().transitions}, {"alpha", cfg.constraint.spec.alpha},
                {"beta", cfg.constraint.spec.beta}, {"surrogate_failures", problem.oracle().failures()}});
    std::cout << set.dump() << '\n';
}

void sample(const GlobalOptions& g)
{
    const auto cfg = load(g);
    const Problem problem(cfg, g.jobs, log_line);
    write_observations_csv(out_path(cfg, "observations.csv").string(), problem.posterior().observations());
    const auto runs = run_chains(problem);
    for (std::size_t k = 0; k < runs.size(); ++k) {
        write_chain_csv(out_path(cfg, "chain_" + std::to_string(k) + ".csv").string(), runs[k].chain);
        if (runs[k].particles) {
            write_particles_csv(out_path(cfg, "particles_" + std::to_string(k) + ".csv").string(), *runs[k].particles);
        }
        std::cout << "chain " << k << ": " << runs[k].chain.size() << " samples, acceptance "
                  << runs[k].chain.acceptance_rate() << ", infeasible " << runs[k].chain.infeasible_fraction() << '\n';
    }
    write_json(out_path(cfg, "provenance.json").string(), provenance(cfg, "sample"));
}

void diagnose(const GlobalOptions& g, std::vector<std::string> chain_files)
{
    const auto cfg = load(g);
    if (chain_files.empty()) {
        for (std::size_t k = 0; k < cfg.n_chains; ++k) {
            chain_files.push_back(out_path(cfg, "chain_" + std::to_string(k) + ".csv").string());
        }
    }
    const Problem problem(cfg, g.jobs, log_line);
    const auto ref = make_reference(problem);
    write_reference_csv(out_path(cfg, "reference.csv").string(), ref);
    std::vector<MarkovChain> chains;
    for (const auto& f : chain_files) {
        chains.push_back(read_chain_csv(f));
    }
    const auto& chain = chains.front();
    const auto cps = cfg.diagnostics.checkpoints.empty() ? default_checkpoints(chain.size()) : cfg.diagnostics.checkpoints;
    json diag;
    json l2 = json::array();
    for (const auto& p : l2_series(chain, ref, cfg, cps)) {
        l2.push_back({p.n, p.error, p.cpu_seconds});
    }
    diag["l2_series"] = l2;
    json bg = json::array();
    if (chains.size() >= 2) {
        std::vector<std::vector<double>> samples;
        std::size_t shortest = chain.size();
        for (const auto& c : chains) {
            samples.push_back(c.samples);
            shortest = std::min(shortest, c.size());
        }
        std::vector<std::size_t> valid;
        std::copy_if(cps.begin(), cps.end(), std::back_inserter(valid), [&](std::size_t n) { return n <= shortest; });
        for (const auto& p : brooks_gelman_ratio(samples, cfg.diagnostics.confidence, valid)) {
            bg.push_back({p.n, p.ratio});
        }
    }
    diag["bg_series"] = bg;
    diag["acceptance_rate"] = chain.acceptance_rate();
    diag["infeasible_fraction"] = chain.infeasible_fraction();
    write_json(out_path(cfg, "diagnostics.json").string(), diag);
    std::cout << diag.dump(2) << '\n';
}

void compare(const GlobalOptions& g, const std::vector<std::string>& samplers)
{
    const auto cfg = load(g);
    const Problem problem(cfg, g.jobs, log_line);
    const auto ref = make_reference(problem);
    std::vector<std::size_t> cps = cfg.diagnostics.checkpoints;
    if (cps.empty()) {
        cps = default_checkpoints(cfg.n_samples);
    }
    std::ofstream out(out_path(cfg, "compare.csv"));
    out.precision(10);
    out << "sampler,n_samples,n_used,l2_error,l2_error_postprocessed,cpu_seconds\n";
    for (const auto& name : samplers) {
        const SamplerKind kind = parse_sampler_kind(name);
        const auto run = run_sampler(problem, kind, stream_seed(cfg.seed, 0));
        const auto post = postprocess_feasible(run.chain, [&](double t) { return problem.feasible(t); });
        for (const auto& p : l2_series(run.chain, ref, cfg, cps)) {
            const std::size_t used = std::min(p.n, run.chain.size());
            std::size_t feasible_used = 0;
            for (std::size_t i = 0; i < used; ++i) {
                feasible_used += problem.feasible(run.chain.samples[i]) ? 1 : 0;
            }
            const double post_l2 = feasible_used > 0
                ? chain_l2(std::span<const double>(post.samples).first(feasible_used), ref, cfg)
                : std::numeric_limits<double>::quiet_NaN();
            out << name << ',' << p.n << ',' << used << ',' << p.error << ',' << post_l2 << ',' << p.cpu_seconds << '\n';
        }
        log_line(name + " done in " + std::to_string(run.chain.total_seconds) + " s");
    }
    write_json(out_path(cfg, "provenance.json").string(), provenance(cfg, "compare"));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Chance-constrained Bayesian inversion for transpiration cooling"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Master seed override");
    app.add_option("--config", g.config, "Scenario JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--output", g.output, "Output directory (overrides the scenario)");
    app.fallthrough();

    double theta = 0.0;
    std::optional<double> q;
    std::optional<double> phi;
    auto* fwd = app.add_subcommand("simulate-forward", "Integrate one strip and write its trajectory");
    fwd->add_option("--theta", theta, "Reynolds number (default: nominal)");
    fwd->add_option("--q", q, "Heat flux");
    fwd->add_option("--phi", phi, "Porosity");
    auto* sur = app.add_subcommand("build-surrogate", "Build the strip surrogate(s) at one theta");
    sur->add_option("--theta", theta, "Reynolds number (default: nominal)");
    app.add_subcommand("scan-feasible", "Locate the chance-feasible set by scan and bisection");
    app.add_subcommand("sample", "Generate data and run the configured sampler");
    std::vector<std::string> chain_files;
    auto* diag = app.add_subcommand("diagnose", "L2 and Brooks-Gelman series of chain CSVs");
    diag->add_option("--chains", chain_files, "Chain CSV files (default: chains in the output directory)");
    std::vector<std::string> samplers{"crw", "chmc", "csvgd", "projected_svgd"};
    auto* cmp = app.add_subcommand("compare", "L2 error versus sample count for several samplers");
    cmp->add_option("--samplers", samplers, "Samplers to compare")->delimiter(',');
    app.add_subcommand("run", "Full pipeline: data, scan, sampling, diagnostics, snapshots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (*seed_opt) {
        g.seed = seed;
    }
    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate-forward") {
            simulate_forward(g, theta, q, phi);
        } else if (cmd == "build-surrogate") {
            build_surrogate(g, theta);
        } else if (cmd == "scan-feasible") {
            scan_feasible(g);
        } else if (cmd == "sample") {
            sample(g);
        } else if (cmd == "diagnose") {
            diagnose(g, chain_files);
        } else if (cmd == "compare") {
            compare(g, samplers);
        } else {
            run_scenario(load(g), g.jobs, log_line);
        }
    } catch (const InfeasibleStartError& e) {
        std::cerr << "error: infeasible start: " << e.what() << '\n';
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
