#include "pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace ccbi::app {

using nlohmann::json;

ConstraintModel::ConstraintModel(const ScenarioConfig& cfg) : cfg_(cfg)
{
    if (cfg_.model != 1) {
        response_ = std::make_shared<InterfaceResponse>(*cfg_.geometry, cfg_.geometry->t_constraint);
    }
}

std::size_t ConstraintModel::germ_dims() const
{
    switch (cfg_.model) {
    case 1:
        return 2;
    case 2:
        return 1;
    default:
        return cfg_.geometry->n_strips;
    }
}

std::vector<StripSurrogate> ConstraintModel::strip_surrogates(double theta) const
{
    if (cfg_.model == 1) {
        return {build_strip_surrogate(cfg_.params, cfg_.strip_germ(0), theta, cfg_.surrogate)};
    }
    std::vector<StripSurrogate> out;
    std::map<std::tuple<double, double, double>, std::size_t> seen;
    const auto& g = *cfg_.geometry;
    for (std::size_t i = 0; i < g.n_strips; ++i) {
        const auto phi = g.strip_porosity(i);
        if (!phi) {
            continue;
        }
        const GermSpec germ = cfg_.strip_germ(i);
        const auto key = std::make_tuple(*phi, germ.variables[0].mean, germ.variables[0].std_dev);
        if (seen.contains(key)) {
            continue;
        }
        ModelParams p = cfg_.params;
        p.porosity = *phi;
        seen[key] = out.size();
        out.push_back(build_strip_surrogate(p, germ, theta, cfg_.surrogate));
    }
    return out;
}

std::vector<StripOutletExpansion> ConstraintModel::strip_expansions(double theta) const
{
    detail::require(cfg_.model != 1, "strip expansions need an interface geometry");
    const auto& g = *cfg_.geometry;
    std::map<std::tuple<double, double, double>, StripOutletExpansion> built;
    std::vector<StripOutletExpansion> out;
    out.reserve(g.n_strips);
    for (std::size_t i = 0; i < g.n_strips; ++i) {
        const auto phi = g.strip_porosity(i);
        if (!phi) {
            out.push_back(wall_expansion(g.wall_temp));
            continue;
        }
        const GermSpec germ = cfg_.strip_germ(i);
        const auto key = std::make_tuple(*phi, germ.variables[0].mean, germ.variables[0].std_dev);
        auto it = built.find(key);
        if (it == built.end()) {
            ModelParams p = cfg_.params;
            p.porosity = *phi;
            it = built.emplace(key, outlet_expansion(build_strip_surrogate(p, germ, theta, cfg_.surrogate), 0)).first;
        }
        StripOutletExpansion e = it->second;
        e.germ_variable = cfg_.model == 2 ? 0 : i;
        out.push_back(std::move(e));
    }
    return out;
}

InterfaceConstraint ConstraintModel::interface_constraint(double theta) const
{
    const auto strips = strip_expansions(theta);
    return InterfaceConstraint(*response_, strips, germ_dims(), cfg_.constraint.mode);
}

AnyChanceFunction ConstraintModel::operator()(double theta) const
{
    if (cfg_.model == 1) {
        return StripOutletConstraint(build_strip_surrogate(cfg_.params, cfg_.strip_germ(0), theta, cfg_.surrogate));
    }
    return interface_constraint(theta);
}

ObservationSet make_observations(const ScenarioConfig& cfg)
{
    if (!cfg.data.csv.empty()) {
        std::vector<ObservationGroup> templates;
        for (const auto& g : cfg.data.groups) {
            templates.push_back({g.label, {}, g.noise_std, g.porosity});
        }
        return read_observations_csv(cfg.data.csv, std::move(templates));
    }
    ObservationSet obs = generate_observations(cfg.params, cfg.data.groups, cfg.data.theta_true, cfg.data.n_obs,
                                               cfg.data.seed, cfg.likelihood.forward);
    return obs;
}

namespace {

/// Intervals touching the scan range edge are taken to continue beyond it.
FeasibleSet extend_edges(const BoundaryScan& scan, Interval range)
{
    std::vector<Interval> out = scan.set.intervals();
    for (auto& i : out) {
        if (i.lo <= range.lo) {
            i.lo = -std::numeric_limits<double>::infinity();
        }
        if (i.hi >= range.hi) {
            i.hi = std::numeric_limits<double>::infinity();
        }
    }
    return FeasibleSet(std::move(out));
}

} // namespace

Problem::Problem(ScenarioConfig cfg, std::size_t jobs, Logger log) : cfg_(std::move(cfg)), jobs_(std::max<std::size_t>(1, jobs))
{
    constraint_ = std::make_shared<ConstraintModel>(cfg_);
    auto model = constraint_;
    oracle_ = std::make_unique<FeasibilityOracle>(
        cfg_.constraint.spec, [model](double theta) { return (*model)(theta); }, cfg_.constraint.cache_quantum);
    if (log) {
        oracle_->on_warning = log;
    }
    const auto& c = cfg_.constraint;
    scan_ = scan_feasible_boundary(c.scan_range, c.spec.alpha, [this](double t) { return oracle_->probability(t); },
                                   c.scan_tol, c.scan_points);
    scan_.set = extend_edges(scan_, c.scan_range);
    if (log) {
        std::ostringstream msg;
        msg << "feasible set:";
        for (const auto& i : scan_.set.intervals()) {
            msg << " [" << i.lo << ", " << i.hi << "]";
        }
        if (scan_.set.empty()) {
            msg << " empty on [" << c.scan_range.lo << ", " << c.scan_range.hi << "]";
        }
        log(msg.str());
    }
    posterior_ = std::make_unique<PosteriorModel>(cfg_.params, make_observations(cfg_), cfg_.prior, cfg_.likelihood);
}

bool Problem::feasible(double theta) const
{
    return cfg_.constraint.use_scan ? scan_.set.contains(theta) : oracle_->evaluate(theta).feasible;
}

double Problem::penalty_direction(double theta) const
{
    if (!scan_.set.empty()) {
        return scan_.set.direction_toward(theta);
    }
    const double h = std::max(1.0, 1e-3 * std::abs(theta));
    const double dp = oracle_->probability(theta + h) - oracle_->probability(theta);
    return dp > 0.0 ? 1.0 : (dp < 0.0 ? -1.0 : 0.0);
}

double Problem::penalized_gradient(double theta, double delta) const
{
    double g = posterior_->gradient(theta);
    if (delta > 0.0) {
        g = ccbi::penalized_gradient(g, feasible(theta), delta, penalty_direction(theta));
        const auto& prior = cfg_.prior;
        if (prior.kind == PriorKind::uniform) {
            if (theta > prior.high) {
                g -= delta;
            } else if (theta < prior.low) {
                g += delta;
            }
        }
    }
    return g;
}

double Problem::default_start() const
{
    if (cfg_.sampler.theta_init != 0.0) {
        return cfg_.sampler.theta_init;
    }
    const auto& prior = cfg_.prior;
    double centre = prior.kind == PriorKind::gaussian ? prior.mean : 0.5 * (prior.low + prior.high);
    if (!scan_.set.empty()) {
        centre = scan_.set.project(centre);
    }
    return centre;
}

SampleRun run_sampler(const Problem& problem, SamplerKind kind, std::uint64_t seed)
{
    const auto& cfg = problem.config();
    const auto& s = cfg.sampler;
    auto log_post = [&](double t) { return problem.log_posterior(t); };
    auto feasible = [&](double t) { return problem.feasible(t); };
    SampleRun run;
    switch (kind) {
    case SamplerKind::crw:
        run.chain = run_crw(log_post, feasible, {s.proposal_std, cfg.n_samples, problem.default_start(), seed, s.record_timing});
        break;
    case SamplerKind::chmc: {
        auto grad = [&](double t) { return problem.penalized_gradient(t, s.delta); };
        run.chain = run_chmc(log_post, grad, feasible,
                             {s.mass, s.step, s.max_leapfrog, cfg.n_samples, problem.default_start(), seed, s.record_timing});
        break;
    }
    case SamplerKind::csvgd:
    case SamplerKind::projected_svgd: {
        SvgdOptions opt;
        opt.n_particles = s.n_particles;
        opt.n_generations = s.n_generations;
        opt.step = s.svgd_step;
        opt.decay = s.decay;
        opt.init_mean = s.init_mean;
        opt.init_std = s.init_std;
        opt.seed = seed;
        opt.jobs = problem.jobs();
        if (kind == SamplerKind::csvgd) {
            auto grad = [&](double t) { return problem.penalized_gradient(t, s.delta); };
            run.particles = run_csvgd(grad, feasible, opt);
        } else {
            const auto& set = problem.scan().set;
            if (set.empty()) {
                throw ValidationError("projected SVGD needs a nonempty feasible set");
            }
            auto grad = [&](double t) { return problem.posterior().gradient(t); };
            run.particles = run_projected_svgd(grad, [&](double t) { return set.project(t); }, opt);
        }
        run.chain = particles_as_chain(*run.particles);
        for (std::size_t i = 0; i < run.chain.size(); ++i) {
            run.chain.log_post[i] = problem.log_posterior(run.chain.samples[i]);
        }
        break;
    }
    }
    run.chain.config["seed"] = static_cast<double>(seed);
    return run;
}

std::vector<SampleRun> run_chains(const Problem& problem)
{
    const auto& cfg = problem.config();
    std::vector<SampleRun> runs(cfg.n_chains);
    parallel_for(cfg.n_chains, problem.jobs(), [&](std::size_t k) {
        runs[k] = run_sampler(problem, cfg.sampler.kind, stream_seed(cfg.seed, k));
    });
    return runs;
}

ReferenceDensity make_reference(const Problem& problem)
{
    const auto& cfg = problem.config();
    const Interval w = cfg.theta_window();
    return reference_posterior(
        linspace(w.lo, w.hi, cfg.diagnostics.reference_nodes), [&](double t) { return problem.log_posterior(t); },
        [&](double t) { return problem.feasible(t); });
}

std::vector<std::size_t> default_checkpoints(std::size_t n_total)
{
    std::vector<std::size_t> out;
    for (std::size_t base = 100; base <= n_total; base *= 10) {
        for (std::size_t m : {1, 2, 5}) {
            if (base * m <= n_total) {
                out.push_back(base * m);
            }
        }
    }
    if (out.empty() || out.back() != n_total) {
        out.push_back(n_total);
    }
    return out;
}

double chain_l2(std::span<const double> samples, const ReferenceDensity& ref, const ScenarioConfig& cfg)
{
    const Interval w = cfg.theta_window();
    const auto kept = burn_in(samples, cfg.burn_in_fraction);
    if (kept.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try {
        return relative_l2_error(chain_histogram(kept, cfg.diagnostics.n_bins, w.lo, w.hi), ref);
    } catch (const ValidationError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::vector<L2Point> l2_series(const MarkovChain& chain, const ReferenceDensity& ref, const ScenarioConfig& cfg,
                               std::span<const std::size_t> checkpoints)
{
    std::vector<L2Point> out;
    for (std::size_t n : checkpoints) {
        const std::size_t used = std::min(n, chain.size());
        if (used == 0) {
            continue;
        }
        const double seconds = chain.cumulative_seconds[used - 1] > 0.0
            ? chain.cumulative_seconds[used - 1]
            : chain.total_seconds * static_cast<double>(used) / static_cast<double>(chain.size());
        out.push_back({n, chain_l2(std::span<const double>(chain.samples).first(used), ref, cfg), seconds});
    }
    return out;
}

FieldAudit audit_interface(const Problem& problem, double theta, std::size_t draws, std::uint64_t seed)
{
    const auto& cfg = problem.config();
    detail::require(cfg.model != 1, "field audit needs an interface model");
    const auto& model = problem.constraint();
    const auto strips = model.strip_expansions(theta);
    const InterfaceConstraint joint(model.response(), strips, model.germ_dims(), InterfaceConstraintMode::joint);
    const GermSampleBank bank(seed, model.germ_dims(), draws);
    FieldAudit audit;
    audit.theta = theta;
    audit.draws = draws;
    audit.probability = static_cast<double>(joint.count_satisfied(bank, cfg.constraint.spec.beta)) / static_cast<double>(draws);

    std::vector<double> strip_means(strips.size());
    for (std::size_t i = 0; i < strips.size(); ++i) {
        strip_means[i] = strips[i].coeffs[0];
    }
    const auto& g = *cfg.geometry;
    audit.initial_mean = assemble_initial_field(g, strip_means, g.n_z);
    const auto stack = model.response().coefficient_stack(strips, model.germ_dims());
    audit.final_mean = {stack.z_grid, stack.mean, stack.time};

    const std::size_t n_z = stack.z_grid.size();
    Eigen::MatrixXd fields(static_cast<Eigen::Index>(n_z), static_cast<Eigen::Index>(draws));
    for (std::size_t s = 0; s < draws; ++s) {
        fields.col(static_cast<Eigen::Index>(s)) = joint.field(bank.sample(s));
    }
    audit.final_quantile = {stack.z_grid, std::vector<double>(n_z), stack.time};
    std::vector<double> row(draws);
    for (std::size_t j = 0; j < n_z; ++j) {
        for (std::size_t s = 0; s < draws; ++s) {
            row[s] = fields(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s));
        }
        std::sort(row.begin(), row.end());
        audit.final_quantile.values[j] = sorted_quantile(row, cfg.constraint.spec.alpha);
    }
    return audit;
}

json provenance(const ScenarioConfig& cfg, const std::string& command)
{
    json seeds = {{"master", cfg.seed}, {"data", cfg.data.seed}, {"constraint", cfg.constraint.spec.seed}};
    json chains = json::array();
    for (std::size_t k = 0; k < cfg.n_chains; ++k) {
        chains.push_back(stream_seed(cfg.seed, k));
    }
    seeds["chains"] = chains;
    return {{"command", command},
            {"config", to_json(cfg)},
            {"source", cfg.source_path},
            {"seeds", seeds},
            {"versions",
             {{"ccbi", "1.0.0"},
              {"compiler", __VERSION__},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "."
                            + std::to_string(EIGEN_MINOR_VERSION)}}}};
}

void write_json(const std::string& path, const json& j)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

void write_svg_histogram(const std::string& path, const Histogram& h, const ReferenceDensity* ref,
                         const std::string& title)
{
    constexpr double width = 640.0;
    constexpr double height = 400.0;
    constexpr double margin = 50.0;
    double top = *std::max_element(h.heights.begin(), h.heights.end());
    if (ref) {
        top = std::max(top, *std::max_element(ref->density.begin(), ref->density.end()));
    }
    top = top > 0.0 ? 1.1 * top : 1.0;
    const double lo = h.edges.front();
    const double hi = h.edges.back();
    auto px = [&](double x) { return margin + (x - lo) / (hi - lo) * (width - 2 * margin); };
    auto py = [&](double y) { return height - margin - y / top * (height - 2 * margin); };
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    for (std::size_t b = 0; b < h.n_bins(); ++b) {
        const double x0 = px(h.edges[b]);
        const double x1 = px(h.edges[b + 1]);
        const double y = py(h.heights[b]);
        out << "<rect x=\"" << x0 << "\" y=\"" << y << "\" width=\"" << x1 - x0 << "\" height=\"" << height - margin - y
            << "\" fill=\"#4c72b0\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    if (ref) {
        out << "<polyline fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < ref->grid.size(); ++i) {
            if (ref->grid[i] >= lo && ref->grid[i] <= hi) {
                out << px(ref->grid[i]) << ',' << py(ref->density[i]) << ' ';
            }
        }
        out << "\"/>\n";
    }
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << height - margin + 18 << "\" font-size=\"12\">" << lo << "</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 18
        << "\" font-size=\"12\" text-anchor=\"end\">" << hi << "</text>\n";
    out << "</svg>\n";
}

namespace {

json intervals_json(const FeasibleSet& set)
{
    json arr = json::array();
    for (const auto& i : set.intervals()) {
        arr.push_back({std::isfinite(i.lo) ? json(i.lo) : json(nullptr), std::isfinite(i.hi) ? json(i.hi) : json(nullptr)});
    }
    return arr;
}

} // namespace

void run_scenario(const ScenarioConfig& cfg, std::size_t jobs, const Logger& log)
{
    namespace fs = std::filesystem;
    const fs::path out(cfg.output_dir);
    fs::create_directories(out);
    log("model " + std::to_string(cfg.model) + ", sampler " + to_string(cfg.sampler.kind));

    const Problem problem(cfg, jobs, log);
    write_observations_csv((out / "observations.csv").string(), problem.posterior().observations());
    write_json((out / "observations_provenance.json").string(),
               {{"theta_true", cfg.data.theta_true}, {"n_obs", cfg.data.n_obs}, {"seed", cfg.data.seed},
                {"source", cfg.data.csv.empty() ? "generated" : cfg.data.csv},
                {"groups", to_json(cfg)["data"]["groups"]}});
    write_scan_csv((out / "scan.csv").string(), problem.scan());

    const auto runs = run_chains(problem);
    for (std::size_t k = 0; k < runs.size(); ++k) {
        write_chain_csv((out / ("chain_" + std::to_string(k) + ".csv")).string(), runs[k].chain);
        if (runs[k].particles) {
            write_particles_csv((out / ("particles_" + std::to_string(k) + ".csv")).string(), *runs[k].particles);
        }
    }
    log("sampling done (" + std::to_string(runs.front().chain.size()) + " samples per chain)");

    const ReferenceDensity ref = make_reference(problem);
    write_reference_csv((out / "reference.csv").string(), ref);

    const MarkovChain& chain = runs.front().chain;
    const Interval w = cfg.theta_window();
    const auto kept = burn_in(chain.samples, cfg.burn_in_fraction);
    const Histogram hist = chain_histogram(kept, cfg.diagnostics.n_bins, w.lo, w.hi);
    write_histogram_csv((out / "histogram.csv").string(), hist, &ref);
    write_svg_histogram((out / "histogram.svg").string(), hist, &ref, "model " + std::to_string(cfg.model) + " " + to_string(cfg.sampler.kind));

    const auto checkpoints = cfg.diagnostics.checkpoints.empty() ? default_checkpoints(chain.size()) : cfg.diagnostics.checkpoints;
    json diag;
    json l2 = json::array();
    for (const auto& p : l2_series(chain, ref, cfg, checkpoints)) {
        l2.push_back({p.n, p.error, p.cpu_seconds});
    }
    diag["l2_series"] = l2;
    json bg = json::array();
    if (runs.size() >= 2) {
        std::vector<std::vector<double>> samples;
        std::size_t shortest = chain.size();
        for (const auto& r : runs) {
            samples.push_back(r.chain.samples);
            shortest = std::min(shortest, r.chain.size());
        }
        std::vector<std::size_t> cps;
        for (auto n : checkpoints) {
            if (n <= shortest) {
                cps.push_back(n);
            }
        }
        for (const auto& p : brooks_gelman_ratio(samples, cfg.diagnostics.confidence, cps)) {
            bg.push_back({p.n, p.ratio});
        }
    }
    diag["bg_series"] = bg;
    diag["acceptance_rate"] = chain.acceptance_rate();
    diag["infeasible_fraction"] = chain.infeasible_fraction();
    diag["l2_error"] = chain_l2(chain.samples, ref, cfg);
    diag["divergences"] = chain.divergences;
    diag["feasible_set"] = intervals_json(problem.scan().set);
    diag["surrogate_failures"] = problem.oracle().failures();
    if (cfg.sampler.kind == SamplerKind::chmc || cfg.sampler.kind == SamplerKind::csvgd) {
        const auto post = postprocess_feasible(chain, [&](double t) { return problem.feasible(t); });
        diag["postprocessed"] = {{"original_length", post.original_length},
                                 {"removed", post.removed},
                                 {"is_markov_chain", post.is_markov},
                                 {"l2_error", post.empty() ? json(nullptr) : json(chain_l2(post.samples, ref, cfg))}};
        write_chain_csv((out / "chain_0_feasible.csv").string(), post);
    }
    if (cfg.model != 1) {
        const double mean = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
        const auto audit = audit_interface(problem, mean, 10000, stream_seed(cfg.seed, 1000003));
        write_field_csv((out / "field_t0.csv").string(), audit.initial_mean.z_grid, audit.initial_mean.values, "temperature");
        write_field_csv((out / "field_tc_mean.csv").string(), audit.final_mean.z_grid, audit.final_mean.values, "temperature");
        write_field_csv((out / "field_tc_quantile.csv").string(), audit.final_quantile.z_grid, audit.final_quantile.values,
                        "temperature");
        diag["field_audit"] = {{"theta", audit.theta}, {"probability", audit.probability}, {"draws", audit.draws},
                               {"beta", cfg.constraint.spec.beta}, {"alpha", cfg.constraint.spec.alpha}};
    }
    write_json((out / "diagnostics.json").string(), diag);
    write_json((out / "provenance.json").string(), provenance(cfg, "run"));
    log("artifacts written to " + out.string());
}

} // namespace ccbi::app
