#include "scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

namespace ccbi::app {

using nlohmann::json;

namespace {

/// Strict view of one JSON object: every key must be consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ValidationError(path_ + ": expected an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    T get(const std::string& key, T fallback)
    {
        used_.insert(key);
        if (!j_.contains(key)) {
            return fallback;
        }
        return convert<T>(key);
    }

    template <typename T>
    T require(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key)) {
            throw ValidationError(path_ + "." + key + ": required key missing");
        }
        return convert<T>(key);
    }

    Section child(const std::string& key)
    {
        used_.insert(key);
        return Section(j_.at(key), path_ + "." + key);
    }

    const json& raw(const std::string& key)
    {
        used_.insert(key);
        return j_.at(key);
    }

    std::string path(const std::string& key) const { return path_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!key.empty() && key[0] == '_') {
                continue;
            }
            if (!used_.contains(key)) {
                throw ValidationError(path_ + "." + key + ": unknown key");
            }
        }
    }

private:
    template <typename T>
    T convert(const std::string& key) const
    {
        try {
            const json& v = j_.at(key);
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) {
                    throw ValidationError("expected a boolean");
                }
            } else if constexpr (std::is_arithmetic_v<T>) {
                if (!v.is_number()) {
                    throw ValidationError("expected a number");
                }
                if constexpr (std::is_unsigned_v<T>) {
                    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                        throw ValidationError("expected a non-negative integer");
                    }
                } else if constexpr (std::is_integral_v<T>) {
                    if (!v.is_number_integer()) {
                        throw ValidationError("expected an integer");
                    }
                }
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) {
                    throw ValidationError("expected a string");
                }
            }
            return v.get<T>();
        } catch (const ValidationError& e) {
            throw ValidationError(path_ + "." + key + ": " + e.what());
        } catch (const json::exception& e) {
            throw ValidationError(path_ + "." + key + ": " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Interval parse_interval(const json& j, const std::string& path)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError(path + ": expected [lo, hi]");
    }
    Interval i{j[0].get<double>(), j[1].get<double>()};
    detail::require(i.lo < i.hi, path + ": lo must be below hi");
    return i;
}

void parse_model_params(Section s, ModelParams& p)
{
    p.reynolds_nominal = s.get("reynolds_nominal", p.reynolds_nominal);
    p.prandtl = s.get("prandtl", p.prandtl);
    p.nusselt = s.get("nusselt", p.nusselt);
    p.heat_flux_nominal = s.get("heat_flux_nominal", p.heat_flux_nominal);
    p.hot_gas_temp = s.get("hot_gas_temp", p.hot_gas_temp);
    p.porosity = s.get("porosity", p.porosity);
    p.kappa_fluid = s.get("kappa_fluid", p.kappa_fluid);
    p.kappa_solid = s.get("kappa_solid", p.kappa_solid);
    p.permeability_darcy = s.get("permeability_darcy", p.permeability_darcy);
    p.forchheimer = s.get("forchheimer", p.forchheimer);
    p.coolant_temp = s.get("coolant_temp", p.coolant_temp);
    p.solid_temp = s.get("solid_temp", p.solid_temp);
    p.reservoir_pressure = s.get("reservoir_pressure", p.reservoir_pressure);
    p.length = s.get("length", p.length);
    p.heat_flux_scale = s.get("heat_flux_scale", p.heat_flux_scale);
    p.porosity_second = s.get("porosity_second", p.porosity_second);
    s.finish();
    p.validate();
}

InterfaceGeometry parse_geometry(Section s, const ModelParams& p)
{
    InterfaceGeometry g;
    g.d1 = s.get("d1", g.d1);
    g.d2 = s.get("d2", g.d2);
    g.n_strips = s.get("n_strips", g.n_strips);
    g.wall_temp = s.get("wall_temp", g.wall_temp);
    g.delta_z = s.get("delta_z", g.delta_z);
    g.diffusivity = s.get("diffusivity", g.diffusivity);
    g.t_constraint = s.get("t_constraint", g.t_constraint);
    g.n_z = s.get("n_z", g.n_z);
    g.cfl = s.get("cfl", g.cfl);
    if (s.has("sections")) {
        const json& arr = s.raw("sections");
        detail::require(arr.is_array(), s.path("sections") + ": expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section sec(arr[i], s.path("sections") + "[" + std::to_string(i) + "]");
            g.sections.push_back({sec.require<double>("lo"), sec.require<double>("hi"), sec.require<double>("porosity")});
            sec.finish();
        }
    } else {
        const double mid = 0.5 * (g.d1 + g.d2);
        g.sections = {{g.d1, mid, p.porosity}, {mid, g.d2, p.porosity_second}};
    }
    s.finish();
    g.validate();
    return g;
}

void parse_germ(Section s, ScenarioConfig& cfg)
{
    const double q0 = cfg.params.heat_flux_nominal;
    if (cfg.model == 3) {
        const std::size_t n = cfg.geometry->n_strips;
        if (s.has("q_means")) {
            cfg.germ.strip_q_means = s.require<std::vector<double>>("q_means");
            cfg.germ.strip_q_stds = s.require<std::vector<double>>("q_stds");
            detail::require(cfg.germ.strip_q_means.size() == n && cfg.germ.strip_q_stds.size() == n,
                            s.path("q_means") + ": need one entry per strip");
        } else {
            // generator rule: mean q0 (1 + amplitude sin(pi (i + 1/2) / n)), std relative to the mean
            Section rule = s.child("strip_rule");
            const double amplitude = rule.get("amplitude", 0.3);
            const double relative_std = rule.get("relative_std", 0.1);
            const double base = rule.get("base", q0);
            rule.finish();
            for (std::size_t i = 0; i < n; ++i) {
                const double m = base
                    * (1.0 + amplitude * std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n)));
                cfg.germ.strip_q_means.push_back(m);
                cfg.germ.strip_q_stds.push_back(relative_std * m);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            detail::require(cfg.germ.strip_q_stds[i] >= 0.0, s.path("q_stds") + ": negative std");
        }
    } else {
        cfg.germ.sigma_q = s.get("sigma_q", 0.1 * q0);
        if (cfg.model == 1) {
            cfg.germ.sigma_phi = s.get("sigma_phi", 0.01);
        }
        detail::require(cfg.germ.sigma_q >= 0.0 && cfg.germ.sigma_phi >= 0.0, s.path("sigma_q") + ": negative std");
    }
    s.finish();
}

PriorSpec parse_prior(Section s)
{
    const auto kind = s.get<std::string>("kind", "gaussian");
    PriorSpec p;
    if (kind == "gaussian") {
        p = PriorSpec::gaussian(s.require<double>("mean"), s.require<double>("std"));
    } else if (kind == "uniform") {
        p = PriorSpec::uniform(s.require<double>("low"), s.require<double>("high"));
        p.floor = s.get("floor", p.floor);
    } else {
        throw ValidationError(s.path("kind") + ": expected 'gaussian' or 'uniform'");
    }
    s.finish();
    p.validate();
    return p;
}

} // namespace

SamplerKind parse_sampler_kind(const std::string& name)
{
    if (name == "crw") {
        return SamplerKind::crw;
    }
    if (name == "chmc") {
        return SamplerKind::chmc;
    }
    if (name == "csvgd") {
        return SamplerKind::csvgd;
    }
    if (name == "projected_svgd") {
        return SamplerKind::projected_svgd;
    }
    throw ValidationError("unknown sampler '" + name + "' (crw, chmc, csvgd, projected_svgd)");
}

std::string to_string(SamplerKind kind)
{
    switch (kind) {
    case SamplerKind::crw:
        return "crw";
    case SamplerKind::chmc:
        return "chmc";
    case SamplerKind::csvgd:
        return "csvgd";
    case SamplerKind::projected_svgd:
        return "projected_svgd";
    }
    return "crw";
}

Interval ScenarioConfig::theta_window() const
{
    if (diagnostics.range) {
        return *diagnostics.range;
    }
    if (prior.kind == PriorKind::uniform) {
        return {prior.low, prior.high};
    }
    return constraint.scan_range;
}

GermSpec ScenarioConfig::strip_germ(std::size_t strip) const
{
    if (model == 1) {
        return GermSpec{{{"q", GermKind::gaussian, params.heat_flux_nominal, germ.sigma_q},
                         {"phi", GermKind::gaussian, params.porosity, germ.sigma_phi}}};
    }
    if (model == 2) {
        return GermSpec{{{"q", GermKind::gaussian, params.heat_flux_nominal, germ.sigma_q}}};
    }
    return GermSpec{{{"q", GermKind::gaussian, germ.strip_q_means.at(strip), germ.strip_q_stds.at(strip)}}};
}

ScenarioConfig parse_scenario(const json& doc, const std::string& base_dir)
{
    ScenarioConfig cfg;
    Section root(doc, "$");
    cfg.model = root.require<int>("model");
    detail::require(cfg.model >= 1 && cfg.model <= 3, "$.model: expected 1, 2 or 3");
    if (root.has("model_params")) {
        parse_model_params(root.child("model_params"), cfg.params);
    }
    if (cfg.model == 1) {
        detail::require(!root.has("geometry"), "$.geometry: model-1 scenarios must not carry geometry");
    } else {
        cfg.geometry = root.has("geometry") ? parse_geometry(root.child("geometry"), cfg.params)
                                            : parse_geometry(Section(json::object(), "$.geometry"), cfg.params);
    }
    if (root.has("germ")) {
        parse_germ(root.child("germ"), cfg);
    } else {
        parse_germ(Section(json::object(), "$.germ"), cfg);
    }
    if (root.has("surrogate")) {
        Section s = root.child("surrogate");
        cfg.surrogate.order = s.get("order", cfg.surrogate.order);
        cfg.surrogate.n_quad = s.get("n_quad", cfg.surrogate.n_quad);
        cfg.surrogate.n_steps = s.get("n_steps", cfg.surrogate.n_steps);
        s.finish();
        detail::require(cfg.surrogate.n_quad >= cfg.surrogate.order + 1, "$.surrogate.n_quad: must be >= order + 1");
    }
    cfg.likelihood.forward.n_steps = cfg.surrogate.n_steps;
    {
        Section s = root.child("constraint");
        auto& c = cfg.constraint;
        c.spec.beta = s.require<double>("beta");
        c.spec.alpha = s.require<double>("alpha");
        c.spec.n_prob_samples = s.get("n_prob_samples", c.spec.n_prob_samples);
        c.spec.seed = s.get("seed", c.spec.seed);
        const auto mode = s.get<std::string>("mode", "joint");
        detail::require(mode == "joint" || mode == "pointwise", s.path("mode") + ": expected 'joint' or 'pointwise'");
        c.mode = mode == "joint" ? InterfaceConstraintMode::joint : InterfaceConstraintMode::pointwise;
        const auto feas = s.get<std::string>("feasibility", "scan");
        detail::require(feas == "scan" || feas == "direct", s.path("feasibility") + ": expected 'scan' or 'direct'");
        c.use_scan = feas == "scan";
        if (s.has("scan_range")) {
            c.scan_range = parse_interval(s.raw("scan_range"), s.path("scan_range"));
        }
        c.scan_tol = s.get("scan_tol", c.scan_tol);
        c.scan_points = s.get("scan_points", c.scan_points);
        c.cache_quantum = s.get("cache_quantum", c.cache_quantum);
        s.finish();
        c.spec.validate();
        detail::require(c.scan_tol > 0.0 && c.scan_points >= 2 && c.cache_quantum > 0.0,
                        "$.constraint: scan_tol, scan_points and cache_quantum must be positive");
    }
    cfg.prior = parse_prior(root.child("prior"));
    if (root.has("likelihood")) {
        Section s = root.child("likelihood");
        cfg.likelihood.classic_iid = s.get("classic_iid", cfg.likelihood.classic_iid);
        cfg.likelihood.fd_step = s.get("fd_step", cfg.likelihood.fd_step);
        s.finish();
        detail::require(cfg.likelihood.fd_step > 0.0, "$.likelihood.fd_step: must be positive");
    }
    {
        Section s = root.child("data");
        auto& d = cfg.data;
        d.theta_true = s.get("theta_true", d.theta_true);
        d.noise_std = s.get("noise_std", d.noise_std);
        d.n_obs = s.get("n_obs", d.n_obs);
        d.seed = s.get("seed", d.seed);
        d.csv = s.get<std::string>("csv", "");
        if (!d.csv.empty() && std::filesystem::path(d.csv).is_relative()) {
            d.csv = (std::filesystem::path(base_dir) / d.csv).string();
        }
        const double q0 = cfg.params.heat_flux_nominal;
        if (s.has("groups")) {
            const json& arr = s.raw("groups");
            detail::require(arr.is_array() && !arr.empty(), s.path("groups") + ": expected a nonempty array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Section g(arr[i], s.path("groups") + "[" + std::to_string(i) + "]");
                ObservationGroupSpec spec;
                spec.label = g.require<std::string>("label");
                spec.porosity = g.require<double>("porosity");
                spec.xi_true = {g.get("q_true", q0), g.get("phi_true", spec.porosity)};
                spec.noise_std = g.get("noise_std", d.noise_std);
                g.finish();
                d.groups.push_back(spec);
            }
        } else if (cfg.model == 1) {
            d.groups.push_back({"p", cfg.params.porosity, {q0, cfg.params.porosity}, d.noise_std});
        } else {
            for (std::size_t i = 0; i < cfg.geometry->sections.size(); ++i) {
                const double phi = cfg.geometry->sections[i].porosity;
                d.groups.push_back({"p" + std::to_string(i), phi, {q0, phi}, d.noise_std});
            }
        }
        s.finish();
        detail::require(d.n_obs >= 1, "$.data.n_obs: must be >= 1");
        detail::require(d.noise_std > 0.0, "$.data.noise_std: must be positive");
    }
    {
        Section s = root.child("sampler");
        auto& p = cfg.sampler;
        p.kind = parse_sampler_kind(s.require<std::string>("kind"));
        p.proposal_std = s.get("proposal_std", p.proposal_std);
        p.theta_init = s.get("theta_init", p.theta_init);
        p.mass = s.get("mass", p.mass);
        p.step = s.get("step", p.step);
        p.svgd_step = s.get("svgd_step", p.svgd_step);
        p.max_leapfrog = s.get("max_leapfrog", p.max_leapfrog);
        p.delta = s.get("delta", p.delta);
        p.n_particles = s.get("n_particles", p.n_particles);
        p.n_generations = s.get("n_generations", p.n_generations);
        p.init_mean = s.get("init_mean", p.init_mean);
        p.init_std = s.get("init_std", p.init_std);
        p.decay = s.get("decay", p.decay);
        p.record_timing = s.get("record_timing", p.record_timing);
        s.finish();
        detail::require(p.proposal_std > 0.0 && p.mass > 0.0 && p.step > 0.0 && p.svgd_step > 0.0, "$.sampler: scales must be positive");
        detail::require(p.max_leapfrog >= 1 && p.n_particles >= 1, "$.sampler: counts must be >= 1");
        detail::require(p.delta >= 0.0, "$.sampler.delta: must be >= 0");
    }
    cfg.n_samples = root.get("n_samples", cfg.n_samples);
    cfg.n_chains = root.get("n_chains", cfg.n_chains);
    cfg.burn_in_fraction = root.get("burn_in_fraction", cfg.burn_in_fraction);
    cfg.seed = root.get("seed", cfg.seed);
    cfg.output_dir = root.get<std::string>("output_dir", cfg.output_dir);
    detail::require(cfg.n_samples >= 1 && cfg.n_chains >= 1, "$.n_samples and $.n_chains must be >= 1");
    detail::require(cfg.burn_in_fraction >= 0.0 && cfg.burn_in_fraction < 1.0, "$.burn_in_fraction: must lie in [0,1)");
    if (root.has("diagnostics")) {
        Section s = root.child("diagnostics");
        auto& d = cfg.diagnostics;
        d.n_bins = s.get("n_bins", d.n_bins);
        if (s.has("range")) {
            d.range = parse_interval(s.raw("range"), s.path("range"));
        }
        d.reference_nodes = s.get("reference_nodes", d.reference_nodes);
        d.confidence = s.get("confidence", d.confidence);
        d.checkpoints = s.get("checkpoints", d.checkpoints);
        s.finish();
        detail::require(d.n_bins >= 1 && d.reference_nodes >= 2, "$.diagnostics: bad bin or node count");
        detail::require(d.confidence > 0.0 && d.confidence < 1.0, "$.diagnostics.confidence: must lie in (0,1)");
        detail::require(std::is_sorted(d.checkpoints.begin(), d.checkpoints.end()),
                        "$.diagnostics.checkpoints: must be increasing");
    }
    root.finish();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
    auto cfg = parse_scenario(doc, std::filesystem::path(path).parent_path().string());
    cfg.source_path = path;
    return cfg;
}

json to_json(const ScenarioConfig& cfg)
{
    const auto& p = cfg.params;
    json j;
    j["model"] = cfg.model;
    j["model_params"] = {{"reynolds_nominal", p.reynolds_nominal}, {"prandtl", p.prandtl},
                         {"nusselt", p.nusselt}, {"heat_flux_nominal", p.heat_flux_nominal},
                         {"hot_gas_temp", p.hot_gas_temp}, {"porosity", p.porosity},
                         {"kappa_fluid", p.kappa_fluid}, {"kappa_solid", p.kappa_solid},
                         {"permeability_darcy", p.permeability_darcy}, {"forchheimer", p.forchheimer},
                         {"coolant_temp", p.coolant_temp}, {"solid_temp", p.solid_temp},
                         {"reservoir_pressure", p.reservoir_pressure}, {"length", p.length},
                         {"heat_flux_scale", p.heat_flux_scale}, {"porosity_second", p.porosity_second}};
    if (cfg.model == 3) {
        j["germ"] = {{"q_means", cfg.germ.strip_q_means}, {"q_stds", cfg.germ.strip_q_stds}};
    } else if (cfg.model == 2) {
        j["germ"] = {{"sigma_q", cfg.germ.sigma_q}};
    } else {
        j["germ"] = {{"sigma_q", cfg.germ.sigma_q}, {"sigma_phi", cfg.germ.sigma_phi}};
    }
    j["surrogate"] = {{"order", cfg.surrogate.order}, {"n_quad", cfg.surrogate.n_quad}, {"n_steps", cfg.surrogate.n_steps}};
    if (cfg.geometry) {
        const auto& g = *cfg.geometry;
        json sections = json::array();
        for (const auto& s : g.sections) {
            sections.push_back({{"lo", s.lo}, {"hi", s.hi}, {"porosity", s.porosity}});
        }
        j["geometry"] = {{"d1", g.d1}, {"d2", g.d2}, {"n_strips", g.n_strips}, {"sections", sections},
                         {"wall_temp", g.wall_temp}, {"delta_z", g.delta_z}, {"diffusivity", g.diffusivity},
                         {"t_constraint", g.t_constraint}, {"n_z", g.n_z}, {"cfl", g.cfl}};
    }
    const auto& c = cfg.constraint;
    j["constraint"] = {{"beta", c.spec.beta}, {"alpha", c.spec.alpha}, {"n_prob_samples", c.spec.n_prob_samples},
                       {"seed", c.spec.seed}, {"mode", c.mode == InterfaceConstraintMode::joint ? "joint" : "pointwise"},
                       {"feasibility", c.use_scan ? "scan" : "direct"},
                       {"scan_range", {c.scan_range.lo, c.scan_range.hi}}, {"scan_tol", c.scan_tol},
                       {"scan_points", c.scan_points}, {"cache_quantum", c.cache_quantum}};
    if (cfg.prior.kind == PriorKind::gaussian) {
        j["prior"] = {{"kind", "gaussian"}, {"mean", cfg.prior.mean}, {"std", cfg.prior.std_dev}};
    } else {
        j["prior"] = {{"kind", "uniform"}, {"low", cfg.prior.low}, {"high", cfg.prior.high}, {"floor", cfg.prior.floor}};
    }
    j["likelihood"] = {{"classic_iid", cfg.likelihood.classic_iid}, {"fd_step", cfg.likelihood.fd_step}};
    json groups = json::array();
    for (const auto& g : cfg.data.groups) {
        groups.push_back({{"label", g.label}, {"porosity", g.porosity}, {"q_true", g.xi_true.q},
                          {"phi_true", g.xi_true.phi}, {"noise_std", g.noise_std}});
    }
    j["data"] = {{"theta_true", cfg.data.theta_true}, {"noise_std", cfg.data.noise_std}, {"n_obs", cfg.data.n_obs},
                 {"seed", cfg.data.seed}, {"groups", groups}};
    if (!cfg.data.csv.empty()) {
        j["data"]["csv"] = cfg.data.csv;
    }
    const auto& s = cfg.sampler;
    j["sampler"] = {{"kind", to_string(s.kind)}, {"proposal_std", s.proposal_std}, {"theta_init", s.theta_init},
                    {"mass", s.mass}, {"step", s.step}, {"svgd_step", s.svgd_step}, {"max_leapfrog", s.max_leapfrog}, {"delta", s.delta},
                    {"n_particles", s.n_particles}, {"n_generations", s.n_generations},
                    {"init_mean", s.init_mean}, {"init_std", s.init_std}, {"decay", s.decay},
                    {"record_timing", s.record_timing}};
    j["n_samples"] = cfg.n_samples;
    j["n_chains"] = cfg.n_chains;
    j["burn_in_fraction"] = cfg.burn_in_fraction;
    j["seed"] = cfg.seed;
    const auto& d = cfg.diagnostics;
    j["diagnostics"] = {{"n_bins", d.n_bins}, {"reference_nodes", d.reference_nodes},
                        {"confidence", d.confidence}, {"checkpoints", d.checkpoints}};
    if (d.range) {
        j["diagnostics"]["range"] = {d.range->lo, d.range->hi};
    }
    j["output_dir"] = cfg.output_dir;
    return j;
}

} // namespace ccbi::app
