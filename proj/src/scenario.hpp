#pragma once

// Scenario configuration: one strict JSON document per experiment. Keys that
// start with '_' are free-form notes; every other unknown key is an error.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccbi/ccbi.hpp"

namespace ccbi::app {

enum class SamplerKind { crw, chmc, csvgd, projected_svgd };

SamplerKind parse_sampler_kind(const std::string& name);
std::string to_string(SamplerKind kind);

struct GermConfig {
    double sigma_q = 0.0;
    double sigma_phi = 0.0;
    // model 3: one heat-flux distribution per strip
    std::vector<double> strip_q_means;
    std::vector<double> strip_q_stds;
};

struct ConstraintConfig {
    ChanceConstraintSpec spec;
    InterfaceConstraintMode mode = InterfaceConstraintMode::joint;
    bool use_scan = true; // samplers test membership in the scanned set instead of re-estimating P
    Interval scan_range{300.0, 1000.0};
    double scan_tol = 0.05;
    std::size_t scan_points = 36;
    double cache_quantum = 1e-6;
};

struct DataConfig {
    double theta_true = 700.0;
    double noise_std = 100.0;
    std::size_t n_obs = 50;
    std::uint64_t seed = 1;
    std::vector<ObservationGroupSpec> groups;
    std::string csv; // existing data instead of generation
};

struct SamplerConfig {
    SamplerKind kind = SamplerKind::crw;
    double proposal_std = 50.0;
    double theta_init = 0.0; // 0 selects a feasible point automatically
    double mass = 1.0;
    double step = 1.0;      // leapfrog step
    double svgd_step = 1.0; // base step of the SVGD adaption
    std::size_t max_leapfrog = 10;
    double delta = 0.0;
    std::size_t n_particles = 100;
    std::size_t n_generations = 500;
    double init_mean = 0.0;
    double init_std = 1.0;
    double decay = 0.9;
    bool record_timing = false;
};

struct DiagnosticsConfig {
    std::size_t n_bins = 50;
    std::optional<Interval> range; // default: prior support or a wide Gaussian window
    std::size_t reference_nodes = 2000;
    double confidence = 0.95;
    std::vector<std::size_t> checkpoints;
};

struct ScenarioConfig {
    int model = 1;
    ModelParams params;
    GermConfig germ;
    StripSurrogateOptions surrogate;
    std::optional<InterfaceGeometry> geometry;
    ConstraintConfig constraint;
    PriorSpec prior;
    LikelihoodOptions likelihood;
    DataConfig data;
    SamplerConfig sampler;
    std::size_t n_samples = 10000;
    std::size_t n_chains = 1;
    double burn_in_fraction = 0.1;
    std::uint64_t seed = 1;
    DiagnosticsConfig diagnostics;
    std::string output_dir = "out";
    std::string source_path;

    /// Histogram / reference window.
    Interval theta_window() const;
    /// Germ of a single strip: (q, phi) for model 1, q alone otherwise.
    GermSpec strip_germ(std::size_t strip) const;
};

/// Parses and validates; throws ValidationError with a key path on failure.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);

/// Fully resolved configuration, suitable for provenance and re-runs.
nlohmann::json to_json(const ScenarioConfig& cfg);

} // namespace ccbi::app
