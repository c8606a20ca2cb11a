#pragma once

// Scenario orchestration: constraint factories per model, feasibility,
// posterior, sampler dispatch, diagnostics and artifact writing.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenario.hpp"

namespace ccbi::app {

using Logger = std::function<void(const std::string&)>;

/// theta -> f2(. ; theta) for the scenario's model.
class ConstraintModel {
public:
    explicit ConstraintModel(const ScenarioConfig& cfg);

    AnyChanceFunction operator()(double theta) const;
    std::size_t germ_dims() const;

    /// Strip surrogates of the distinct strip kinds at theta (one for model 1).
    std::vector<StripSurrogate> strip_surrogates(double theta) const;
    /// Outlet expansions of every strip at theta (models 2-3).
    std::vector<StripOutletExpansion> strip_expansions(double theta) const;
    /// Interface T_h(z, t_c) model at theta (models 2-3).
    InterfaceConstraint interface_constraint(double theta) const;
    const InterfaceResponse& response() const { return *response_; }

private:
    ScenarioConfig cfg_;
    std::shared_ptr<const InterfaceResponse> response_;
};

/// Everything a sampling run needs, built once per scenario.
class Problem {
public:
    Problem(ScenarioConfig cfg, std::size_t jobs, Logger log = {});

    const ScenarioConfig& config() const { return cfg_; }
    const ConstraintModel& constraint() const { return *constraint_; }
    const FeasibilityOracle& oracle() const { return *oracle_; }
    const BoundaryScan& scan() const { return scan_; }
    const PosteriorModel& posterior() const { return *posterior_; }

    /// chi_S used by the samplers (scanned set or per-theta estimate).
    bool feasible(double theta) const;
    /// Per-theta chance estimate, ignoring the scan.
    bool feasible_direct(double theta) const { return oracle_->evaluate(theta).feasible; }
    double log_posterior(double theta) const { return posterior_->log_posterior(theta); }
    /// Gradient with the delta penalty toward S and toward a uniform support.
    double penalized_gradient(double theta, double delta) const;
    double penalty_direction(double theta) const;
    /// Feasible starting point near the prior centre.
    double default_start() const;

    std::size_t jobs() const { return jobs_; }

private:
    ScenarioConfig cfg_;
    std::size_t jobs_;
    std::shared_ptr<ConstraintModel> constraint_;
    std::unique_ptr<FeasibilityOracle> oracle_;
    BoundaryScan scan_;
    std::unique_ptr<PosteriorModel> posterior_;
};

ObservationSet make_observations(const ScenarioConfig& cfg);

struct SampleRun {
    MarkovChain chain;                      // pooled particles for SVGD kinds
    std::optional<ParticleHistory> particles;
};

SampleRun run_sampler(const Problem& problem, SamplerKind kind, std::uint64_t seed);
/// Chains of the configured sampler, seeded from (master seed, chain index).
std::vector<SampleRun> run_chains(const Problem& problem);

ReferenceDensity make_reference(const Problem& problem);

struct L2Point {
    std::size_t n = 0;
    double error = 0.0;
    double cpu_seconds = 0.0;
};

std::vector<std::size_t> default_checkpoints(std::size_t n_total);
std::vector<L2Point> l2_series(const MarkovChain& chain, const ReferenceDensity& ref, const ScenarioConfig& cfg,
                               std::span<const std::size_t> checkpoints);
double chain_l2(std::span<const double> samples, const ReferenceDensity& ref, const ScenarioConfig& cfg);

struct FieldAudit {
    double theta = 0.0;
    double probability = 0.0; // all-z satisfaction rate over fresh germ draws
    std::size_t draws = 0;
    InterfaceField initial_mean;
    InterfaceField final_mean;
    InterfaceField final_quantile; // alpha-quantile per z
};

FieldAudit audit_interface(const Problem& problem, double theta, std::size_t draws, std::uint64_t seed);

nlohmann::json provenance(const ScenarioConfig& cfg, const std::string& command);
void write_json(const std::string& path, const nlohmann::json& j);
void write_svg_histogram(const std::string& path, const Histogram& h, const ReferenceDensity* ref,
                         const std::string& title);

/// Full pipeline: data, scan, sampling, diagnostics, snapshots.
void run_scenario(const ScenarioConfig& cfg, std::size_t jobs, const Logger& log);

} // namespace ccbi::app
