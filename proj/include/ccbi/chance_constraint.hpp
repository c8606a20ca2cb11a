#pragma once

// Chance constraint P_xi(f2(xi; theta) <= beta) >= alpha, estimated by plain
// Monte Carlo over a cheap gPC surrogate of f2 at fixed theta.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ccbi/errors.hpp"
#include "ccbi/gpc.hpp"
#include "ccbi/heat_interface.hpp"
#include "ccbi/random.hpp"

namespace ccbi {

struct ChanceConstraintSpec {
    double beta = 0.0;  // threshold, T_max
    double alpha = 0.95;
    std::size_t n_prob_samples = 100000;
    std::uint64_t seed = 1;

    void validate() const
    {
        detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
        detail::require(n_prob_samples >= 1, "n_prob_samples must be >= 1");
        detail::require(std::isfinite(beta), "beta must be finite");
    }
};

/// Standard-normal germ draws: column s holds sample s. Fully determined by
/// (seed, dims, count).
class GermSampleBank {
public:
    GermSampleBank(std::uint64_t seed, std::size_t dims, std::size_t count)
        : samples_(static_cast<Eigen::Index>(dims), static_cast<Eigen::Index>(count))
    {
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index s = 0; s < samples_.cols(); ++s) {
            for (Eigen::Index d = 0; d < samples_.rows(); ++d) {
                samples_(d, s) = normal(rng);
            }
        }
    }

    std::size_t dims() const { return static_cast<std::size_t>(samples_.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(samples_.cols()); }
    std::span<const double> sample(std::size_t s) const
    {
        return {samples_.data() + static_cast<std::ptrdiff_t>(s * dims()), dims()};
    }
    const Eigen::MatrixXd& matrix() const { return samples_; }

private:
    Eigen::MatrixXd samples_;
};

/// f2 evaluable pointwise at germ coordinates.
template <typename F>
concept ChanceFunction = requires(const F& f, std::span<const double> xi) {
    { f.germ_dims() } -> std::convertible_to<std::size_t>;
    { f(xi) } -> std::convertible_to<double>;
};

/// f2 that can count satisfied samples of a whole bank at once.
template <typename F>
concept BatchChanceFunction = ChanceFunction<F> && requires(const F& f, const GermSampleBank& bank, double beta) {
    { f.count_satisfied(bank, beta) } -> std::convertible_to<std::size_t>;
};

/// Wraps a callable xi -> double as a ChanceFunction.
template <typename Fn>
struct LambdaChanceFunction {
    std::size_t dims;
    Fn fn;
    std::size_t germ_dims() const { return dims; }
    double operator()(std::span<const double> xi) const { return fn(xi); }
};

template <typename Fn>
LambdaChanceFunction<Fn> make_chance_function(std::size_t dims, Fn fn)
{
    return {dims, std::move(fn)};
}

template <ChanceFunction F>
double satisfaction_probability(const F& f2, const GermSampleBank& bank, double beta)
{
    if (bank.dims() != f2.germ_dims()) {
        throw DimensionMismatchError("germ sample bank dimension does not match f2");
    }
    std::size_t hits = 0;
    if constexpr (BatchChanceFunction<F>) {
        hits = f2.count_satisfied(bank, beta);
    } else {
        for (std::size_t s = 0; s < bank.size(); ++s) {
            if (f2(bank.sample(s)) <= beta) {
                ++hits;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(bank.size());
}

/// Fraction of n_prob_samples seeded germ draws with f2 <= beta.
template <ChanceFunction F>
double satisfaction_probability(const F& f2, const ChanceConstraintSpec& spec)
{
    spec.validate();
    const GermSampleBank bank(spec.seed, f2.germ_dims(), spec.n_prob_samples);
    return satisfaction_probability(f2, bank, spec.beta);
}

/// Model 1 constraint function: outlet fluid temperature of a strip surrogate.
class StripOutletConstraint {
public:
    explicit StripOutletConstraint(const StripSurrogate& s)
        : basis_(s.basis()), dims_(s.germ.dims()), order_(s.order)
    {
        coeffs_.resize(basis_.size());
        for (std::size_t m = 0; m < basis_.size(); ++m) {
            coeffs_[m] = s.fluid(m, s.n_nodes() - 1);
        }
    }

    std::size_t germ_dims() const { return dims_; }

    double operator()(std::span<const double> xi) const
    {
        std::vector<double> b(basis_.size());
        basis_.evaluate(xi, b);
        double v = 0.0;
        for (std::size_t m = 0; m < b.size(); ++m) {
            v += coeffs_[m] * b[m];
        }
        return v;
    }

    std::size_t count_satisfied(const GermSampleBank& bank, double beta) const
    {
        const std::size_t k1 = order_ + 1;
        std::vector<double> he(k1 * dims_);
        std::size_t hits = 0;
        for (std::size_t s = 0; s < bank.size(); ++s) {
            const auto xi = bank.sample(s);
            for (std::size_t d = 0; d < dims_; ++d) {
                hermite_values(xi[d], std::span<double>(he).subspan(d * k1, k1));
            }
            double v = 0.0;
            for (std::size_t m = 0; m < coeffs_.size(); ++m) {
                double b = coeffs_[m];
                for (std::size_t d = 0; d < dims_; ++d) {
                    b *= he[d * k1 + basis_.degree(m, d)];
                }
                v += b;
            }
            if (v <= beta) {
                ++hits;
            }
        }
        return hits;
    }

private:
    TensorBasis basis_;
    std::size_t dims_;
    unsigned order_;
    std::vector<double> coeffs_;
};

enum class InterfaceConstraintMode {
    joint,     // max over z of T_h(z, t_c) <= beta
    pointwise, // P(T_h(z, t_c) <= beta) >= alpha at every z separately
};

/// Models 2-3 constraint function: T_h(z, t_c; xi) from diffused footprint
/// responses. Strips with identical expansions are merged into one column.
class InterfaceConstraint {
public:
    InterfaceConstraint(const InterfaceResponse& response, std::span<const StripOutletExpansion> strips,
                        std::size_t germ_dims, InterfaceConstraintMode mode = InterfaceConstraintMode::joint)
        : germ_dims_(germ_dims), mode_(mode)
    {
        detail::require(strips.size() + 1 == static_cast<std::size_t>(response.matrix().cols()),
                        "strip count does not match the interface response");
        detail::check_germ_variables(strips, germ_dims);
        order_ = detail::common_order(strips);
        const Eigen::MatrixXd& r = response.matrix();
        base_ = response.geometry().wall_temp * r.col(0);
        std::vector<Eigen::VectorXd> columns;
        for (std::size_t i = 0; i < strips.size(); ++i) {
            const auto& s = strips[i];
            const auto col = r.col(static_cast<Eigen::Index>(i + 1));
            if (!s.germ_variable) {
                base_ += s.coeffs[0] * col;
                continue;
            }
            std::size_t g = 0;
            while (g < groups_.size()
                   && !(groups_[g].germ_variable == *s.germ_variable && groups_[g].coeffs == s.coeffs)) {
                ++g;
            }
            if (g == groups_.size()) {
                groups_.push_back({*s.germ_variable, s.coeffs});
                columns.emplace_back(Eigen::VectorXd::Zero(r.rows()));
            }
            columns[g] += col;
        }
        columns_.resize(r.rows(), static_cast<Eigen::Index>(groups_.size()));
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            columns_.col(static_cast<Eigen::Index>(g)) = columns[g];
        }
    }

    std::size_t germ_dims() const { return germ_dims_; }
    std::size_t n_groups() const { return groups_.size(); }

    /// T_h(., t_c) at xi.
    Eigen::VectorXd field(std::span<const double> xi) const
    {
        if (xi.size() != germ_dims_) {
            throw DimensionMismatchError("germ realization has wrong dimension");
        }
        Eigen::VectorXd t(static_cast<Eigen::Index>(groups_.size()));
        std::vector<double> he(order_ + 1);
        for (std::size_t g = 0; g < groups_.size(); ++g) {
            hermite_values(xi[groups_[g].germ_variable], he);
            double v = 0.0;
            for (std::size_t k = 0; k <= order_; ++k) {
                v += groups_[g].coeffs[k] * he[k];
            }
            t[static_cast<Eigen::Index>(g)] = v;
        }
        return base_ + columns_ * t;
    }

    /// max_z T_h(z, t_c; xi).
    double operator()(std::span<const double> xi) const { return field(xi).maxCoeff(); }

    std::size_t count_satisfied(const GermSampleBank& bank, double beta) const
    {
        constexpr std::size_t chunk = 512;
        const auto n_groups = static_cast<Eigen::Index>(groups_.size());
        std::size_t hits = 0;
        std::vector<std::size_t> hits_at_z(static_cast<std::size_t>(base_.size()), 0);
        std::vector<double> he(order_ + 1);
        for (std::size_t start = 0; start < bank.size(); start += chunk) {
            const std::size_t n = std::min(chunk, bank.size() - start);
            Eigen::MatrixXd t(n_groups, static_cast<Eigen::Index>(n));
            for (std::size_t s = 0; s < n; ++s) {
                const auto xi = bank.sample(start + s);
                for (std::size_t g = 0; g < groups_.size(); ++g) {
                    hermite_values(xi[groups_[g].germ_variable], he);
                    double v = 0.0;
                    for (std::size_t k = 0; k <= order_; ++k) {
                        v += groups_[g].coeffs[k] * he[k];
                    }
                    t(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(s)) = v;
                }
            }
            Eigen::MatrixXd fields = columns_ * t;
            fields.colwise() += base_;
            if (mode_ == InterfaceConstraintMode::joint) {
                for (Eigen::Index s = 0; s < fields.cols(); ++s) {
                    if (fields.col(s).maxCoeff() <= beta) {
                        ++hits;
                    }
                }
            } else {
                for (Eigen::Index s = 0; s < fields.cols(); ++s) {
                    for (Eigen::Index j = 0; j < fields.rows(); ++j) {
                        if (fields(j, s) <= beta) {
                            ++hits_at_z[static_cast<std::size_t>(j)];
                        }
                    }
                }
            }
        }
        if (mode_ == InterfaceConstraintMode::pointwise) {
            // the weakest point decides
            hits = *std::min_element(hits_at_z.begin(), hits_at_z.end());
        }
        return hits;
    }

private:
    struct Group {
        std::size_t germ_variable;
        std::vector<double> coeffs;
    };
    std::size_t germ_dims_;
    InterfaceConstraintMode mode_;
    unsigned order_ = 0;
    Eigen::VectorXd base_;
    Eigen::MatrixXd columns_;
    std::vector<Group> groups_;
};

/// Type-erased constraint function, so factories can return any model's f2.
class AnyChanceFunction {
public:
    template <ChanceFunction F>
    AnyChanceFunction(F f) // NOLINT(google-explicit-constructor)
    {
        auto shared = std::make_shared<F>(std::move(f));
        dims_ = shared->germ_dims();
        eval_ = [shared](std::span<const double> xi) { return static_cast<double>((*shared)(xi)); };
        count_ = [shared](const GermSampleBank& bank, double beta) -> std::size_t {
            if constexpr (BatchChanceFunction<F>) {
                return shared->count_satisfied(bank, beta);
            } else {
                std::size_t hits = 0;
                for (std::size_t s = 0; s < bank.size(); ++s) {
                    hits += (*shared)(bank.sample(s)) <= beta ? 1 : 0;
                }
                return hits;
            }
        };
    }

    std::size_t germ_dims() const { return dims_; }
    double operator()(std::span<const double> xi) const { return eval_(xi); }
    std::size_t count_satisfied(const GermSampleBank& bank, double beta) const { return count_(bank, beta); }

private:
    std::size_t dims_ = 0;
    std::function<double(std::span<const double>)> eval_;
    std::function<std::size_t(const GermSampleBank&, double)> count_;
};

using ChanceFunctionFactory = std::function<AnyChanceFunction(double theta)>;

struct FeasibilityRecord {
    double probability = 0.0;
    bool feasible = false;
    bool failed = false;
};

/// theta -> chi_S(theta), through a per-theta surrogate. Results are cached
/// by theta quantized to `quantum`; the surrogate is built at the quantized
/// value so the cache never depends on call order. A factory failure marks
/// theta infeasible and bumps the warning counter.
class FeasibilityOracle {
public:
    FeasibilityOracle(ChanceConstraintSpec spec, ChanceFunctionFactory factory, double quantum = 1e-6)
        : spec_(spec), factory_(std::move(factory)), quantum_(quantum)
    {
        spec_.validate();
        detail::require(quantum > 0.0, "cache quantum must be positive");
    }

    FeasibilityOracle(const FeasibilityOracle&) = delete;
    FeasibilityOracle& operator=(const FeasibilityOracle&) = delete;

    const ChanceConstraintSpec& spec() const { return spec_; }

    FeasibilityRecord evaluate(double theta) const
    {
        const auto key = static_cast<std::int64_t>(std::llround(theta / quantum_));
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) {
                return it->second;
            }
        }
        FeasibilityRecord rec;
        try {
            const AnyChanceFunction f2 = factory_(static_cast<double>(key) * quantum_);
            rec.probability = satisfaction_probability(f2, bank_for(f2.germ_dims()), spec_.beta);
            rec.feasible = rec.probability >= spec_.alpha;
        } catch (const Error& e) {
            rec = {0.0, false, true};
            ++failures_;
            if (on_warning) {
                on_warning("surrogate build failed at theta=" + std::to_string(theta) + ": " + e.what());
            }
        }
        std::unique_lock lock(mutex_);
        cache_[key] = rec;
        return rec;
    }

    bool operator()(double theta) const { return evaluate(theta).feasible; }
    double probability(double theta) const { return evaluate(theta).probability; }

    std::size_t failures() const { return failures_.load(); }
    std::size_t cache_size() const
    {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

    std::function<void(const std::string&)> on_warning;

private:
    const GermSampleBank& bank_for(std::size_t dims) const
    {
        std::lock_guard lock(bank_mutex_);
        if (!bank_ || bank_->dims() != dims) {
            bank_.emplace(spec_.seed, dims, spec_.n_prob_samples);
        }
        return *bank_;
    }

    ChanceConstraintSpec spec_;
    ChanceFunctionFactory factory_;
    double quantum_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::int64_t, FeasibilityRecord> cache_;
    mutable std::atomic<std::size_t> failures_{0};
    mutable std::mutex bank_mutex_;
    mutable std::optional<GermSampleBank> bank_;
};

/// chi_S(theta): the estimated satisfaction probability reaches alpha.
inline bool is_feasible(double theta, const ChanceConstraintSpec& spec, const ChanceFunctionFactory& factory)
{
    try {
        return satisfaction_probability(factory(theta), spec) >= spec.alpha;
    } catch (const Error&) {
        return false;
    }
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    bool operator==(const Interval&) const = default;
};

/// Union of closed intervals, sorted and disjoint.
class FeasibleSet {
public:
    FeasibleSet() = default;
    explicit FeasibleSet(std::vector<Interval> intervals) : intervals_(std::move(intervals))
    {
        std::sort(intervals_.begin(), intervals_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const auto& i : intervals_) {
            detail::require(i.lo <= i.hi, "interval bounds out of order");
        }
    }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }

    bool contains(double x) const
    {
        return std::any_of(intervals_.begin(), intervals_.end(), [x](const Interval& i) { return i.contains(x); });
    }

    /// Closest point of the set (Euclidean projection; clamping per interval).
    double project(double x) const
    {
        if (intervals_.empty()) {
            throw ValidationError("projection onto an empty feasible set");
        }
        double best = x;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const auto& i : intervals_) {
            const double c = std::clamp(x, i.lo, i.hi);
            const double d = std::abs(c - x);
            if (d < best_dist) {
                best = c;
                best_dist = d;
            }
        }
        return best;
    }

    /// +1 / -1 toward the nearest feasible point, 0 inside the set.
    double direction_toward(double x) const
    {
        if (intervals_.empty()) {
            return 0.0;
        }
        const double p = project(x);
        return p > x ? 1.0 : (p < x ? -1.0 : 0.0);
    }

private:
    std::vector<Interval> intervals_;
};

struct ScanPoint {
    double theta = 0.0;
    double probability = 0.0;
    bool feasible = false;
};

struct BoundaryScan {
    FeasibleSet set;
    std::vector<double> transitions; // bisected boundary estimates
    std::vector<ScanPoint> points;   // every evaluated theta, in evaluation order
    bool single_interval() const { return set.intervals().size() == 1; }
};

/// Coarse scan of theta_range followed by bisection to width `tol` on every
/// feasibility change. Interval ends are placed on the feasible side of each
/// bracket. Several intervals are a result, not an error.
template <typename ProbabilityFn>
BoundaryScan scan_feasible_boundary(Interval theta_range, double alpha, ProbabilityFn&& probability, double tol,
                                    std::size_t coarse_points = 36)
{
    detail::require(theta_range.lo < theta_range.hi, "empty scan range");
    detail::require(tol > 0.0, "tol must be positive");
    detail::require(coarse_points >= 2, "need at least two coarse points");
    BoundaryScan scan;
    auto eval = [&](double theta) {
        const double p = probability(theta);
        scan.points.push_back({theta, p, p >= alpha});
        return p >= alpha;
    };
    std::vector<double> grid(coarse_points);
    std::vector<bool> flag(coarse_points);
    for (std::size_t i = 0; i < coarse_points; ++i) {
        grid[i] = theta_range.lo
            + (theta_range.hi - theta_range.lo) * static_cast<double>(i) / static_cast<double>(coarse_points - 1);
        flag[i] = eval(grid[i]);
    }
    std::vector<Interval> intervals;
    bool open = flag[0];
    double open_lo = grid[0];
    for (std::size_t i = 0; i + 1 < coarse_points; ++i) {
        if (flag[i] == flag[i + 1]) {
            continue;
        }
        double lo = grid[i];
        double hi = grid[i + 1];
        const bool lo_flag = flag[i];
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            if (eval(mid) == lo_flag) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        scan.transitions.push_back(0.5 * (lo + hi));
        if (lo_flag) {
            intervals.push_back({open_lo, lo}); // feasible -> infeasible
            open = false;
        } else {
            open = true; // infeasible -> feasible
            open_lo = hi;
        }
    }
    if (open) {
        intervals.push_back({open_lo, grid.back()});
    }
    scan.set = FeasibleSet(std::move(intervals));
    return scan;
}

inline void write_scan_csv(const std::string& path, const BoundaryScan& scan)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "theta,probability,feasible\n";
    auto pts = scan.points;
    std::stable_sort(pts.begin(), pts.end(), [](const ScanPoint& a, const ScanPoint& b) { return a.theta < b.theta; });
    for (const auto& p : pts) {
        out << p.theta << ',' << p.probability << ',' << (p.feasible ? 1 : 0) << '\n';
    }
}

} // namespace ccbi
