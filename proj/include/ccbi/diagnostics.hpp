#pragma once

// Grid reference posterior, density histograms, relative L2 error and the
// interval-based Brooks-Gelman convergence ratio.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccbi/errors.hpp"

namespace ccbi {

struct ReferenceDensity {
    std::vector<double> grid;
    std::vector<double> density;
    double normalizer = 0.0; // trapezoid integral of the unnormalized density (after max-shift)

    /// Linear interpolation; zero outside the grid.
    double operator()(double theta) const
    {
        if (grid.empty() || theta < grid.front() || theta > grid.back()) {
            return 0.0;
        }
        const auto it = std::upper_bound(grid.begin(), grid.end(), theta);
        if (it == grid.end()) {
            return density.back();
        }
        const auto j = static_cast<std::size_t>(it - grid.begin());
        const double t = (theta - grid[j - 1]) / (grid[j] - grid[j - 1]);
        return (1.0 - t) * density[j - 1] + t * density[j];
    }
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    detail::require(n >= 2 && lo < hi, "linspace needs n >= 2 and lo < hi");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

inline double trapezoid(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    return s;
}

/// chi_S(theta) exp(logpost(theta)) on the grid, trapezoid-normalized.
template <typename LogPost, typename Feasible>
ReferenceDensity reference_posterior(std::vector<double> grid, const LogPost& log_post, const Feasible& feasible)
{
    detail::require(grid.size() >= 2, "reference grid needs at least two nodes");
    detail::require(std::is_sorted(grid.begin(), grid.end()), "reference grid must be increasing");
    std::vector<double> lp(grid.size(), -std::numeric_limits<double>::infinity());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (feasible(grid[i])) {
            lp[i] = log_post(grid[i]);
            peak = std::max(peak, lp[i]);
        }
    }
    if (!std::isfinite(peak)) {
        throw Error("reference posterior has no feasible mass on the grid");
    }
    ReferenceDensity ref;
    ref.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ref.density[i] = std::isfinite(lp[i]) ? std::exp(lp[i] - peak) : 0.0;
    }
    ref.normalizer = trapezoid(grid, ref.density);
    if (!(ref.normalizer > 0.0)) {
        throw Error("reference posterior has no feasible mass on the grid");
    }
    for (auto& d : ref.density) {
        d /= ref.normalizer;
    }
    ref.grid = std::move(grid);
    return ref;
}

struct Histogram {
    std::vector<double> edges;
    std::vector<double> heights; // density-normalized
    std::size_t count = 0;       // samples inside the range

    std::size_t n_bins() const { return heights.size(); }
    double midpoint(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

/// Density histogram of the samples that fall in [lo, hi]; the last bin is
/// closed on the right.
inline Histogram chain_histogram(std::span<const double> samples, std::size_t n_bins, double lo, double hi)
{
    detail::require(n_bins >= 1 && lo < hi, "histogram needs n_bins >= 1 and lo < hi");
    if (samples.empty()) {
        throw ValidationError("histogram of an empty chain");
    }
    Histogram h;
    h.edges = linspace(lo, hi, n_bins + 1);
    std::vector<std::size_t> counts(n_bins, 0);
    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (double s : samples) {
        if (s < lo || s > hi) {
            continue;
        }
        auto b = static_cast<std::size_t>((s - lo) / width);
        counts[std::min(b, n_bins - 1)]++;
        ++h.count;
    }
    if (h.count == 0) {
        throw ValidationError("no samples inside the histogram range");
    }
    h.heights.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        h.heights[b] = static_cast<double>(counts[b]) / (static_cast<double>(h.count) * width);
    }
    return h;
}

/// sqrt(sum (h_b - p_b)^2) / sqrt(sum p_b^2), p_b the reference at bin midpoints.
inline double relative_l2_error(const Histogram& hist, const ReferenceDensity& ref)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t b = 0; b < hist.n_bins(); ++b) {
        const double p = ref(hist.midpoint(b));
        num += (hist.heights[b] - p) * (hist.heights[b] - p);
        den += p * p;
    }
    detail::require(den > 0.0, "reference is zero on every histogram bin");
    return std::sqrt(num) / std::sqrt(den);
}

/// Drops the leading `fraction` of a chain.
inline std::span<const double> burn_in(std::span<const double> samples, double fraction)
{
    detail::require(fraction >= 0.0 && fraction < 1.0, "burn-in fraction must lie in [0,1)");
    const auto skip = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(samples.size())));
    return samples.subspan(skip);
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
inline double sorted_quantile(std::span<const double> sorted, double p)
{
    detail::require(!sorted.empty(), "quantile of an empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Width of the central `confidence` interval.
inline double interval_width(std::span<const double> samples, double confidence)
{
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double tail = 0.5 * (1.0 - confidence);
    return sorted_quantile(s, 1.0 - tail) - sorted_quantile(s, tail);
}

struct BgPoint {
    std::size_t n = 0;
    double ratio = 0.0;
};

/// At each checkpoint n: mean width of per-chain intervals over the first n
/// samples divided by the width of the pooled interval of all full chains.
inline std::vector<BgPoint> brooks_gelman_ratio(const std::vector<std::vector<double>>& chains, double confidence,
                                                std::span<const std::size_t> checkpoints)
{
    detail::require(chains.size() >= 2, "Brooks-Gelman ratio needs at least two chains");
    detail::require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
    detail::require(std::is_sorted(checkpoints.begin(), checkpoints.end()), "checkpoints must be increasing");
    std::vector<double> pooled;
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (const auto& c : chains) {
        pooled.insert(pooled.end(), c.begin(), c.end());
        shortest = std::min(shortest, c.size());
    }
    const double pooled_width = interval_width(pooled, confidence);
    std::vector<BgPoint> out;
    for (std::size_t n : checkpoints) {
        if (n == 0 || n > shortest) {
            throw ValidationError("checkpoint " + std::to_string(n) + " exceeds the chain length");
        }
        double mean_width = 0.0;
        for (const auto& c : chains) {
            mean_width += interval_width(std::span<const double>(c).first(n), confidence);
        }
        mean_width /= static_cast<double>(chains.size());
        out.push_back({n, pooled_width > 0.0 ? mean_width / pooled_width : 1.0});
    }
    return out;
}

inline void write_histogram_csv(const std::string& path, const Histogram& h, const ReferenceDensity* ref = nullptr)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "bin_lo,bin_hi,height" << (ref ? ",reference" : "") << '\n';
    for (std::size_t b = 0; b < h.n_bins(); ++b) {
        out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.heights[b];
        if (ref) {
            out << ',' << (*ref)(h.midpoint(b));
        }
        out << '\n';
    }
}

inline void write_reference_csv(const std::string& path, const ReferenceDensity& ref)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "theta,density\n";
    for (std::size_t i = 0; i < ref.grid.size(); ++i) {
        out << ref.grid[i] << ',' << ref.density[i] << '\n';
    }
}

} // namespace ccbi
