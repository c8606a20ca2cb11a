#pragma once

// Probabilists' Hermite polynomials and Gauss-Hermite quadrature against the
// standard normal density.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ccbi/errors.hpp"

namespace ccbi {

/// He_n(x) by the three-term recurrence He_{n+1} = x He_n - n He_{n-1}.
inline double hermite(unsigned n, double x)
{
    if (n == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double cur = x;
    for (unsigned k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Fills out[k] = He_k(x) for k = 0..out.size()-1.
inline void hermite_values(double x, std::span<double> out)
{
    if (out.empty()) {
        return;
    }
    out[0] = 1.0;
    if (out.size() > 1) {
        out[1] = x;
    }
    for (std::size_t k = 1; k + 1 < out.size(); ++k) {
        out[k + 1] = x * out[k] - static_cast<double>(k) * out[k - 1];
    }
}

/// <He_n, He_n> = n! under the standard normal measure.
inline double hermite_norm_squared(unsigned n)
{
    double f = 1.0;
    for (unsigned k = 2; k <= n; ++k) {
        f *= static_cast<double>(k);
    }
    return f;
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Hermite rule for the standard normal density (Golub-Welsch). Exact
/// for polynomials of degree <= 2 n_nodes - 1; weights sum to one.
inline QuadratureRule gauss_hermite_rule(std::size_t n_nodes)
{
    detail::require(n_nodes >= 1, "gauss_hermite_rule needs at least one node");
    QuadratureRule rule;
    if (n_nodes == 1) {
        rule.nodes = {0.0};
        rule.weights = {1.0};
        return rule;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes));
    Eigen::VectorXd sub(static_cast<Eigen::Index>(n_nodes - 1));
    for (std::size_t k = 1; k < n_nodes; ++k) {
        sub[static_cast<Eigen::Index>(k - 1)] = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

    std::vector<double> x(n_nodes);
    std::vector<double> w(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        x[i] = solver.eigenvalues()[ii];
        const double v0 = solver.eigenvectors()(0, ii);
        w[i] = v0 * v0;
    }
    std::vector<std::size_t> order(n_nodes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    rule.nodes.resize(n_nodes);
    rule.weights.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        rule.nodes[i] = x[order[i]];
        rule.weights[i] = w[order[i]];
    }
    // The rule is symmetric about zero; enforce it to the last bit.
    for (std::size_t i = 0; i < n_nodes / 2; ++i) {
        const std::size_t j = n_nodes - 1 - i;
        const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -node;
        rule.nodes[j] = node;
        rule.weights[i] = weight;
        rule.weights[j] = weight;
    }
    if (n_nodes % 2 == 1) {
        rule.nodes[n_nodes / 2] = 0.0;
    }
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (double& wi : rule.weights) {
        wi /= total;
    }
    return rule;
}

/// Tensor product of a 1D rule in `dims` dimensions. Points are stored
/// row-major: point p occupies points[p*dims .. p*dims+dims).
struct TensorRule {
    std::size_t dims = 0;
    std::vector<double> points;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    std::span<const double> point(std::size_t p) const { return {points.data() + p * dims, dims}; }
};

inline TensorRule tensor_rule(const QuadratureRule& rule, std::size_t dims)
{
    TensorRule t;
    t.dims = dims;
    std::size_t count = 1;
    for (std::size_t d = 0; d < dims; ++d) {
        count *= rule.size();
    }
    t.points.resize(count * dims);
    t.weights.resize(count);
    for (std::size_t p = 0; p < count; ++p) {
        std::size_t rest = p;
        double w = 1.0;
        // last dimension varies fastest
        for (std::size_t d = dims; d-- > 0;) {
            const std::size_t k = rest % rule.size();
            rest /= rule.size();
            t.points[p * dims + d] = rule.nodes[k];
            w *= rule.weights[k];
        }
        t.weights[p] = w;
    }
    return t;
}

/// <f, g> under the product standard normal measure in rule.dims variables.
/// The rule must be exact for the degree of f*g; that is the caller's job.
template <typename F, typename G>
double inner_product(F&& f, G&& g, const TensorRule& rule)
{
    double sum = 0.0;
    for (std::size_t p = 0; p < rule.size(); ++p) {
        const auto xi = rule.point(p);
        sum += rule.weights[p] * f(xi) * g(xi);
    }
    return sum;
}

} // namespace ccbi
