#pragma once

// Galerkin polynomial chaos surrogate of the strip temperatures.
//
// The uncertain inputs (heat flux q and/or porosity phi) are independent
// Gaussians, expanded in standardized coordinates xi = (v - mean)/std with a
// full tensor Hermite basis of degree <= K per variable. The coefficient ODEs
// are marched with the same explicit Euler step as the deterministic model;
// projections use tensor Gauss-Hermite collocation. The density has no
// Galerkin expansion: it is carried separately at every collocation node.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccbi/errors.hpp"
#include "ccbi/hermite.hpp"
#include "ccbi/model_params.hpp"
#include "ccbi/porous_flow.hpp"

namespace ccbi {

enum class GermKind { gaussian };

struct GermVariable {
    std::string name; // "q" or "phi" for strip surrogates
    GermKind kind = GermKind::gaussian;
    double mean = 0.0;
    double std_dev = 0.0;

    double standardize(double value) const { return std_dev > 0.0 ? (value - mean) / std_dev : 0.0; }
    double physical(double xi) const { return mean + std_dev * xi; }
};

struct GermSpec {
    std::vector<GermVariable> variables;

    std::size_t dims() const { return variables.size(); }

    void validate() const
    {
        for (const auto& v : variables) {
            detail::require(v.std_dev >= 0.0 && std::isfinite(v.std_dev),
                            "germ std-dev must be finite and >= 0 (" + v.name + ")");
            detail::require(std::isfinite(v.mean), "germ mean must be finite (" + v.name + ")");
        }
    }

    /// Index of the variable with this name, or dims() when absent.
    std::size_t find(const std::string& name) const
    {
        for (std::size_t i = 0; i < variables.size(); ++i) {
            if (variables[i].name == name) {
                return i;
            }
        }
        return variables.size();
    }

    bool operator==(const GermSpec& other) const
    {
        if (variables.size() != other.variables.size()) {
            return false;
        }
        for (std::size_t i = 0; i < variables.size(); ++i) {
            const auto& a = variables[i];
            const auto& b = other.variables[i];
            if (a.name != b.name || a.mean != b.mean || a.std_dev != b.std_dev) {
                return false;
            }
        }
        return true;
    }
};

/// Full tensor multi-index set {0..order}^dims; the last variable varies
/// fastest, so for two variables basis m = i*(order+1) + j.
class TensorBasis {
public:
    TensorBasis() = default;
    TensorBasis(unsigned order, std::size_t dims) : order_(order), dims_(dims)
    {
        std::size_t count = 1;
        for (std::size_t d = 0; d < dims; ++d) {
            count *= order + 1;
        }
        degrees_.resize(count * dims);
        norms_.resize(count);
        for (std::size_t m = 0; m < count; ++m) {
            std::size_t rest = m;
            double norm = 1.0;
            for (std::size_t d = dims; d-- > 0;) {
                const auto k = static_cast<unsigned>(rest % (order + 1));
                rest /= order + 1;
                degrees_[m * dims + d] = k;
                norm *= hermite_norm_squared(k);
            }
            norms_[m] = norm;
        }
    }

    unsigned order() const { return order_; }
    std::size_t dims() const { return dims_; }
    std::size_t size() const { return norms_.size(); }
    unsigned degree(std::size_t m, std::size_t d) const { return degrees_[m * dims_ + d]; }
    double norm_squared(std::size_t m) const { return norms_[m]; }

    /// Phi_m(xi) for every m.
    void evaluate(std::span<const double> xi, std::span<double> out) const
    {
        std::vector<double> he((order_ + 1) * dims_);
        for (std::size_t d = 0; d < dims_; ++d) {
            hermite_values(xi[d], std::span<double>(he).subspan(d * (order_ + 1), order_ + 1));
        }
        for (std::size_t m = 0; m < size(); ++m) {
            double v = 1.0;
            for (std::size_t d = 0; d < dims_; ++d) {
                v *= he[d * (order_ + 1) + degree(m, d)];
            }
            out[m] = v;
        }
    }

private:
    unsigned order_ = 0;
    std::size_t dims_ = 0;
    std::vector<unsigned> degrees_;
    std::vector<double> norms_;
};

struct StripSurrogateOptions {
    unsigned order = 3;
    std::size_t n_quad = 6;
    std::size_t n_steps = 1000;
    double singular_epsilon = 1e-12;
};

/// gPC coefficient trajectories of T_f and T_s along x at fixed Re.
struct StripSurrogate {
    unsigned order = 0;
    GermSpec germ;
    double re = 0.0;
    std::size_t n_quad = 0;
    std::vector<double> x_grid;
    /// coeff[m * n_nodes + node]
    std::vector<double> coeff_t_fluid;
    std::vector<double> coeff_t_solid;

    TensorBasis basis() const { return TensorBasis(order, germ.dims()); }
    std::size_t n_nodes() const { return x_grid.size(); }
    std::size_t n_basis() const { return x_grid.empty() ? 0 : coeff_t_fluid.size() / x_grid.size(); }
    double fluid(std::size_t m, std::size_t node) const { return coeff_t_fluid[m * n_nodes() + node]; }
    double solid(std::size_t m, std::size_t node) const { return coeff_t_solid[m * n_nodes() + node]; }
};

struct StripTemperatures {
    double t_fluid = 0.0;
    double t_solid = 0.0;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {

inline void check_strip_germ(const GermSpec& germ)
{
    germ.validate();
    for (std::size_t i = 0; i < germ.dims(); ++i) {
        const auto& name = germ.variables[i].name;
        require(name == "q" || name == "phi", "strip germ variables must be named q or phi, got " + name);
        for (std::size_t j = 0; j < i; ++j) {
            require(germ.variables[j].name != name, "duplicate germ variable " + name);
        }
    }
}

} // namespace detail

/// Marches the Galerkin coefficient system for (T_f, T_s) in x. Inputs absent
/// from the germ are fixed at params.heat_flux_nominal / params.porosity.
inline StripSurrogate build_strip_surrogate(const ModelParams& params, const GermSpec& germ, double re,
                                            const StripSurrogateOptions& opt = {})
{
    detail::check_strip_germ(germ);
    detail::require(opt.n_quad >= static_cast<std::size_t>(opt.order) + 1,
                    "truncation-order error: n_quad must be >= order + 1");
    detail::check_strip_inputs(params.porosity, re, opt.n_steps);

    const std::size_t dims = germ.dims();
    const TensorBasis basis(opt.order, dims);
    const TensorRule rule = tensor_rule(gauss_hermite_rule(opt.n_quad), dims);
    const std::size_t nb = basis.size();
    const std::size_t np = rule.size();
    const std::size_t iq = germ.find("q");
    const std::size_t iphi = germ.find("phi");

    // Collocation nodes: physical inputs and weighted basis values.
    std::vector<double> q_node(np, params.heat_flux_nominal);
    std::vector<double> phi_node(np, params.porosity);
    std::vector<double> phi_at(np * nb);
    for (std::size_t p = 0; p < np; ++p) {
        const auto xi = rule.point(p);
        if (iq < dims) {
            q_node[p] = germ.variables[iq].physical(xi[iq]);
        }
        if (iphi < dims) {
            phi_node[p] = germ.variables[iphi].physical(xi[iphi]);
            detail::require(phi_node[p] > 0.0 && phi_node[p] < 1.0,
                            "porosity collocation node outside (0,1); reduce sigma_phi");
        }
        basis.evaluate(xi, std::span<double>(phi_at).subspan(p * nb, nb));
    }

    const std::size_t n_nodes = opt.n_steps + 1;
    StripSurrogate s;
    s.order = opt.order;
    s.germ = germ;
    s.re = re;
    s.n_quad = opt.n_quad;
    s.x_grid.resize(n_nodes);
    s.coeff_t_fluid.assign(nb * n_nodes, 0.0);
    s.coeff_t_solid.assign(nb * n_nodes, 0.0);

    std::vector<double> cf(nb, 0.0);
    std::vector<double> cs(nb, 0.0);
    cf[0] = params.coolant_temp;
    cs[0] = params.solid_temp;
    std::vector<double> rho(np, params.reservoir_pressure / params.coolant_temp);
    std::vector<double> dcf(nb);
    std::vector<double> dcs(nb);
    std::vector<double> drho(np);

    auto store = [&](std::size_t k) {
        s.x_grid[k] = k == opt.n_steps ? 1.0 : static_cast<double>(k) / static_cast<double>(opt.n_steps);
        for (std::size_t m = 0; m < nb; ++m) {
            s.coeff_t_fluid[m * n_nodes + k] = cf[m];
            s.coeff_t_solid[m * n_nodes + k] = cs[m];
        }
    };
    store(0);

    const double h = 1.0 / static_cast<double>(opt.n_steps);
    for (std::size_t k = 1; k <= opt.n_steps; ++k) {
        std::fill(dcf.begin(), dcf.end(), 0.0);
        std::fill(dcs.begin(), dcs.end(), 0.0);
        for (std::size_t p = 0; p < np; ++p) {
            const double* b = phi_at.data() + p * nb;
            double tf = 0.0;
            double ts = 0.0;
            for (std::size_t m = 0; m < nb; ++m) {
                tf += cf[m] * b[m];
                ts += cs[m] * b[m];
            }
            const auto rates = detail::temperature_rates(params, q_node[p], phi_node[p], re, tf, ts);
            drho[p] = detail::density_rate(params, phi_node[p], re, tf, ts, rho[p], opt.singular_epsilon);
            const double wf = rule.weights[p] * rates.t_fluid;
            const double ws = rule.weights[p] * rates.t_solid;
            for (std::size_t m = 0; m < nb; ++m) {
                dcf[m] += wf * b[m];
                dcs[m] += ws * b[m];
            }
        }
        for (std::size_t m = 0; m < nb; ++m) {
            cf[m] += h * dcf[m] / basis.norm_squared(m);
            cs[m] += h * dcs[m] / basis.norm_squared(m);
        }
        for (std::size_t p = 0; p < np; ++p) {
            rho[p] += h * drho[p];
            if (!std::isfinite(rho[p])) {
                throw NonFiniteStateError("non-finite collocation density at step " + std::to_string(k));
            }
        }
        if (!std::isfinite(cf[0]) || !std::isfinite(cs[0])) {
            throw NonFiniteStateError("non-finite gPC coefficient at step " + std::to_string(k));
        }
        store(k);
    }
    return s;
}

/// Truncated expansion at germ coordinates xi (one per germ variable).
inline StripTemperatures evaluate_surrogate_germ(const StripSurrogate& s, std::size_t x_index,
                                                 std::span<const double> xi)
{
    if (xi.size() != s.germ.dims()) {
        throw DimensionMismatchError("germ realization has wrong dimension");
    }
    detail::require(x_index < s.n_nodes(), "x_index out of range");
    const TensorBasis basis = s.basis();
    std::vector<double> b(basis.size());
    basis.evaluate(xi, b);
    StripTemperatures t;
    for (std::size_t m = 0; m < basis.size(); ++m) {
        t.t_fluid += s.fluid(m, x_index) * b[m];
        t.t_solid += s.solid(m, x_index) * b[m];
    }
    return t;
}

/// Truncated expansion at physical inputs (q, phi). Inputs that are not germ
/// variables are ignored.
inline StripTemperatures evaluate_surrogate(const StripSurrogate& s, std::size_t x_index, double q, double phi)
{
    std::vector<double> xi(s.germ.dims());
    for (std::size_t d = 0; d < xi.size(); ++d) {
        const auto& v = s.germ.variables[d];
        xi[d] = v.standardize(v.name == "q" ? q : phi);
    }
    return evaluate_surrogate_germ(s, x_index, xi);
}

enum class StripField { fluid, solid };

inline Moments surrogate_moments(const StripSurrogate& s, std::size_t x_index, StripField field = StripField::fluid)
{
    detail::require(x_index < s.n_nodes(), "x_index out of range");
    const TensorBasis basis = s.basis();
    Moments mom;
    for (std::size_t m = 0; m < basis.size(); ++m) {
        const double c = field == StripField::fluid ? s.fluid(m, x_index) : s.solid(m, x_index);
        if (m == 0) {
            mom.mean = c;
        } else {
            mom.variance += c * c * basis.norm_squared(m);
        }
    }
    return mom;
}

} // namespace ccbi
