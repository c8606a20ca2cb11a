#pragma once

// Interface temperature T_h(z, t): strip outlet temperatures placed on pore
// footprints inside (d1, d2), wall temperature T0 elsewhere, then evolved by
// the 1D heat equation with zero-flux ends.
//
// The grid is cell-centred, z_j = (j + 1/2)/n_z, with mirrored ghost cells, so
// the plain arithmetic mean of a field is exactly conserved by the scheme and
// cos(k pi z) is a discrete eigenmode.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccbi/errors.hpp"
#include "ccbi/gpc.hpp"
#include "ccbi/hermite.hpp"

namespace ccbi {

struct PorousSection {
    double lo = 0.0;
    double hi = 0.0;
    double porosity = 0.0;
};

struct InterfaceGeometry {
    double d1 = 0.25;
    double d2 = 0.75;
    std::size_t n_strips = 60;
    std::vector<PorousSection> sections;
    double wall_temp = 400.0;   // T0
    double delta_z = 0.0;       // pore half-width; 0 selects (d2-d1)/(2 n_strips)
    double diffusivity = 1e-3;  // lambda
    double t_constraint = 1.0;  // t_c
    std::size_t n_z = 600;
    double cfl = 0.5;

    double half_width() const { return delta_z > 0.0 ? delta_z : (d2 - d1) / (2.0 * static_cast<double>(n_strips)); }

    double strip_center(std::size_t i) const
    {
        return d1 + (static_cast<double>(i) + 0.5) * (d2 - d1) / static_cast<double>(n_strips);
    }

    /// Porosity of the section holding the strip centre; empty for wall strips.
    std::optional<double> strip_porosity(std::size_t i) const
    {
        const double z = strip_center(i);
        for (const auto& s : sections) {
            if (z >= s.lo && z < s.hi) {
                return s.porosity;
            }
        }
        return std::nullopt;
    }

    void validate() const
    {
        using detail::require;
        require(d1 >= 0.0 && d1 < d2 && d2 <= 1.0, "geometry needs 0 <= d1 < d2 <= 1");
        require(n_strips >= 1, "geometry needs at least one strip");
        require(wall_temp > 0.0, "wall temperature must be positive");
        require(diffusivity > 0.0, "diffusivity must be positive");
        require(t_constraint > 0.0, "t_constraint must be positive");
        require(n_z >= 2, "n_z must be at least 2");
        require(delta_z >= 0.0 && delta_z <= (d2 - d1) / (2.0 * static_cast<double>(n_strips)) * (1.0 + 1e-12),
                "delta_z must not exceed the tiling half-width");
        for (const auto& s : sections) {
            require(s.lo < s.hi && s.lo >= d1 - 1e-12 && s.hi <= d2 + 1e-12, "section must lie inside (d1,d2)");
            require(s.porosity > 0.0 && s.porosity < 1.0, "section porosity must lie in (0,1)");
        }
    }
};

struct InterfaceField {
    std::vector<double> z_grid;
    std::vector<double> values;
    double time = 0.0;
};

inline std::vector<double> interface_grid(std::size_t n_z)
{
    std::vector<double> z(n_z);
    for (std::size_t j = 0; j < n_z; ++j) {
        z[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(n_z);
    }
    return z;
}

/// Strip owning each grid node (half-open footprints, first match wins);
/// empty for wall nodes. Throws ResolutionError for a footprint without nodes.
inline std::vector<std::optional<std::size_t>> footprint_map(const InterfaceGeometry& g, std::size_t n_z)
{
    g.validate();
    const auto z = interface_grid(n_z);
    const double dz = g.half_width();
    std::vector<std::optional<std::size_t>> owner(n_z);
    std::vector<std::size_t> hits(g.n_strips, 0);
    for (std::size_t j = 0; j < n_z; ++j) {
        if (!(z[j] > g.d1 && z[j] < g.d2)) {
            continue;
        }
        for (std::size_t i = 0; i < g.n_strips; ++i) {
            const double c = g.strip_center(i);
            if (z[j] >= c - dz && z[j] < c + dz) {
                owner[j] = i;
                ++hits[i];
                break;
            }
        }
    }
    for (std::size_t i = 0; i < g.n_strips; ++i) {
        if (hits[i] == 0) {
            throw ResolutionError("pore footprint " + std::to_string(i) + " contains no grid node; increase n_z");
        }
    }
    return owner;
}

namespace detail {

inline InterfaceField assemble(const InterfaceGeometry& g, std::span<const double> strip_values, std::size_t n_z,
                               double background)
{
    require(strip_values.size() == g.n_strips, "strip_values length must equal n_strips");
    const auto owner = footprint_map(g, n_z);
    InterfaceField f;
    f.z_grid = interface_grid(n_z);
    f.values.assign(n_z, background);
    for (std::size_t j = 0; j < n_z; ++j) {
        if (owner[j]) {
            f.values[j] = strip_values[*owner[j]];
        }
    }
    return f;
}

} // namespace detail

/// T_h(z, 0): strip values on their footprints, T0 everywhere else.
inline InterfaceField assemble_initial_field(const InterfaceGeometry& geometry, std::span<const double> strip_values,
                                             std::size_t n_z)
{
    return detail::assemble(geometry, strip_values, n_z, geometry.wall_temp);
}

/// Explicit central differences with dt = cfl dz^2 / lambda; the last step is
/// shortened to land on t_end.
inline InterfaceField diffuse_field(InterfaceField field, double lambda, double t_end, double cfl = 0.5)
{
    detail::require(cfl > 0.0 && cfl <= 0.5, "instability guard: cfl must lie in (0, 0.5]");
    detail::require(lambda > 0.0, "diffusivity must be positive");
    detail::require(t_end >= field.time, "t_end must not precede the field time");
    const std::size_t n = field.values.size();
    detail::require(n >= 2, "field needs at least two nodes");
    const double dz = 1.0 / static_cast<double>(n);
    const double dt = cfl * dz * dz / lambda;
    const double span = t_end - field.time;
    auto n_full = static_cast<std::size_t>(std::floor(span / dt));
    double rest = span - static_cast<double>(n_full) * dt;
    if (rest <= 1e-12 * dt) {
        rest = 0.0;
    }

    std::vector<double>& u = field.values;
    std::vector<double> next(n);
    auto step = [&](double r) {
        next[0] = u[0] + r * (u[1] - u[0]);
        for (std::size_t j = 1; j + 1 < n; ++j) {
            next[j] = u[j] + r * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
        }
        next[n - 1] = u[n - 1] + r * (u[n - 2] - u[n - 1]);
        u.swap(next);
    };
    const double r_full = lambda * dt / (dz * dz);
    for (std::size_t k = 0; k < n_full; ++k) {
        step(r_full);
    }
    if (rest > 0.0) {
        step(lambda * rest / (dz * dz));
    }
    field.time = t_end;
    return field;
}

/// gPC expansion of one strip's outlet fluid temperature in a single germ
/// variable: T = sum_k coeffs[k] He_k(xi[germ_variable]). Wall strips have no
/// germ variable and a single constant coefficient.
struct StripOutletExpansion {
    std::optional<std::size_t> germ_variable;
    std::vector<double> coeffs;
};

/// Outlet expansion of a univariate strip surrogate, mapped to a global germ variable.
inline StripOutletExpansion outlet_expansion(const StripSurrogate& s, std::size_t germ_variable)
{
    detail::require(s.germ.dims() == 1, "interface strips need a univariate germ");
    StripOutletExpansion e;
    e.germ_variable = germ_variable;
    e.coeffs.resize(s.n_basis());
    for (std::size_t k = 0; k < s.n_basis(); ++k) {
        e.coeffs[k] = s.fluid(k, s.n_nodes() - 1);
    }
    return e;
}

inline StripOutletExpansion wall_expansion(double wall_temp) { return {std::nullopt, {wall_temp}}; }

/// Coefficient fields of T_h(z, t) in the global germ.
struct InterfaceCoefficientStack {
    struct Mode {
        std::size_t germ_variable = 0;
        unsigned degree = 1;
        std::vector<double> values;
    };

    std::vector<double> z_grid;
    double time = 0.0;
    std::size_t germ_dims = 0;
    std::vector<double> mean;   // order-zero field, includes the wall background
    std::vector<Mode> modes;    // one per (germ variable, degree >= 1)

    /// sum_modes values^2 * degree!; the pointwise variance.
    std::vector<double> variance() const
    {
        std::vector<double> v(mean.size(), 0.0);
        for (const auto& m : modes) {
            const double norm = hermite_norm_squared(m.degree);
            for (std::size_t j = 0; j < v.size(); ++j) {
                v[j] += m.values[j] * m.values[j] * norm;
            }
        }
        return v;
    }
};

namespace detail {

inline unsigned common_order(std::span<const StripOutletExpansion> strips)
{
    unsigned order = 0;
    bool seen = false;
    for (const auto& s : strips) {
        require(!s.coeffs.empty(), "strip expansion without coefficients");
        if (!s.germ_variable) {
            continue;
        }
        const auto k = static_cast<unsigned>(s.coeffs.size() - 1);
        require(!seen || k == order, "per-strip surrogates must share the truncation order");
        order = k;
        seen = true;
    }
    return order;
}

inline void check_germ_variables(std::span<const StripOutletExpansion> strips, std::size_t germ_dims)
{
    for (const auto& s : strips) {
        require(!s.germ_variable || *s.germ_variable < germ_dims, "strip germ variable out of range");
    }
}

} // namespace detail

/// Builds every coefficient field by assembling and diffusing it on its own;
/// valid because the heat equation is linear.
inline InterfaceCoefficientStack build_interface_surrogate(const InterfaceGeometry& geometry,
                                                           std::span<const StripOutletExpansion> strips,
                                                           std::size_t germ_dims, double lambda, double t_end,
                                                           std::size_t n_z)
{
    detail::require(strips.size() == geometry.n_strips, "need one expansion per strip");
    detail::check_germ_variables(strips, germ_dims);
    const unsigned order = detail::common_order(strips);

    InterfaceCoefficientStack stack;
    stack.germ_dims = germ_dims;
    stack.time = t_end;

    std::vector<double> values(strips.size());
    for (std::size_t i = 0; i < strips.size(); ++i) {
        values[i] = strips[i].coeffs[0];
    }
    auto mean = diffuse_field(detail::assemble(geometry, values, n_z, geometry.wall_temp), lambda, t_end, geometry.cfl);
    stack.z_grid = mean.z_grid;
    stack.mean = std::move(mean.values);

    for (std::size_t g = 0; g < germ_dims; ++g) {
        bool used = false;
        for (const auto& s : strips) {
            used = used || (s.germ_variable && *s.germ_variable == g);
        }
        if (!used) {
            continue;
        }
        for (unsigned k = 1; k <= order; ++k) {
            for (std::size_t i = 0; i < strips.size(); ++i) {
                const auto& s = strips[i];
                values[i] = (s.germ_variable && *s.germ_variable == g) ? s.coeffs[k] : 0.0;
            }
            auto f = diffuse_field(detail::assemble(geometry, values, n_z, 0.0), lambda, t_end, geometry.cfl);
            stack.modes.push_back({g, k, std::move(f.values)});
        }
    }
    return stack;
}

/// Realized T_h(., t) at germ coordinates xi.
inline InterfaceField evaluate_interface_temperature(const InterfaceCoefficientStack& stack, std::span<const double> xi)
{
    if (xi.size() != stack.germ_dims) {
        throw DimensionMismatchError("germ realization has dimension " + std::to_string(xi.size()) + ", expected "
                                     + std::to_string(stack.germ_dims));
    }
    InterfaceField f{stack.z_grid, stack.mean, stack.time};
    for (const auto& m : stack.modes) {
        const double w = hermite(m.degree, xi[m.germ_variable]);
        for (std::size_t j = 0; j < f.values.size(); ++j) {
            f.values[j] += w * m.values[j];
        }
    }
    return f;
}

/// Diffused footprint indicators, computed once per geometry. Any interface
/// field at t_end is wall_response * T0 + sum_i strip_response[i] * value_i.
class InterfaceResponse {
public:
    InterfaceResponse(const InterfaceGeometry& geometry, double t_end) : geometry_(geometry), t_end_(t_end)
    {
        const std::size_t n_z = geometry.n_z;
        const std::size_t n = geometry.n_strips;
        const auto owner = footprint_map(geometry, n_z);
        z_grid_ = interface_grid(n_z);
        response_.resize(static_cast<Eigen::Index>(n_z), static_cast<Eigen::Index>(n + 1));
        for (std::size_t c = 0; c <= n; ++c) {
            InterfaceField f;
            f.z_grid = z_grid_;
            f.values.assign(n_z, 0.0);
            for (std::size_t j = 0; j < n_z; ++j) {
                const bool wall = !owner[j];
                if ((c == 0 && wall) || (c > 0 && owner[j] && *owner[j] == c - 1)) {
                    f.values[j] = 1.0;
                }
            }
            f = diffuse_field(std::move(f), geometry.diffusivity, t_end, geometry.cfl);
            for (std::size_t j = 0; j < n_z; ++j) {
                response_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = f.values[j];
            }
        }
    }

    const InterfaceGeometry& geometry() const { return geometry_; }
    double time() const { return t_end_; }
    const std::vector<double>& z_grid() const { return z_grid_; }
    /// Column 0: wall indicator; column i+1: footprint of strip i.
    const Eigen::MatrixXd& matrix() const { return response_; }

    /// Same stack as build_interface_surrogate, by linear combination.
    InterfaceCoefficientStack coefficient_stack(std::span<const StripOutletExpansion> strips, std::size_t germ_dims) const
    {
        detail::require(strips.size() == geometry_.n_strips, "need one expansion per strip");
        detail::check_germ_variables(strips, germ_dims);
        const unsigned order = detail::common_order(strips);
        const auto n_z = static_cast<Eigen::Index>(z_grid_.size());
        InterfaceCoefficientStack stack;
        stack.z_grid = z_grid_;
        stack.time = t_end_;
        stack.germ_dims = germ_dims;
        Eigen::VectorXd mean = geometry_.wall_temp * response_.col(0);
        for (std::size_t i = 0; i < strips.size(); ++i) {
            mean += strips[i].coeffs[0] * response_.col(static_cast<Eigen::Index>(i + 1));
        }
        stack.mean.assign(mean.data(), mean.data() + n_z);
        for (std::size_t g = 0; g < germ_dims; ++g) {
            for (unsigned k = 1; k <= order; ++k) {
                Eigen::VectorXd field = Eigen::VectorXd::Zero(n_z);
                bool used = false;
                for (std::size_t i = 0; i < strips.size(); ++i) {
                    if (strips[i].germ_variable && *strips[i].germ_variable == g) {
                        field += strips[i].coeffs[k] * response_.col(static_cast<Eigen::Index>(i + 1));
                        used = true;
                    }
                }
                if (used) {
                    stack.modes.push_back({g, k, std::vector<double>(field.data(), field.data() + n_z)});
                }
            }
        }
        return stack;
    }

private:
    InterfaceGeometry geometry_;
    double t_end_ = 0.0;
    std::vector<double> z_grid_;
    Eigen::MatrixXd response_;
};

inline void write_field_csv(const std::string& path, const std::vector<double>& z, const std::vector<double>& values,
                            const std::string& value_name = "value")
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out.precision(17);
    out << "z," << value_name << '\n';
    for (std::size_t j = 0; j < z.size(); ++j) {
        out << z[j] << ',' << values[j] << '\n';
    }
}

} // namespace ccbi
