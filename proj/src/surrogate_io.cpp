#include "surrogate_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace ccbi::app {

using nlohmann::json;

json surrogate_to_json(const StripSurrogate& s)
{
    json germ = json::array();
    for (const auto& v : s.germ.variables) {
        germ.push_back({{"name", v.name}, {"mean", v.mean}, {"std", v.std_dev}});
    }
    return {{"order", s.order},   {"re", s.re},          {"n_quad", s.n_quad},
            {"germ", germ},       {"x_grid", s.x_grid},  {"coeff_t_fluid", s.coeff_t_fluid},
            {"coeff_t_solid", s.coeff_t_solid}};
}

StripSurrogate surrogate_from_json(const json& j)
{
    try {
        StripSurrogate s;
        s.order = j.at("order").get<unsigned>();
        s.re = j.at("re").get<double>();
        s.n_quad = j.at("n_quad").get<std::size_t>();
        for (const auto& v : j.at("germ")) {
            s.germ.variables.push_back(
                {v.at("name").get<std::string>(), GermKind::gaussian, v.at("mean").get<double>(), v.at("std").get<double>()});
        }
        s.x_grid = j.at("x_grid").get<std::vector<double>>();
        s.coeff_t_fluid = j.at("coeff_t_fluid").get<std::vector<double>>();
        s.coeff_t_solid = j.at("coeff_t_solid").get<std::vector<double>>();
        const std::size_t expected = s.basis().size() * s.x_grid.size();
        detail::require(s.coeff_t_fluid.size() == expected && s.coeff_t_solid.size() == expected,
                        "surrogate coefficient arrays have the wrong length");
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed surrogate document: ") + e.what());
    }
}

std::string surrogate_key(const ModelParams& p, const GermSpec& germ, double re, const StripSurrogateOptions& opt)
{
    std::ostringstream text;
    text << std::setprecision(17) << p.reynolds_nominal << ' ' << p.prandtl << ' ' << p.nusselt << ' '
         << p.heat_flux_nominal << ' ' << p.hot_gas_temp << ' ' << p.porosity << ' ' << p.kappa_fluid << ' '
         << p.kappa_solid << ' ' << p.permeability_darcy << ' ' << p.forchheimer << ' ' << p.coolant_temp << ' '
         << p.solid_temp << ' ' << p.reservoir_pressure << ' ' << p.length << ' ' << p.heat_flux_scale << '|';
    for (const auto& v : germ.variables) {
        text << v.name << ' ' << v.mean << ' ' << v.std_dev << '|';
    }
    text << re << '|' << opt.order << ' ' << opt.n_quad << ' ' << opt.n_steps << ' ' << opt.singular_epsilon;
    // FNV-1a, stable across platforms unlike std::hash
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text.str()) {
        h = (h ^ c) * 1099511628211ULL;
    }
    std::ostringstream key;
    key << "strip_" << std::hex << std::setw(16) << std::setfill('0') << h;
    return key.str();
}

std::optional<std::string> cache_dir()
{
    if (const char* dir = std::getenv("CCBI_CACHE_DIR"); dir && *dir) {
        return std::string(dir);
    }
    return std::nullopt;
}

StripSurrogate cached_surrogate(const ModelParams& params, const GermSpec& germ, double re,
                                const StripSurrogateOptions& opt, const std::string& dir, bool* hit)
{
    namespace fs = std::filesystem;
    const fs::path file = fs::path(dir) / (surrogate_key(params, germ, re, opt) + ".json");
    if (fs::exists(file)) {
        std::ifstream in(file);
        try {
            auto s = surrogate_from_json(json::parse(in));
            if (hit) {
                *hit = true;
            }
            return s;
        } catch (const std::exception&) {
            // unreadable entry: rebuild below
        }
    }
    auto s = build_strip_surrogate(params, germ, re, opt);
    fs::create_directories(dir);
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out << surrogate_to_json(s).dump();
    }
    fs::rename(tmp, file);
    if (hit) {
        *hit = false;
    }
    return s;
}

} // namespace ccbi::app
