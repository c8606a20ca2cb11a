#pragma once

// JSON form of strip surrogates and a content-keyed on-disk cache.

#include <optional>
#include <string>

#include <json.hpp>

#include "ccbi/gpc.hpp"

namespace ccbi::app {

nlohmann::json surrogate_to_json(const StripSurrogate& s);
StripSurrogate surrogate_from_json(const nlohmann::json& j);

/// Cache key over everything that determines the surrogate.
std::string surrogate_key(const ModelParams& params, const GermSpec& germ, double re, const StripSurrogateOptions& opt);

/// Directory named by CCBI_CACHE_DIR, if set.
std::optional<std::string> cache_dir();

/// Loads from the cache when possible, otherwise builds and stores.
/// `hit` reports which happened.
StripSurrogate cached_surrogate(const ModelParams& params, const GermSpec& germ, double re,
                                const StripSurrogateOptions& opt, const std::string& dir, bool* hit = nullptr);

} // namespace ccbi::app
