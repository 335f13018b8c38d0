#pragma once

#include <string>

#include "json.hpp"

namespace spikelab::toml {

/// Reads the TOML subset used by experiment configs into a JSON object:
/// [tables] and [dotted.tables], dotted keys, strings (basic and literal),
/// integers, floats, booleans, single-line arrays and inline tables. Throws InvalidArgument
/// with the offending line number on anything else.
nlohmann::json parse(const std::string& text);

}  // namespace spikelab::toml
