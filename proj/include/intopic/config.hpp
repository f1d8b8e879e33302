#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "intopic/etm.hpp"

namespace intopic {

/// Flat `key = value` text, one pair per line, `#` starts a comment. Keys are
/// the EtmConfig field names; unknown keys and malformed values throw
/// ParseError. Fields not mentioned keep the values in `base`.
EtmConfig parse_config(std::istream& in, EtmConfig base = {});
EtmConfig load_config(std::filesystem::path const& path, EtmConfig base = {});
void write_config(EtmConfig const& config, std::ostream& out);

/// The explicit path if given, else $INTOPIC_CONFIG if set and non-empty.
std::optional<std::filesystem::path> resolve_config_path(std::optional<std::filesystem::path> explicit_path);

}  // namespace intopic
