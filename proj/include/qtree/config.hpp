#pragma once

// Run configuration: a JSON document with fixed defaults. Overrides use
// dotted paths ("disorder.lambda=0.1"); values are parsed as JSON literals and
// fall back to plain strings.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qtree/graph_model.hpp"

namespace qtree {

using json = nlohmann::json;

/// Every accepted key with its default value.
json default_config();

struct RunConfig {
  json doc;
  TreeSpec tree;
  DisorderModel disorder;
  std::uint64_t visit_budget = 0;

  /// Section of a subcommand ("fixed-point" -> doc["fixed_point"]).
  const json& section(const std::string& command) const;
};

/// Loads `path` (a config file or a run manifest, whose "config" member is
/// used) over the defaults, applies `overrides` in order and validates.
RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides);

/// Validates `doc` (already merged with defaults) and builds the typed parts.
RunConfig resolve_config(json doc);

/// Applies one "key.path=value" override; unknown keys are rejected.
void apply_override(json& doc, const std::string& assignment);

std::string section_name(const std::string& command);

}  // namespace qtree
