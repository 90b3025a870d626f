#pragma once

#include "fluidq/models.hpp"

#include <optional>
#include <string>

namespace fluidq {

struct SpecParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A parsed model file. Exactly one of the optionals is set, matching `kind`.
struct ModelSpec {
  std::string kind;  // classic | colored | jumps | lcfs | cascade
  std::optional<ClassicModel> classic;
  std::optional<ColoredModel> colored;
  std::optional<JumpModel> jumps;
  std::optional<LCFSSpec> lcfs;
  std::optional<CascadeSpec> cascade;
};

// Loads and schema-validates a JSON model file; numeric (generator-level)
// validation happens later in the solvers. Throws SpecParseError with the
// offending field name.
ModelSpec load_model_spec(const std::string& path);
ModelSpec parse_model_spec_json(const std::string& text);

// The jump model described by the spec, running the application builders for
// the lcfs/cascade kinds. Throws SpecParseError for kinds without jump
// semantics.
JumpModel spec_jump_model(const ModelSpec& spec);

}  // namespace fluidq
