#pragma once

// Model files and builtin models for the command-line tool.
//
// File format:
//   { "bands": m,
//     "terms": [ { "r": [n1, n2, n3],
//                  "matrix": [[[re, im], ...], ...] } ] }
// Matrix entries may also be plain real numbers.

#include <optional>
#include <string>

#include <json.hpp>

#include "weylscope/bloch.hpp"

namespace weylscope::cli {

struct LoadedModel {
  TightBindingModel model;
  /// Path, or canonical builtin name such as "minimal:t=0".
  std::string source;
  bool builtin = false;
};

/// Parses a model document. Throws ModelError with code "parse_error"
/// (line and column) or "bad_field" (JSON pointer of the offending field).
TightBindingModel parse_model(const std::string& text);

/// Builtins: "minimal[:t=<v>]", "two-pair[:t=<v>]", "sigma3".
/// `t` overrides the builtin parameter; it is a UsageError for model files.
LoadedModel load_model(const std::string& spec, std::optional<double> t);

/// Every stored term (both members of each +-r pair).
nlohmann::ordered_json model_to_json(const TightBindingModel& model);

bool models_equal(const TightBindingModel& a, const TightBindingModel& b, double tolerance = 0.0);

}  // namespace weylscope::cli
