#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nnedit/ir/model.hpp"

namespace nnedit {

enum class Severity { Error, Warning };

std::string to_string(Severity s);

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string code;      // "dangling_connection", "param_out_of_range", ...
    std::string message;
    std::string layer_id;  // empty for model-level findings
    std::optional<std::size_t> line;
    std::optional<std::size_t> column;

    bool operator==(const Diagnostic&) const = default;
};

/// Empty iff the model satisfies every IRModel/IRLayer invariant and all
/// required parameters are set. Cycles are reported as warnings only.
std::vector<Diagnostic> validate(const IRModel& model);

bool has_errors(const std::vector<Diagnostic>& diagnostics);

}  // namespace nnedit
