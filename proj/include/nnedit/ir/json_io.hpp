#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "nnedit/ir/model.hpp"
#include "nnedit/ir/validate.hpp"

namespace nnedit {

inline constexpr int kIrFormatVersion = 1;

nlohmann::ordered_json param_to_json(const ParamValue& value);
/// Numbers map to number, integer arrays to IntList. Throws MalformedDocument.
ParamValue param_from_json(const nlohmann::json& value);

nlohmann::ordered_json layer_to_json(const IRLayer& layer);
IRLayer layer_from_json(const nlohmann::json& value);

/// {format_version, name, layers:[{id, type, params, position}], connections:[[from,to],...]}
nlohmann::ordered_json model_to_json(const IRModel& model);
/// Compact serialization of model_to_json; byte-identical for equal models.
std::string to_canonical_json(const IRModel& model);

/// Connections are loaded without existence checks so that validate() can
/// report them. Throws MalformedDocument / UnknownLayerType.
IRModel model_from_json(const nlohmann::json& value);
IRModel parse_model_json(std::string_view text);

/// True when `text` looks like a serialized IR document: it has
/// format_version, or layers and connections without a Keras class_name.
bool looks_like_ir_json(std::string_view text);

/// {severity, code, message, layer_id, line, column}; absent parts are null.
nlohmann::ordered_json diagnostic_to_json(const Diagnostic& d);

}  // namespace nnedit
