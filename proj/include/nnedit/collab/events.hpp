#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nnedit/ir/model.hpp"

namespace nnedit::collab {

/// The four client-visible update kinds plus the server-made revert.
enum class EventKind { ParamUpdate, LayerAdd, LayerDelete, LayerHighlight, Revert };

std::string to_string(EventKind kind);
/// "param_update", "layer_add", ... Throws SchemaViolation.
EventKind parse_event_kind(std::string_view text);

inline bool is_mutating(EventKind kind) { return kind != EventKind::LayerHighlight; }

/// Payloads by kind:
///   param_update    {layer_id, key, value}   value null resets to the default;
///                   key "position" sets the position hint ([x,y] or null),
///                   key "display_name" renames the label
///   layer_add       {layer: {id?, type, params?, position?}, connections?: [[from,to],...]}
///                   a missing id or connection list is filled in by resolve_event
///   layer_delete    {layer_id}
///   layer_highlight {layer_id, transient: true}
///   revert          {to_version, model: IR JSON of the restored state}
struct UpdateEvent {
    /// Server-assigned version; 0 until applied, and always 0 for highlights.
    std::uint64_t event_id = 0;
    EventKind kind = EventKind::ParamUpdate;
    nlohmann::json payload = nlohmann::json::object();
    std::string author;
    std::uint64_t base_version = 0;
    std::int64_t timestamp = 0;  // ms since the Unix epoch

    bool operator==(const UpdateEvent&) const = default;
};

nlohmann::ordered_json event_to_json(const UpdateEvent& event);
/// Throws MalformedDocument / SchemaViolation.
UpdateEvent event_from_json(const nlohmann::json& value);

/// Fills in what the server decides for a layer_add: a fresh id when none is
/// given and, without an explicit connection list, a single link from the
/// deepest layer. Other kinds are returned unchanged.
UpdateEvent resolve_event(const IRModel& model, UpdateEvent event);

/// Applies a resolved mutating event. Highlights only check their target.
/// Throws NotFound, SchemaViolation, DuplicateConnection, MalformedDocument.
IRModel apply_event(IRModel model, const UpdateEvent& event);

/// One-line description for history views.
std::string summarize(const UpdateEvent& event);

/// Trainable parameter count of `model`, or nullopt when shapes cannot be
/// inferred.
std::optional<std::uint64_t> parameter_count(const IRModel& model);

std::int64_t now_ms();

}  // namespace nnedit::collab
