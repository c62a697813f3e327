#include "nnedit/collab/events.hpp"

#include <chrono>

#include "nnedit/error.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"

namespace nnedit::collab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::ParamUpdate, "param_update"},     {EventKind::LayerAdd, "layer_add"},
    {EventKind::LayerDelete, "layer_delete"},     {EventKind::LayerHighlight, "layer_highlight"},
    {EventKind::Revert, "revert"},
};

std::string text_field(const json& payload, const char* key) {
    auto it = payload.find(key);
    if (it == payload.end() || !it->is_string()) throw SchemaViolation(std::string("payload needs a string '") + key + "'");
    return it->get<std::string>();
}

IRModel apply_param_update(IRModel model, const json& p) {
    const std::string id = text_field(p, "layer_id");
    const std::string key = text_field(p, "key");
    const json value = p.contains("value") ? p.at("value") : json(nullptr);
    IRLayer& layer = model.at(id);
    if (key == "position") {
        if (value.is_null()) {
            layer.position_hint.reset();
        } else if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
            layer.position_hint = Position{value[0].get<double>(), value[1].get<double>()};
        } else {
            throw SchemaViolation("position must be [x, y] or null");
        }
        return model;
    }
    if (key == "display_name") {
        if (!value.is_string() && !value.is_null()) throw SchemaViolation("display_name must be a string");
        layer.display_name = value.is_null() ? id : value.get<std::string>();
        return model;
    }
    if (value.is_null()) return reset_param(std::move(model), id, key);
    return update_param(std::move(model), id, key, param_from_json(value));
}

IRLayer layer_of(const json& p) {
    auto it = p.find("layer");
    if (it == p.end() || !it->is_object()) throw SchemaViolation("layer_add needs a 'layer' object");
    json layer = *it;
    if (!layer.contains("id")) layer["id"] = "";
    return layer_from_json(layer);
}

}  // namespace

std::string to_string(EventKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return std::string(name);
    return "unknown";
}

EventKind parse_event_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames)
        if (name == text) return k;
    throw SchemaViolation("unknown event kind '" + std::string(text) + "'");
}

ordered_json event_to_json(const UpdateEvent& e) {
    ordered_json out;
    out["event_id"] = e.kind == EventKind::LayerHighlight ? ordered_json(nullptr) : ordered_json(e.event_id);
    out["kind"] = to_string(e.kind);
    out["payload"] = ordered_json::parse(e.payload.dump());
    out["author"] = e.author;
    out["base_version"] = e.base_version;
    out["timestamp"] = e.timestamp;
    return out;
}

UpdateEvent event_from_json(const json& v) {
    if (!v.is_object()) throw MalformedDocument("event must be a JSON object");
    try {
        UpdateEvent e;
        e.kind = parse_event_kind(v.at("kind").get<std::string>());
        if (auto it = v.find("event_id"); it != v.end() && !it->is_null()) e.event_id = it->get<std::uint64_t>();
        e.payload = v.value("payload", json::object());
        if (!e.payload.is_object()) throw MalformedDocument("event payload must be an object");
        e.author = v.value("author", std::string{});
        e.base_version = v.value("base_version", std::uint64_t{0});
        e.timestamp = v.value("timestamp", std::int64_t{0});
        return e;
    } catch (const json::exception& ex) {
        throw MalformedDocument(std::string("bad event: ") + ex.what());
    }
}

UpdateEvent resolve_event(const IRModel& model, UpdateEvent event) {
    if (event.kind != EventKind::LayerAdd) return event;
    IRLayer layer = layer_of(event.payload);
    json& jl = event.payload["layer"];
    if (layer.id.empty()) {
        layer.id = make_layer(model, layer.type).id;
        jl["id"] = layer.id;
    }
    if (!event.payload.contains("connections") || event.payload["connections"].is_null()) {
        json conns = json::array();
        if (auto deepest = deepest_layer(model)) {
            if (!catalog_lookup(model.at(*deepest).type).src_endpoints.empty() && !layer.spec().trg_endpoints.empty())
                conns.push_back(json::array({*deepest, layer.id}));
        }
        event.payload["connections"] = std::move(conns);
    }
    return event;
}

IRModel apply_event(IRModel model, const UpdateEvent& e) {
    const json& p = e.payload;
    if (!p.is_object()) throw SchemaViolation("event payload must be an object");
    switch (e.kind) {
        case EventKind::ParamUpdate:
            return apply_param_update(std::move(model), p);
        case EventKind::LayerAdd: {
            IRLayer layer = layer_of(p);
            if (layer.id.empty()) throw SchemaViolation("layer_add needs a layer id");
            model = add_layer(std::move(model), std::move(layer), std::vector<std::string>{});
            if (auto it = p.find("connections"); it != p.end() && !it->is_null()) {
                if (!it->is_array()) throw SchemaViolation("connections must be a list of [from, to]");
                for (const auto& c : *it) {
                    if (!c.is_array() || c.size() != 2 || !c[0].is_string() || !c[1].is_string())
                        throw SchemaViolation("connection must be [from, to]");
                    model.insert_connection(c[0].get<std::string>(), c[1].get<std::string>());
                }
            }
            return model;
        }
        case EventKind::LayerDelete: {
            const std::string id = text_field(p, "layer_id");
            if (!model.contains(id)) throw NotFound("layer '" + id + "' does not exist");
            return delete_layer(std::move(model), id);
        }
        case EventKind::LayerHighlight: {
            const std::string id = text_field(p, "layer_id");
            if (!model.contains(id)) throw NotFound("layer '" + id + "' does not exist");
            return model;
        }
        case EventKind::Revert: {
            auto it = p.find("model");
            if (it == p.end()) throw SchemaViolation("revert needs the restored model");
            return model_from_json(*it);
        }
    }
    return model;
}

std::string summarize(const UpdateEvent& e) {
    const json& p = e.payload;
    auto str = [&](const char* key) { return p.contains(key) && p[key].is_string() ? p[key].get<std::string>() : "?"; };
    switch (e.kind) {
        case EventKind::ParamUpdate: {
            const json value = p.contains("value") ? p["value"] : json(nullptr);
            return str("layer_id") + "." + str("key") + (value.is_null() ? " reset" : " = " + value.dump());
        }
        case EventKind::LayerAdd: {
            const json& l = p.contains("layer") ? p["layer"] : json::object();
            return "added " + l.value("id", std::string("?")) + " (" + l.value("type", std::string("?")) + ")";
        }
        case EventKind::LayerDelete:
            return "deleted " + str("layer_id");
        case EventKind::LayerHighlight:
            return "highlighted " + str("layer_id");
        case EventKind::Revert:
            return "reverted to version " + (p.contains("to_version") ? p["to_version"].dump() : std::string("?"));
    }
    return {};
}

std::optional<std::uint64_t> parameter_count(const IRModel& model) {
    try {
        return count_parameters(model, infer_shapes(model));
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace nnedit::collab
