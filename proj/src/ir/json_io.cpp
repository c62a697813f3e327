#include "nnedit/ir/json_io.hpp"

#include "nnedit/error.hpp"

namespace nnedit {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json param_to_json(const ParamValue& value) {
    return std::visit([](const auto& v) { return ordered_json(v); }, value);
}

ParamValue param_from_json(const json& value) {
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) return value.get<std::string>();
    if (value.is_array()) {
        IntList out;
        for (const auto& item : value) {
            if (!item.is_number_integer()) throw MalformedDocument("integer list holds a non-integer");
            out.push_back(item.get<std::int64_t>());
        }
        return out;
    }
    throw MalformedDocument("unsupported parameter value " + value.dump());
}

ordered_json layer_to_json(const IRLayer& layer) {
    ordered_json out;
    out["id"] = layer.id;
    out["type"] = to_string(layer.type);
    ordered_json params = ordered_json::object();
    for (const auto& [key, value] : layer.params) params[key] = param_to_json(value);
    out["params"] = std::move(params);
    out["position"] = layer.position_hint ? ordered_json::array({layer.position_hint->x, layer.position_hint->y})
                                          : ordered_json(nullptr);
    if (!layer.display_name.empty() && layer.display_name != layer.id) out["display_name"] = layer.display_name;
    return out;
}

IRLayer layer_from_json(const json& value) {
    try {
        IRLayer layer;
        layer.id = value.at("id").get<std::string>();
        layer.type = parse_layer_type(value.at("type").get<std::string>());
        if (auto it = value.find("params"); it != value.end() && !it->is_null())
            for (const auto& [key, v] : it->items()) layer.params.emplace(key, param_from_json(v));
        if (auto it = value.find("position"); it != value.end() && it->is_array() && it->size() == 2)
            layer.position_hint = Position{(*it)[0].get<double>(), (*it)[1].get<double>()};
        if (auto it = value.find("display_name"); it != value.end() && it->is_string())
            layer.display_name = it->get<std::string>();
        if (layer.display_name.empty()) layer.display_name = layer.id;
        return layer;
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("bad layer entry: ") + e.what());
    }
}

ordered_json model_to_json(const IRModel& model) {
    ordered_json out;
    out["format_version"] = kIrFormatVersion;
    out["name"] = model.name();
    ordered_json layers = ordered_json::array();
    for (const auto& layer : model.layers()) layers.push_back(layer_to_json(layer));
    out["layers"] = std::move(layers);
    ordered_json connections = ordered_json::array();
    for (const auto& c : model.connections()) connections.push_back(ordered_json::array({c.from, c.to}));
    out["connections"] = std::move(connections);
    return out;
}

std::string to_canonical_json(const IRModel& model) { return model_to_json(model).dump(); }

IRModel model_from_json(const json& value) {
    try {
        if (!value.is_object()) throw MalformedDocument("IR document must be a JSON object");
        if (auto v = value.find("format_version"); v != value.end() && v->get<int>() != kIrFormatVersion)
            throw MalformedDocument("unsupported IR format_version " + v->dump());
        IRModel model(value.value("name", std::string{}));
        for (const auto& layer : value.at("layers")) model.insert_layer(layer_from_json(layer));
        for (const auto& c : value.at("connections")) {
            if (!c.is_array() || c.size() != 2) throw MalformedDocument("connection must be [from, to]");
            model.insert_connection_unchecked(c[0].get<std::string>(), c[1].get<std::string>());
        }
        return model;
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("bad IR document: ") + e.what());
    }
}

IRModel parse_model_json(std::string_view text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw MalformedDocument("IR document is not valid JSON");
    return model_from_json(doc);
}

bool looks_like_ir_json(std::string_view text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return false;
    return doc.contains("format_version") ||
           (doc.contains("layers") && doc.contains("connections") && !doc.contains("class_name"));
}

ordered_json diagnostic_to_json(const Diagnostic& d) {
    ordered_json o;
    o["severity"] = to_string(d.severity);
    o["code"] = d.code;
    o["message"] = d.message;
    o["layer_id"] = d.layer_id.empty() ? ordered_json(nullptr) : ordered_json(d.layer_id);
    o["line"] = d.line ? ordered_json(*d.line) : ordered_json(nullptr);
    o["column"] = d.column ? ordered_json(*d.column) : ordered_json(nullptr);
    return o;
}

}  // namespace nnedit
