#include "nnedit/ir/validate.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nnedit/error.hpp"

namespace nnedit {

std::string to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace {

class Collector {
public:
    void error(std::string code, std::string message, std::string layer = {}) {
        out_.push_back({Severity::Error, std::move(code), std::move(message), std::move(layer), {}, {}});
    }
    void warning(std::string code, std::string message, std::string layer = {}) {
        out_.push_back({Severity::Warning, std::move(code), std::move(message), std::move(layer), {}, {}});
    }
    std::vector<Diagnostic> take() { return std::move(out_); }

private:
    std::vector<Diagnostic> out_;
};

void check_layer_params(const IRLayer& layer, Collector& diag) {
    const LayerSpec& spec = layer.spec();
    for (const auto& [key, value] : layer.params) {
        if (!spec.find_param(key)) {
            diag.error("unknown_param", "parameter '" + key + "' is not defined for " + spec.name, layer.id);
            continue;
        }
        try {
            check_param(layer, key, value);
        } catch (const SchemaViolation& e) {
            const std::string msg = e.what();
            const bool range = msg.find("out of range") != std::string::npos;
            diag.error(range ? "param_out_of_range" : "param_type", msg, layer.id);
        }
    }
    for (const auto& schema : spec.params) {
        if (!schema.required) continue;
        auto it = layer.params.find(schema.key);
        const bool missing = it == layer.params.end() ||
                             (schema.is_list() && std::holds_alternative<IntList>(it->second) &&
                              std::get<IntList>(it->second).empty()) ||
                             (schema.kind == ParamKind::Text &&
                              std::holds_alternative<std::string>(it->second) &&
                              std::get<std::string>(it->second).empty());
        if (missing)
            diag.error("missing_required", "required parameter '" + schema.key + "' is not set", layer.id);
    }
    if (layer.type == LayerType::Pooling) {
        const ParamValue global = layer.param("global_pooling");
        const ParamValue kernel = layer.param("kernel");
        const bool no_kernel = std::holds_alternative<IntList>(kernel) && std::get<IntList>(kernel).empty();
        if (global == ParamValue{false} && no_kernel)
            diag.error("missing_required", "pooling needs a kernel size unless global_pooling is set", layer.id);
    }
    // per-dimension lists must agree: length 1 (broadcast) or the layer's dimensionality
    std::size_t dims = 0;
    for (const auto& schema : spec.params) {
        if (!schema.per_dimension) continue;
        auto it = layer.params.find(schema.key);
        if (it == layer.params.end()) continue;
        const auto* l = std::get_if<IntList>(&it->second);
        if (!l || l->size() <= 1) continue;
        if (dims == 0) {
            dims = l->size();
        } else if (l->size() != dims) {
            diag.error("dimension_mismatch",
                       "parameter '" + schema.key + "' has " + std::to_string(l->size()) +
                           " entries but the layer is " + std::to_string(dims) + "-D",
                       layer.id);
        }
    }
}

bool has_cycle(const IRModel& model) {
    std::unordered_map<std::string, std::size_t> indegree;
    std::unordered_map<std::string, std::vector<std::string>> children;
    for (const auto& l : model.layers()) indegree[l.id] = 0;
    for (const auto& c : model.connections()) {
        if (!indegree.count(c.from) || !indegree.count(c.to)) continue;
        ++indegree[c.to];
        children[c.from].push_back(c.to);
    }
    std::vector<std::string> ready;
    for (const auto& l : model.layers())
        if (indegree[l.id] == 0) ready.push_back(l.id);
    std::size_t seen = 0;
    while (!ready.empty()) {
        std::string u = std::move(ready.back());
        ready.pop_back();
        ++seen;
        for (const auto& v : children[u])
            if (--indegree[v] == 0) ready.push_back(v);
    }
    return seen != model.size();
}

}  // namespace

std::vector<Diagnostic> validate(const IRModel& model) {
    Collector diag;
    if (model.empty()) return diag.take();

    std::set<std::pair<std::string, std::string>> seen;
    std::unordered_map<std::string, std::size_t> in_degree;
    std::unordered_map<std::string, std::size_t> out_degree;
    for (const auto& c : model.connections()) {
        const bool from_ok = model.contains(c.from);
        const bool to_ok = model.contains(c.to);
        if (!from_ok || !to_ok) {
            const std::string& missing = from_ok ? c.to : c.from;
            diag.error("dangling_connection",
                       "connection " + c.from + " -> " + c.to + " references missing layer '" + missing + "'",
                       from_ok ? c.from : (to_ok ? c.to : std::string{}));
            continue;
        }
        if (!seen.emplace(c.from, c.to).second) {
            diag.error("duplicate_connection", "connection " + c.from + " -> " + c.to + " is repeated", c.to);
            continue;
        }
        ++in_degree[c.to];
        ++out_degree[c.from];
    }

    const bool has_source = std::any_of(model.layers().begin(), model.layers().end(),
                                        [&](const IRLayer& l) { return in_degree[l.id] == 0; });
    if (!has_source) diag.error("no_source", "every layer has an incoming connection; the model has no input");
    if (has_cycle(model)) diag.warning("cycle", "the model contains a connection cycle");

    for (const auto& layer : model.layers()) {
        const LayerSpec& spec = layer.spec();
        if (spec.trg_endpoints.empty() && in_degree[layer.id] > 0)
            diag.error("endpoint", spec.name + " layers accept no incoming connections", layer.id);
        if (spec.src_endpoints.empty() && out_degree[layer.id] > 0)
            diag.error("endpoint", spec.name + " layers cannot feed other layers", layer.id);
        check_layer_params(layer, diag);
    }
    return diag.take();
}

}  // namespace nnedit
