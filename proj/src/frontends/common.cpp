#include "common.hpp"

#include <cmath>
#include <queue>
#include <unordered_map>

#include "nnedit/frontends/padding.hpp"

namespace nnedit::frontends::detail {

std::vector<const IRLayer*> topological_order(const IRModel& model) {
    const std::size_t n = model.size();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (const auto& c : model.connections()) {
        if (!model.contains(c.from) || !model.contains(c.to)) continue;
        const std::size_t from = model.position_of(c.from);
        const std::size_t to = model.position_of(c.to);
        children[from].push_back(to);
        ++indegree[to];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<const IRLayer*> order;
    order.reserve(n);
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        order.push_back(&model.layers()[u]);
        for (std::size_t v : children[u])
            if (--indegree[v] == 0) ready.push(v);
    }
    if (order.size() != n) throw CyclicGraph("model '" + model.name() + "' contains a connection cycle");
    return order;
}

void require_expressible(const IRLayer& layer, Framework target) {
    const LayerSpec& spec = layer.spec();
    if (!spec.available_in(target))
        throw UnsupportedLayer(layer.id, spec.name, to_string(target),
                               spec.name + " is only available in " +
                                   to_string(target == Framework::Caffe ? Framework::Keras : Framework::Caffe));
    for (const auto& [key, value] : layer.params) {
        const ParamSchema* schema = spec.find_param(key);
        if (!schema || schema->frameworks.contains(target)) continue;
        if (value == schema->default_value) continue;
        throw UnsupportedLayer(layer.id, spec.name, to_string(target),
                               "parameter '" + key + "' has no " + to_string(target) + " equivalent");
    }
}

IntList numeric_pads(const IRModel& model, const IRLayer& layer, const ShapeMap& shapes) {
    const std::size_t dims = layer.dimensionality();
    const std::string mode = layer.text("padding_mode");
    if (mode == "numeric") return layer.per_dim("pad", dims);
    if (mode == "valid") return IntList(dims, 0);
    const IntList kernel = layer.per_dim("kernel", dims);
    const IntList stride = layer.per_dim("stride", dims);
    if (layer.type == LayerType::Deconvolution) return resolve_transposed_same(kernel, stride);
    const auto parents = model.parents(layer.id);
    auto it = parents.empty() ? shapes.end() : shapes.find(parents.front());
    if (it == shapes.end() || it->second.dims.size() != dims + 1)
        throw MissingShape("layer '" + layer.id + "' uses 'same' padding but its input shape is unknown");
    std::span<const std::int64_t> spatial(it->second.dims.data() + 1, dims);
    return resolve_padding(PaddingMode::same(), spatial, kernel, stride);
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9e15; }

Diagnostic warning(std::string code, std::string message, std::string layer_id, std::optional<std::size_t> line,
                   std::optional<std::size_t> column) {
    return Diagnostic{Severity::Warning, std::move(code), std::move(message), std::move(layer_id), line, column};
}

}  // namespace nnedit::frontends::detail
