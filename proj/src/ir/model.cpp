#include "nnedit/ir/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "nnedit/error.hpp"

namespace nnedit {

namespace {

const ParamSchema& schema_for(const IRLayer& layer, const std::string& key) {
    const ParamSchema* p = layer.spec().find_param(key);
    if (!p)
        throw SchemaViolation("layer '" + layer.id + "' (" + to_string(layer.type) +
                              ") has no parameter '" + key + "'");
    return *p;
}

IntList broadcast(const IntList& values, std::size_t dims) {
    if (values.size() == 1 && dims > 1) return IntList(dims, values.front());
    return values;
}

}  // namespace

ParamValue IRLayer::param(const std::string& key) const {
    const ParamSchema& schema = schema_for(*this, key);
    auto it = params.find(key);
    return it != params.end() ? it->second : schema.default_value;
}

double IRLayer::number(const std::string& key) const {
    auto v = param(key);
    if (auto* d = std::get_if<double>(&v)) return *d;
    throw SchemaViolation("parameter '" + key + "' of layer '" + id + "' is not a number");
}

bool IRLayer::flag(const std::string& key) const {
    auto v = param(key);
    if (auto* b = std::get_if<bool>(&v)) return *b;
    throw SchemaViolation("parameter '" + key + "' of layer '" + id + "' is not a checkbox");
}

std::string IRLayer::text(const std::string& key) const {
    auto v = param(key);
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    throw SchemaViolation("parameter '" + key + "' of layer '" + id + "' is not text");
}

IntList IRLayer::int_list(const std::string& key) const {
    auto v = param(key);
    if (auto* l = std::get_if<IntList>(&v)) return *l;
    throw SchemaViolation("parameter '" + key + "' of layer '" + id + "' is not an integer list");
}

IntList IRLayer::per_dim(const std::string& key, std::size_t dims) const {
    return broadcast(int_list(key), dims);
}

std::size_t IRLayer::dimensionality() const {
    if (auto it = params.find("kernel"); it != params.end())
        if (auto* l = std::get_if<IntList>(&it->second); l && !l->empty()) return l->size();
    std::size_t dims = 0;
    for (const auto& schema : spec().params) {
        if (!schema.per_dimension) continue;
        auto it = params.find(schema.key);
        if (it == params.end()) continue;
        if (auto* l = std::get_if<IntList>(&it->second)) dims = std::max(dims, l->size());
    }
    return dims > 1 ? dims : 2;
}

// ---------------------------------------------------------------------------

const IRLayer* IRModel::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &layers_[it->second];
}

IRLayer* IRModel::find(const std::string& id) {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &layers_[it->second];
}

const IRLayer& IRModel::at(const std::string& id) const {
    if (const IRLayer* l = find(id)) return *l;
    throw NotFound("layer '" + id + "' does not exist");
}

IRLayer& IRModel::at(const std::string& id) {
    if (IRLayer* l = find(id)) return *l;
    throw NotFound("layer '" + id + "' does not exist");
}

std::size_t IRModel::position_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw NotFound("layer '" + id + "' does not exist");
    return it->second;
}

bool IRModel::has_connection(const std::string& from, const std::string& to) const {
    return std::any_of(connections_.begin(), connections_.end(),
                       [&](const Connection& c) { return c.from == from && c.to == to; });
}

std::vector<std::string> IRModel::parents(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& c : connections_)
        if (c.to == id) out.push_back(c.from);
    return out;
}

std::vector<std::string> IRModel::children(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& c : connections_)
        if (c.from == id) out.push_back(c.to);
    return out;
}

void IRModel::insert_layer(IRLayer layer) {
    if (layer.id.empty()) throw SchemaViolation("layer id must not be empty");
    if (contains(layer.id)) throw SchemaViolation("duplicate layer id '" + layer.id + "'");
    if (layer.display_name.empty()) layer.display_name = layer.id;
    index_.emplace(layer.id, layers_.size());
    layers_.push_back(std::move(layer));
}

void IRModel::insert_connection(const std::string& from, const std::string& to) {
    if (!contains(from)) throw NotFound("connection source '" + from + "' does not exist");
    if (!contains(to)) throw NotFound("connection target '" + to + "' does not exist");
    if (has_connection(from, to))
        throw DuplicateConnection("connection " + from + " -> " + to + " already exists");
    connections_.push_back({from, to});
}

void IRModel::insert_connection_unchecked(const std::string& from, const std::string& to) {
    connections_.push_back({from, to});
}

void IRModel::erase_layer(const std::string& id) {
    std::size_t pos = position_of(id);
    layers_.erase(layers_.begin() + static_cast<std::ptrdiff_t>(pos));
    std::erase_if(connections_, [&](const Connection& c) { return c.from == id || c.to == id; });
    reindex();
}

void IRModel::erase_connection(const std::string& from, const std::string& to) {
    auto it = std::find(connections_.begin(), connections_.end(), Connection{from, to});
    if (it == connections_.end())
        throw NotFound("connection " + from + " -> " + to + " does not exist");
    connections_.erase(it);
}

void IRModel::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < layers_.size(); ++i) index_.emplace(layers_[i].id, i);
}

bool IRModel::isomorphic_to(const IRModel& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    if (connections_.size() != other.connections_.size()) return false;
    for (const auto& layer : layers_) {
        const IRLayer* mine = &layer;
        const IRLayer* theirs = other.find(layer.id);
        if (!theirs || theirs->type != mine->type) return false;
        if (canonical_params(*mine) != canonical_params(*theirs)) return false;
        if (parents(layer.id) != other.parents(layer.id)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

std::map<std::string, ParamValue> canonical_params(const IRLayer& layer) {
    std::map<std::string, ParamValue> out;
    const std::size_t dims = layer.dimensionality();
    for (const auto& schema : layer.spec().params) {
        ParamValue v = layer.param(schema.key);
        if (schema.per_dimension) {
            auto& list = std::get<IntList>(v);
            if (!list.empty()) list = broadcast(list, dims);
        }
        out.emplace(schema.key, std::move(v));
    }
    return out;
}

IRLayer minimized(const IRLayer& layer) {
    IRLayer out = layer;
    const std::size_t dims = layer.dimensionality();
    for (auto it = out.params.begin(); it != out.params.end();) {
        const ParamSchema* schema = layer.spec().find_param(it->first);
        bool drop = false;
        if (schema && !schema->required) {
            if (schema->per_dimension) {
                const auto* mine = std::get_if<IntList>(&it->second);
                const auto& def = std::get<IntList>(schema->default_value);
                drop = mine && !mine->empty() && broadcast(*mine, dims) == broadcast(def, dims);
            } else {
                drop = it->second == schema->default_value;
            }
        }
        it = drop ? out.params.erase(it) : std::next(it);
    }
    return out;
}

IRLayer make_layer(const IRModel& model, LayerType type) {
    const LayerSpec& spec = catalog_lookup(type);
    IRLayer layer;
    layer.type = type;
    for (std::size_t n = 1;; ++n) {
        std::string id = spec.default_id + std::to_string(n);
        if (!model.contains(id)) {
            layer.id = id;
            break;
        }
    }
    layer.display_name = layer.id;
    return layer;
}

void check_param(const IRLayer& layer, const std::string& key, const ParamValue& value) {
    const ParamSchema& schema = schema_for(layer, key);
    if (!schema.accepts_type(value))
        throw SchemaViolation("parameter '" + key + "' of layer '" + layer.id + "' expects a " +
                              (schema.is_list() ? std::string("integer list") : to_string(schema.kind)) +
                              " value");
    if (schema.kind == ParamKind::Select) {
        const auto& s = std::get<std::string>(value);
        if (std::find(schema.options.begin(), schema.options.end(), s) == schema.options.end())
            throw SchemaViolation("parameter '" + key + "' of layer '" + layer.id +
                                  "' does not accept '" + s + "'");
    }
    auto out_of_range = [&](double x) {
        return (schema.min && x < *schema.min) || (schema.max && x > *schema.max);
    };
    if (const auto* d = std::get_if<double>(&value)) {
        if (!std::isfinite(*d) || out_of_range(*d))
            throw SchemaViolation("parameter '" + key + "' of layer '" + layer.id +
                                  "' out of range: " + to_string(value));
    }
    if (const auto* l = std::get_if<IntList>(&value)) {
        if (l->size() > 3)
            throw SchemaViolation("parameter '" + key + "' of layer '" + layer.id +
                                  "' has more than 3 entries");
        for (auto x : *l)
            if (out_of_range(static_cast<double>(x)))
                throw SchemaViolation("parameter '" + key + "' of layer '" + layer.id +
                                      "' out of range: " + to_string(value));
    }
}

// ---------------------------------------------------------------------------

std::optional<std::string> deepest_layer(const IRModel& model) {
    if (model.empty()) return std::nullopt;
    const auto& layers = model.layers();
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < layers.size(); ++i) slot.emplace(layers[i].id, i);
    std::vector<std::vector<std::size_t>> children(layers.size());
    std::vector<int> indegree(layers.size(), 0);
    for (const auto& c : model.connections()) {
        children[slot[c.from]].push_back(slot[c.to]);
        ++indegree[slot[c.to]];
    }
    std::vector<long> depth(layers.size(), -1);
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (indegree[i] == 0) {
            depth[i] = 0;
            ready.push_back(i);
        }
    while (!ready.empty()) {
        std::size_t u = ready.front();
        ready.pop_front();
        for (std::size_t v : children[u]) {
            depth[v] = std::max(depth[v], depth[u] + 1);
            if (--indegree[v] == 0) ready.push_back(v);
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < layers.size(); ++i)
        if (depth[i] > depth[best]) best = i;
    return layers[best].id;
}

IRModel add_layer(IRModel model, IRLayer layer, std::optional<std::vector<std::string>> parents) {
    for (const auto& [key, value] : layer.params) check_param(layer, key, value);
    std::vector<std::string> attach;
    if (parents) {
        attach = *parents;
    } else if (auto deepest = deepest_layer(model)) {
        if (!catalog_lookup(model.at(*deepest).type).src_endpoints.empty() &&
            !layer.spec().trg_endpoints.empty())
            attach.push_back(*deepest);
    }
    for (const auto& p : attach)
        if (!model.contains(p)) throw NotFound("layer '" + p + "' does not exist");
    std::string id = layer.id;
    model.insert_layer(std::move(layer));
    for (const auto& p : attach) model.insert_connection(p, id);
    return model;
}

IRModel delete_layer(IRModel model, const std::string& id) {
    model.erase_layer(id);
    return model;
}

IRModel update_param(IRModel model, const std::string& id, const std::string& key, ParamValue value) {
    IRLayer& layer = model.at(id);
    check_param(layer, key, value);
    layer.params[key] = std::move(value);
    return model;
}

IRModel reset_param(IRModel model, const std::string& id, const std::string& key) {
    IRLayer& layer = model.at(id);
    schema_for(layer, key);
    layer.params.erase(key);
    return model;
}

IRModel connect(IRModel model, const std::string& from, const std::string& to) {
    model.insert_connection(from, to);
    return model;
}

IRModel disconnect(IRModel model, const std::string& from, const std::string& to) {
    model.erase_connection(from, to);
    return model;
}

}  // namespace nnedit
