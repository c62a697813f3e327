#include <algorithm>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "common.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/frontends/name_map.hpp"
#include "nnedit/frontends/padding.hpp"

namespace nnedit::frontends {

using nlohmann::json;
using nlohmann::ordered_json;
using detail::warning;

namespace {

const NameMap& keras_names() { return NameMap::get(Framework::Keras); }

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }
bool contains(std::string_view s, std::string_view part) { return s.find(part) != std::string_view::npos; }

/// Spatial rank encoded in a Keras class name ("Conv3D" -> 3).
std::size_t class_dims(std::string_view cls) {
    if (contains(cls, "1D")) return 1;
    if (contains(cls, "3D")) return 3;
    return 2;
}

/// Channels-last (Keras) <-> channels-first (IR) for shapes without batch.
IntList to_channels_first(IntList dims) {
    if (dims.size() >= 2) std::rotate(dims.begin(), dims.end() - 1, dims.end());
    return dims;
}

IntList to_channels_last(IntList dims) {
    if (dims.size() >= 2) std::rotate(dims.begin(), dims.begin() + 1, dims.end());
    return dims;
}

// ---------------------------------------------------------------------------
// import

struct RawNode {
    std::string name;
    std::string cls;
    json config;
    std::vector<std::string> inbound;
    IntList extra_pad;      // folded ZeroPadding / Cropping amounts
    bool removed = false;
};

void collect_history(const json& v, std::vector<std::string>& out) {
    if (v.is_object()) {
        if (auto it = v.find("keras_history"); it != v.end() && it->is_array() && !it->empty()) {
            out.push_back(it->at(0).get<std::string>());
            return;
        }
        for (const auto& [k, item] : v.items()) collect_history(item, out);
    } else if (v.is_array()) {
        for (const auto& item : v) collect_history(item, out);
    }
}

std::vector<std::string> parse_inbound(const json& layer, std::vector<Diagnostic>& warnings,
                                       const std::string& name) {
    std::vector<std::string> out;
    auto it = layer.find("inbound_nodes");
    if (it == layer.end() || it->is_null() || it->empty()) return out;
    if (!it->is_array()) throw MalformedDocument("inbound_nodes of '" + name + "' must be a list");
    if (it->size() > 1)
        warnings.push_back(warning("shared_layer", "layer is called more than once; only its first call is kept", name));
    const json& node = it->at(0);
    if (node.is_array()) {
        // Keras 2: [[name, node_index, tensor_index, kwargs], ...]
        for (const auto& ref : node) {
            if (!ref.is_array() || ref.empty() || !ref[0].is_string())
                throw MalformedDocument("malformed inbound node reference in '" + name + "'");
            out.push_back(ref[0].get<std::string>());
        }
    } else if (node.is_object()) {
        collect_history(node.value("args", json::array()), out);
    } else {
        throw MalformedDocument("malformed inbound_nodes in '" + name + "'");
    }
    return out;
}

IntList int_tuple(const json& v, std::size_t dims, const std::string& what) {
    if (v.is_number_integer()) return IntList(dims, v.get<std::int64_t>());
    if (v.is_array()) {
        IntList out;
        for (const auto& item : v) {
            if (!item.is_number_integer()) throw MalformedDocument("'" + what + "' must hold integers");
            out.push_back(item.get<std::int64_t>());
        }
        if (out.size() == 1 && dims > 1) out.assign(dims, out.front());
        return out;
    }
    throw MalformedDocument("'" + what + "' must be an integer or a list of integers");
}

/// ZeroPadding / Cropping amounts as symmetric per-dim values.
IntList symmetric_amounts(const json& v, std::size_t dims, const std::string& layer) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    if (v.is_number_integer()) {
        pairs.assign(dims, {v.get<std::int64_t>(), v.get<std::int64_t>()});
    } else if (v.is_array() && dims == 1 && v.size() == 2 && v[0].is_number_integer()) {
        pairs.push_back({v[0].get<std::int64_t>(), v[1].get<std::int64_t>()});
    } else if (v.is_array() && v.size() == dims) {
        for (const auto& item : v) {
            if (item.is_number_integer()) {
                pairs.push_back({item.get<std::int64_t>(), item.get<std::int64_t>()});
            } else if (item.is_array() && item.size() == 2) {
                pairs.push_back({item[0].get<std::int64_t>(), item[1].get<std::int64_t>()});
            } else {
                throw MalformedDocument("malformed padding amounts in '" + layer + "'");
            }
        }
    } else {
        throw MalformedDocument("malformed padding amounts in '" + layer + "'");
    }
    IntList out;
    for (const auto& [a, b] : pairs) {
        if (a != b)
            throw AsymmetricPadding("layer '" + layer + "' pads " + std::to_string(a) + " and " + std::to_string(b) +
                                    " on opposite sides; only symmetric padding is representable");
        out.push_back(a);
    }
    return out;
}

bool is_windowed(std::string_view cls) {
    return starts_with(cls, "Conv") || starts_with(cls, "Convolution") || starts_with(cls, "Deconvolution") ||
           starts_with(cls, "MaxPooling") || starts_with(cls, "AveragePooling");
}

bool is_transposed(std::string_view cls) { return contains(cls, "Transpose") || starts_with(cls, "Deconvolution"); }

class KerasImporter {
public:
    ImportResult run(std::string_view text) {
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded()) throw MalformedDocument("Keras model is not valid JSON");
        try {
            read_document(doc);
            fold_helpers();
            build_model();
            resolve_concat_axes();
            resolve_same_padding();
        } catch (const json::exception& e) {
            throw MalformedDocument(std::string("malformed Keras model: ") + e.what());
        }
        return std::move(result_);
    }

private:
    void read_document(const json& doc) {
        if (!doc.is_object()) throw MalformedDocument("Keras model must be a JSON object");
        const std::string cls = doc.value("class_name", std::string{});
        if (cls != "Model" && cls != "Functional" && cls != "Sequential")
            throw MalformedDocument("unsupported Keras model class '" + cls + "'");
        auto cfg = doc.find("config");
        if (cfg == doc.end()) throw MalformedDocument("Keras model has no 'config'");
        const json* layers = nullptr;
        if (cfg->is_array()) {
            layers = &*cfg;
        } else if (cfg->is_object() && cfg->contains("layers")) {
            layers = &cfg->at("layers");
            result_.model.set_name(cfg->value("name", std::string{}));
        }
        if (!layers || !layers->is_array()) throw MalformedDocument("Keras model config has no 'layers' list");

        const bool sequential = cls == "Sequential";
        for (const auto& layer : *layers) {
            RawNode node;
            node.cls = layer.at("class_name").get<std::string>();
            node.config = layer.value("config", json::object());
            node.name = node.config.value("name", layer.value("name", std::string{}));
            if (node.name.empty()) throw MalformedDocument("Keras layer without a name");
            if (index_.count(node.name)) throw MalformedDocument("duplicate Keras layer name '" + node.name + "'");
            if (sequential) {
                if (nodes_.empty() && node.cls != "InputLayer") {
                    if (auto shape = input_shape_of(node.config)) add_synthetic_input(node.name + "_input", *shape);
                }
                if (!nodes_.empty()) node.inbound = {nodes_.back().name};
            } else {
                node.inbound = parse_inbound(layer, result_.warnings, node.name);
            }
            index_[node.name] = nodes_.size();
            nodes_.push_back(std::move(node));
        }
    }

    static std::optional<json> input_shape_of(const json& config) {
        for (const char* key : {"batch_input_shape", "batch_shape"})
            if (auto it = config.find(key); it != config.end() && it->is_array()) return *it;
        return std::nullopt;
    }

    void add_synthetic_input(const std::string& name, const json& shape) {
        RawNode node;
        node.name = name;
        node.cls = "InputLayer";
        node.config = {{"name", name}, {"batch_input_shape", shape}};
        index_[name] = nodes_.size();
        nodes_.push_back(std::move(node));
    }

    std::vector<std::size_t> consumers(const std::string& name) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (!nodes_[i].removed && std::count(nodes_[i].inbound.begin(), nodes_[i].inbound.end(), name))
                out.push_back(i);
        return out;
    }

    /// Removes `node` and points its consumers at its single input.
    void bypass(RawNode& node) {
        node.removed = true;
        alias_[node.name] = node.inbound.empty() ? std::string{} : node.inbound.front();
    }

    void fold_helpers() {
        for (auto& node : nodes_) {
            const std::string& cls = node.cls;
            if (starts_with(cls, "ZeroPadding")) {
                const std::size_t dims = class_dims(cls);
                const IntList pads = symmetric_amounts(node.config.at("padding"), dims, node.name);
                const auto users = consumers(node.name);
                const bool foldable = node.inbound.size() == 1 && !users.empty() &&
                                      std::all_of(users.begin(), users.end(), [&](std::size_t i) {
                                          const RawNode& u = nodes_[i];
                                          return is_windowed(u.cls) && !is_transposed(u.cls) &&
                                                 class_dims(u.cls) == dims && u.extra_pad.empty() &&
                                                 u.config.value("padding", std::string("valid")) == "valid";
                                      });
                if (!foldable)
                    throw UnknownLayerType("'" + node.name + "' (" + cls +
                                           ") must feed only valid-padded convolution or pooling layers");
                for (std::size_t i : users) nodes_[i].extra_pad = pads;
                bypass(node);
            } else if (starts_with(cls, "Cropping")) {
                const std::size_t dims = class_dims(cls);
                const IntList crop = symmetric_amounts(node.config.at("cropping"), dims, node.name);
                RawNode* source = node.inbound.size() == 1 && index_.count(node.inbound[0])
                                      ? &nodes_[index_.at(node.inbound[0])]
                                      : nullptr;
                const bool foldable = source && is_transposed(source->cls) && class_dims(source->cls) == dims &&
                                      source->config.value("padding", std::string("valid")) == "valid" &&
                                      consumers(source->name).size() == 1;
                if (!foldable)
                    throw UnknownLayerType("'" + node.name + "' (" + cls +
                                           ") is only supported directly after a valid transposed convolution");
                source->extra_pad = crop;
                bypass(node);
            } else if (cls == "Activation" && node.config.value("activation", std::string("linear")) == "linear") {
                bypass(node);
            } else if (cls == "Flatten" && node.inbound.size() == 1) {
                // exporter-inserted flatten in front of a Dense named "<dense>_flatten"
                const auto users = consumers(node.name);
                if (users.size() == 1 && nodes_[users[0]].cls == "Dense" &&
                    node.name == nodes_[users[0]].name + "_flatten")
                    bypass(node);
            }
        }
    }

    /// Keras node name -> IR id producing its output.
    std::string producer(std::string name) const {
        for (std::size_t guard = 0; guard <= nodes_.size(); ++guard) {
            if (auto it = output_of_.find(name); it != output_of_.end()) return it->second;
            auto alias = alias_.find(name);
            if (alias == alias_.end()) break;
            name = alias->second;
        }
        return {};
    }

    void build_model() {
        std::vector<std::pair<std::string, std::vector<std::string>>> wiring;
        for (const auto& node : nodes_) {
            if (node.removed) continue;
            IRLayer layer = convert(node);
            const std::string id = layer.id;
            result_.model.insert_layer(std::move(layer));
            output_of_[node.name] = id;
            wiring.emplace_back(id, node.inbound);

            // inline activation becomes its own layer
            const std::string act = node.config.value("activation", std::string("linear"));
            const bool splits = node.cls == "Dense" || (is_windowed(node.cls) && starts_with(node.cls, "Conv"));
            if (splits && act != "linear") {
                IRLayer a;
                a.type = activation_type(act, node.name);
                a.id = unique_id(node.name + "_" + act);
                a.display_name = a.id;
                const std::string act_id = a.id;
                result_.model.insert_layer(std::move(a));
                result_.model.insert_connection(id, act_id);
                output_of_[node.name] = act_id;
            }
        }
        for (const auto& [id, inbound] : wiring) {
            for (const auto& name : inbound) {
                const std::string from = producer(name);
                if (from.empty()) {
                    result_.warnings.push_back(warning("unknown_input", "inbound layer '" + name + "' not found", id));
                    continue;
                }
                if (result_.model.has_connection(from, id)) {
                    result_.warnings.push_back(
                        warning("duplicate_connection", "repeated input " + from + " -> " + id + " dropped", id));
                    continue;
                }
                result_.model.insert_connection(from, id);
            }
        }
    }

    std::string unique_id(const std::string& base) {
        std::string id = base;
        for (int n = 1; result_.model.contains(id) || index_.count(id); ++n)
            id = base + "_" + std::to_string(n);
        return id;
    }

    static LayerType activation_type(const std::string& act, const std::string& layer) {
        if (act == "relu") return LayerType::ReLU;
        if (act == "sigmoid") return LayerType::Sigmoid;
        if (act == "tanh") return LayerType::Tanh;
        if (act == "softmax") return LayerType::Softmax;
        throw UnknownLayerType("activation '" + act + "' of layer '" + layer + "' has no IR equivalent");
    }

    IRLayer convert(const RawNode& node) {
        const json& cfg = node.config;
        const std::string& cls = node.cls;
        IRLayer layer;
        layer.id = node.name;
        layer.display_name = node.name;

        const LayerName* row = keras_names().by_name(cls);
        if (cls == "Activation") {
            layer.type = activation_type(cfg.value("activation", std::string("linear")), node.name);
            return layer;
        }
        if (!row) throw UnknownLayerType("unknown Keras layer class '" + cls + "' (layer '" + node.name + "')");
        layer.type = row->type;
        const LayerSpec& spec = layer.spec();
        const std::size_t dims = class_dims(cls);

        for (const auto& [ir_key, keras_key] : row->params) {
            auto it = cfg.find(keras_key);
            if (it == cfg.end() || it->is_null()) continue;
            const ParamSchema& schema = *spec.find_param(ir_key);
            if (schema.per_dimension) {
                layer.params[ir_key] = int_tuple(*it, dims, keras_key);
            } else if (schema.int_list) {
                continue;  // shapes handled below
            } else if (schema.kind == ParamKind::Checkbox) {
                layer.params[ir_key] = it->get<bool>();
            } else {
                layer.params[ir_key] = it->get<double>();
            }
        }

        switch (layer.type) {
            case LayerType::Input: {
                if (auto shape = input_shape_of(cfg)) {
                    IntList dims_ir;
                    bool known = shape->size() >= 2;
                    for (std::size_t i = 1; i < shape->size(); ++i) {
                        if (!(*shape)[i].is_number_integer()) {
                            known = false;
                            break;
                        }
                        dims_ir.push_back((*shape)[i].get<std::int64_t>());
                    }
                    if (known) layer.params["shape"] = to_channels_first(dims_ir);
                    else result_.warnings.push_back(warning("unknown_shape", "input shape is not fully specified",
                                                            layer.id));
                }
                break;
            }
            case LayerType::Convolution:
            case LayerType::Deconvolution:
                windowed_padding(layer, node, dims);
                break;
            case LayerType::Pooling: {
                layer.params["pool"] = std::string(contains(cls, "Average") ? "AVE" : "MAX");
                if (starts_with(cls, "Global")) {
                    layer.params["global_pooling"] = true;
                    layer.params.erase("kernel");
                    layer.params.erase("stride");
                    break;
                }
                if (!layer.params.count("kernel")) layer.params["kernel"] = IntList(dims, 2);
                if (!layer.params.count("stride")) layer.params["stride"] = layer.params["kernel"];
                windowed_padding(layer, node, dims);
                break;
            }
            case LayerType::BatchNorm:
                if (!cfg.contains("epsilon")) layer.params["eps"] = 1e-3;
                if (!cfg.contains("momentum")) layer.params["momentum"] = 0.99;
                if (auto axis = cfg.find("axis"); axis != cfg.end() && axis->is_number_integer() &&
                                                  axis->get<int>() != -1 && axis->get<int>() != 3)
                    result_.warnings.push_back(warning("unsupported_axis", "BatchNormalization axis " + axis->dump() +
                                                                               " treated as the channel axis",
                                                       layer.id));
                break;
            case LayerType::Concat: {
                const int axis = cfg.value("axis", -1);
                if (axis == -1) {
                    layer.params["axis"] = 1.0;
                } else {
                    layer.params["axis"] = static_cast<double>(axis + 1);
                    pending_axis_[layer.id] = axis;
                }
                break;
            }
            case LayerType::Eltwise:
                layer.params["operation"] = std::string(cls == "Multiply" ? "PROD" : cls == "Maximum" ? "MAX" : "SUM");
                break;
            case LayerType::Reshape:
                layer.params["shape"] = to_channels_first(int_tuple(cfg.at("target_shape"), 1, "target_shape"));
                break;
            case LayerType::ReLU:
                if (cfg.value("negative_slope", 0.0) != 0.0 || (cfg.contains("max_value") && !cfg["max_value"].is_null()))
                    result_.warnings.push_back(warning("unmapped_field", "ReLU slope/cap settings are ignored", layer.id));
                break;
            default:
                break;
        }
        if (cfg.value("data_format", std::string("channels_last")) == "channels_first")
            result_.warnings.push_back(
                warning("data_format", "channels_first data is read as channels_last", layer.id));
        if (auto d = cfg.find("dilation_rate"); d != cfg.end()) {
            const IntList rate = int_tuple(*d, dims, "dilation_rate");
            if (std::any_of(rate.begin(), rate.end(), [](auto r) { return r != 1; }))
                result_.warnings.push_back(warning("unmapped_field", "dilation is not supported and was dropped",
                                                   layer.id));
        }
        return layer;
    }

    void windowed_padding(IRLayer& layer, const RawNode& node, std::size_t dims) {
        const std::string padding = node.config.value("padding", std::string("valid"));
        if (padding == "valid") {
            layer.params["pad"] = node.extra_pad.empty() ? IntList(dims, 0) : node.extra_pad;
        } else if (padding == "same") {
            if (layer.type == LayerType::Deconvolution) {
                layer.params["pad"] = resolve_transposed_same(layer.per_dim("kernel", dims), layer.per_dim("stride", dims));
            } else {
                layer.params["padding_mode"] = std::string("same");
            }
        } else {
            throw MalformedDocument("padding '" + padding + "' of layer '" + layer.id + "' is not supported");
        }
    }

    void resolve_concat_axes() {
        while (!pending_axis_.empty()) {
            const ShapeMap shapes = infer_shapes_partial(result_.model);
            bool progress = false;
            for (auto it = pending_axis_.begin(); it != pending_axis_.end();) {
                const auto parents = result_.model.parents(it->first);
                auto shape = parents.empty() ? shapes.end() : shapes.find(parents.front());
                if (shape == shapes.end()) {
                    ++it;
                    continue;
                }
                const int rank = static_cast<int>(shape->second.dims.size());
                int axis = it->second < 0 ? it->second + rank + 1 : it->second;
                axis = axis == rank ? 1 : axis + 1;
                result_.model.at(it->first).params["axis"] = static_cast<double>(axis);
                it = pending_axis_.erase(it);
                progress = true;
            }
            if (!progress) break;
        }
        for (const auto& [id, axis] : pending_axis_)
            result_.warnings.push_back(warning("unresolved_axis",
                                               "concat axis " + std::to_string(axis) +
                                                   " read as a spatial axis; input shape unknown",
                                               id));
    }

    void resolve_same_padding() {
        std::vector<std::string> todo;
        for (const auto& layer : result_.model.layers())
            if (layer.params.count("padding_mode")) todo.push_back(layer.id);
        if (todo.empty()) return;
        const ShapeMap shapes = infer_shapes_partial(result_.model);
        for (const auto& id : todo) {
            IRLayer& layer = result_.model.at(id);
            IntList pads;
            try {
                pads = detail::numeric_pads(result_.model, layer, shapes);
            } catch (const MissingShape&) {
                result_.warnings.push_back(warning("unresolved_padding",
                                                   "'same' padding kept symbolic; input shape unknown", id));
                continue;
            }
            layer.params["pad"] = pads;
            layer.params.erase("padding_mode");
        }
    }

    std::vector<RawNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::string> alias_;
    std::unordered_map<std::string, std::string> output_of_;
    std::map<std::string, int> pending_axis_;
    ImportResult result_;
};

// ---------------------------------------------------------------------------
// export

ordered_json int_array(const IntList& values) {
    ordered_json out = ordered_json::array();
    for (auto v : values) out.push_back(v);
    return out;
}

ordered_json amounts(const IntList& pads) {
    if (pads.size() == 1) return ordered_json::array({pads[0], pads[0]});
    ordered_json out = ordered_json::array();
    for (auto p : pads) out.push_back(ordered_json::array({p, p}));
    return out;
}

ordered_json number(double v) {
    if (detail::is_integral(v)) return static_cast<std::int64_t>(v);
    return v;
}

std::string dims_suffix(std::size_t dims) { return std::to_string(dims) + "D"; }

class KerasExporter {
public:
    KerasExporter(const IRModel& model, const ExportOptions& options)
        : model_(model), options_(options), shapes_(infer_shapes_partial(model, options.input_shapes)) {
        for (const auto& l : model.layers()) used_.insert(l.id);
    }

    std::string run() {
        for (const IRLayer* layer : detail::topological_order(model_)) export_layer(*layer);

        ordered_json inputs = ordered_json::array();
        ordered_json outputs = ordered_json::array();
        for (const auto& l : model_.layers()) {
            if (model_.parents(l.id).empty()) inputs.push_back(ordered_json::array({l.id, 0, 0}));
            if (model_.children(l.id).empty()) outputs.push_back(ordered_json::array({output_of_.at(l.id), 0, 0}));
        }
        ordered_json config;
        config["name"] = model_.name().empty() ? std::string("model") : model_.name();
        config["layers"] = std::move(layers_);
        config["input_layers"] = std::move(inputs);
        config["output_layers"] = std::move(outputs);
        ordered_json doc;
        doc["class_name"] = "Model";
        doc["config"] = std::move(config);
        doc["keras_version"] = "2.2.4";
        doc["backend"] = "tensorflow";
        return doc.dump(2) + "\n";
    }

private:
    std::string fresh(const std::string& base) {
        std::string name = base;
        for (int n = 1; used_.count(name); ++n) name = base + "_" + std::to_string(n);
        used_.insert(name);
        return name;
    }

    void emit(const std::string& cls, const std::string& name, ordered_json config,
              const std::vector<std::string>& inbound) {
        ordered_json cfg;
        cfg["name"] = name;
        cfg["trainable"] = true;
        for (auto& [k, v] : config.items()) cfg[k] = v;
        ordered_json refs = ordered_json::array();
        for (const auto& i : inbound) refs.push_back(ordered_json::array({i, 0, 0, ordered_json::object()}));
        ordered_json node;
        node["name"] = name;
        node["class_name"] = cls;
        node["config"] = std::move(cfg);
        node["inbound_nodes"] = inbound.empty() ? ordered_json::array() : ordered_json::array({std::move(refs)});
        layers_.push_back(std::move(node));
    }

    const TensorShape* shape_of(const std::string& id) const {
        auto it = shapes_.find(id);
        return it == shapes_.end() ? nullptr : &it->second;
    }

    const TensorShape* input_shape(const IRLayer& layer) const {
        const auto parents = model_.parents(layer.id);
        return parents.empty() ? nullptr : shape_of(parents.front());
    }

    void check_keras(const IRLayer& layer) {
        if (layer.type == LayerType::Python)
            throw UnsupportedLayer(layer.id, "Python", "keras",
                                   "Python layers run user code inside Caffe and cannot be ported");
        if (layer.type == LayerType::LRN) {
            if (!options_.enable_custom_layers)
                throw UnsupportedLayer(layer.id, "LRN", "keras",
                                       "Keras has no native LRN; enable the custom layer registry to emit one");
            return;
        }
        detail::require_expressible(layer, Framework::Keras);
    }

    void export_layer(const IRLayer& layer) {
        check_keras(layer);
        std::vector<std::string> inbound;
        for (const auto& p : model_.parents(layer.id)) inbound.push_back(output_of_.at(p));
        output_of_[layer.id] = layer.id;
        ordered_json cfg;
        const std::size_t dims = layer.dimensionality();

        switch (layer.type) {
            case LayerType::Input: {
                IntList shape = layer.int_list("shape");
                if (shape.empty())
                    if (const TensorShape* s = shape_of(layer.id)) shape = s->dims;
                if (shape.empty()) {
                    cfg["batch_input_shape"] = nullptr;
                } else {
                    ordered_json batch = ordered_json::array({nullptr});
                    for (auto d : to_channels_last(shape)) batch.push_back(d);
                    cfg["batch_input_shape"] = std::move(batch);
                }
                cfg["dtype"] = "float32";
                cfg["sparse"] = false;
                emit("InputLayer", layer.id, std::move(cfg), {});
                return;
            }
            case LayerType::Convolution:
            case LayerType::Deconvolution: {
                const bool transposed = layer.type == LayerType::Deconvolution;
                cfg["filters"] = number(layer.number("num_output"));
                cfg["kernel_size"] = int_array(layer.per_dim("kernel", dims));
                cfg["strides"] = int_array(layer.per_dim("stride", dims));
                std::string padding;
                IntList explicit_pad;
                choose_padding(layer, dims, padding, explicit_pad);
                cfg["padding"] = padding;
                cfg["data_format"] = "channels_last";
                cfg["dilation_rate"] = int_array(IntList(dims, 1));
                cfg["activation"] = "linear";
                cfg["use_bias"] = layer.flag("bias_term");
                const std::string cls = "Conv" + dims_suffix(dims) + (transposed ? "Transpose" : "");
                if (explicit_pad.empty()) {
                    emit(cls, layer.id, std::move(cfg), inbound);
                } else if (!transposed) {
                    const std::string pad = fresh(layer.id + "_pad");
                    emit("ZeroPadding" + dims_suffix(dims), pad,
                         {{"padding", amounts(explicit_pad)}, {"data_format", "channels_last"}}, inbound);
                    emit(cls, layer.id, std::move(cfg), {pad});
                } else {
                    emit(cls, layer.id, std::move(cfg), inbound);
                    const std::string crop = fresh(layer.id + "_crop");
                    emit("Cropping" + dims_suffix(dims), crop,
                         {{"cropping", amounts(explicit_pad)}, {"data_format", "channels_last"}}, {layer.id});
                    output_of_[layer.id] = crop;
                }
                return;
            }
            case LayerType::Pooling: {
                const std::string kind = layer.text("pool") == "AVE" ? "Average" : "Max";
                if (layer.flag("global_pooling")) {
                    emit("Global" + kind + "Pooling" + dims_suffix(dims), layer.id,
                         {{"data_format", "channels_last"}}, inbound);
                    return;
                }
                cfg["pool_size"] = int_array(layer.per_dim("kernel", dims));
                cfg["strides"] = int_array(layer.per_dim("stride", dims));
                std::string padding;
                IntList explicit_pad;
                choose_padding(layer, dims, padding, explicit_pad);
                cfg["padding"] = padding;
                cfg["data_format"] = "channels_last";
                const std::string cls = kind + "Pooling" + dims_suffix(dims);
                if (explicit_pad.empty()) {
                    emit(cls, layer.id, std::move(cfg), inbound);
                } else {
                    const std::string pad = fresh(layer.id + "_pad");
                    emit("ZeroPadding" + dims_suffix(dims), pad,
                         {{"padding", amounts(explicit_pad)}, {"data_format", "channels_last"}}, inbound);
                    emit(cls, layer.id, std::move(cfg), {pad});
                }
                return;
            }
            case LayerType::InnerProduct: {
                const TensorShape* in = input_shape(layer);
                if (in && in->dims.size() > 1) {
                    const std::string flat = fresh(layer.id + "_flatten");
                    emit("Flatten", flat, {{"data_format", "channels_last"}}, inbound);
                    inbound = {flat};
                }
                cfg["units"] = number(layer.number("num_output"));
                cfg["activation"] = "linear";
                cfg["use_bias"] = layer.flag("bias_term");
                emit("Dense", layer.id, std::move(cfg), inbound);
                return;
            }
            case LayerType::ReLU:
            case LayerType::Sigmoid:
            case LayerType::Tanh:
            case LayerType::Softmax: {
                const std::string& name = keras_names().by_type(layer.type)->framework;
                emit("Activation", layer.id, {{"activation", name.substr(name.find(':') + 1)}}, inbound);
                return;
            }
            case LayerType::LRN:
                emit("LRN", layer.id,
                     {{"n", number(layer.number("local_size"))},
                      {"alpha", number(layer.number("alpha"))},
                      {"beta", number(layer.number("beta"))},
                      {"k", number(layer.number("k"))}},
                     inbound);
                return;
            case LayerType::Dropout:
                emit("Dropout", layer.id, {{"rate", number(layer.number("dropout_ratio"))}}, inbound);
                return;
            case LayerType::BatchNorm:
                emit("BatchNormalization", layer.id,
                     {{"axis", -1},
                      {"momentum", number(layer.number("momentum"))},
                      {"epsilon", number(layer.number("eps"))},
                      {"center", true},
                      {"scale", true}},
                     inbound);
                return;
            case LayerType::Concat:
                emit("Concatenate", layer.id, {{"axis", keras_axis(layer)}}, inbound);
                return;
            case LayerType::Eltwise: {
                const std::string op = layer.text("operation");
                emit(op == "PROD" ? "Multiply" : op == "MAX" ? "Maximum" : "Add", layer.id, ordered_json::object(),
                     inbound);
                return;
            }
            case LayerType::Flatten:
                emit("Flatten", layer.id, {{"data_format", "channels_last"}}, inbound);
                return;
            case LayerType::Reshape: {
                IntList target = layer.int_list("shape");
                if (std::count(target.begin(), target.end(), 0)) {
                    const TensorShape* out = shape_of(layer.id);
                    if (!out)
                        throw UnsupportedLayer(layer.id, "Reshape", "keras",
                                               "a 0 (copy) target dimension needs a known input shape");
                    for (std::size_t i = 0; i < target.size(); ++i)
                        if (target[i] == 0) target[i] = out->dims[i];
                }
                emit("Reshape", layer.id, {{"target_shape", int_array(to_channels_last(target))}}, inbound);
                return;
            }
            case LayerType::Embedding:
                emit("Embedding", layer.id,
                     {{"input_dim", number(layer.number("input_dim"))},
                      {"output_dim", number(layer.number("output_dim"))},
                      {"mask_zero", false}},
                     inbound);
                return;
            case LayerType::RNN:
            case LayerType::LSTM:
            case LayerType::GRU:
                emit(keras_names().by_type(layer.type)->framework, layer.id,
                     {{"units", number(layer.number("num_output"))},
                      {"activation", "tanh"},
                      {"use_bias", true},
                      {"return_sequences", layer.flag("return_sequences")}},
                     inbound);
                return;
            default:
                throw UnsupportedLayer(layer.id, to_string(layer.type), "keras", "no Keras equivalent");
        }
    }

    /// Keras padding keyword for a windowed layer; `explicit_pad` is set when
    /// the numeric pads need a separate ZeroPadding/Cropping layer.
    void choose_padding(const IRLayer& layer, std::size_t dims, std::string& padding, IntList& explicit_pad) {
        const std::string mode = layer.text("padding_mode");
        if (mode != "numeric") {
            padding = mode;
            return;
        }
        const IntList pads = layer.per_dim("pad", dims);
        padding = "valid";
        if (std::all_of(pads.begin(), pads.end(), [](auto p) { return p == 0; })) return;
        const IntList kernel = layer.per_dim("kernel", dims);
        const IntList stride = layer.per_dim("stride", dims);
        try {
            IntList same;
            if (layer.type == LayerType::Deconvolution) {
                same = resolve_transposed_same(kernel, stride);
            } else if (const TensorShape* in = input_shape(layer); in && in->dims.size() == dims + 1) {
                same = resolve_padding(PaddingMode::same(), std::span(in->dims.data() + 1, dims), kernel, stride);
            }
            if (same == pads) {
                padding = "same";
                return;
            }
        } catch (const AsymmetricPadding&) {
        }
        explicit_pad = pads;
    }

    int keras_axis(const IRLayer& layer) const {
        int axis = static_cast<int>(layer.number("axis"));
        if (axis < 0) {
            const TensorShape* out = shape_of(layer.id);
            if (!out)
                throw UnsupportedLayer(layer.id, "Concat", "keras", "a negative axis needs a known input shape");
            axis += static_cast<int>(out->dims.size()) + 1;
        }
        if (axis == 0) throw UnsupportedLayer(layer.id, "Concat", "keras", "concatenation along the batch axis");
        return axis == 1 ? -1 : axis - 1;
    }

    const IRModel& model_;
    const ExportOptions& options_;
    ShapeMap shapes_;
    std::set<std::string> used_;
    std::unordered_map<std::string, std::string> output_of_;
    ordered_json layers_ = ordered_json::array();
};

}  // namespace

ImportResult import_keras(std::string_view text) { return KerasImporter().run(text); }

std::string export_keras(const IRModel& model, const ExportOptions& options) {
    return KerasExporter(model, options).run();
}

}  // namespace nnedit::frontends
