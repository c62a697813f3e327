#include <algorithm>
#include <set>
#include <unordered_map>

#include "common.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/frontends/name_map.hpp"
#include "nnedit/textproto/textproto.hpp"

namespace nnedit::frontends {

using textproto::Node;
using detail::warning;

namespace {

const NameMap& caffe_names() { return NameMap::get(Framework::Caffe); }

std::string where(const Node& n) {
    return " (line " + std::to_string(n.span().line) + ", column " + std::to_string(n.span().column) + ")";
}

// ---------------------------------------------------------------------------
// import

// Caffe enum values written as integers.
const std::vector<std::string> kPoolEnum{"MAX", "AVE", "STOCHASTIC"};
const std::vector<std::string> kEltwiseEnum{"PROD", "SUM", "MAX"};

double to_number(const Node& n, const std::string& field) {
    if (n.kind() != Node::Kind::Num) throw MalformedDocument("field '" + field + "' must be a number" + where(n));
    return n.as_double();
}

std::int64_t to_int(const Node& n, const std::string& field) {
    const double v = to_number(n, field);
    if (!detail::is_integral(v)) throw MalformedDocument("field '" + field + "' must be an integer" + where(n));
    return static_cast<std::int64_t>(v);
}

bool to_bool(const Node& n, const std::string& field) {
    if (n.kind() == Node::Kind::Ident && (n.text() == "true" || n.text() == "false")) return n.text() == "true";
    if (n.kind() == Node::Kind::Num) return n.as_double() != 0;
    throw MalformedDocument("field '" + field + "' must be true or false" + where(n));
}

IntList shape_dims(const Node& shape) {
    IntList dims;
    for (const Node* d : shape.find_all("dim")) dims.push_back(to_int(*d, "dim"));
    return dims;
}

/// Drops the batch dimension of a BlobShape-style list.
IntList without_batch(IntList dims) {
    if (!dims.empty()) dims.erase(dims.begin());
    return dims;
}

struct PerDim {
    IntList values;
    bool present = false;
};

/// Reads `<name>` (repeated) or `<name_h>`/`<name_w>` from a param message.
PerDim read_per_dim(const Node& msg, const std::string& base, const std::string& hw_base,
                    std::set<std::string>& used) {
    PerDim out;
    for (const Node* n : msg.find_all(base)) {
        out.values.push_back(to_int(*n, base));
        out.present = true;
    }
    used.insert(base);
    const Node* h = msg.find(hw_base + "_h");
    const Node* w = msg.find(hw_base + "_w");
    used.insert(hw_base + "_h");
    used.insert(hw_base + "_w");
    if (h || w) {
        if (!h || !w) throw MalformedDocument("'" + hw_base + "_h' and '" + hw_base + "_w' must be given together" +
                                              where(h ? *h : *w));
        out.values = {to_int(*h, hw_base + "_h"), to_int(*w, hw_base + "_w")};
        out.present = true;
    }
    return out;
}

class CaffeImporter {
public:
    ImportResult run(std::string_view text) {
        const Node root = textproto::parse(text);
        if (const Node* n = root.find("name"); n && n->kind() == Node::Kind::Str) result_.model.set_name(n->text());
        if (root.find("layers"))
            throw MalformedDocument("the legacy V1 'layers' format is not supported; use 'layer'" +
                                    where(*root.find("layers")));
        legacy_inputs(root);
        for (const auto& [key, value] : root.fields()) {
            if (key == "layer") {
                if (!value.is_message()) throw MalformedDocument("'layer' must be a message" + where(value));
                import_layer(value);
            } else if (key != "name" && key != "input" && key != "input_dim" && key != "input_shape" &&
                       key != "force_backward" && key != "state") {
                result_.warnings.push_back(warning("unmapped_field", "net field '" + key + "' is ignored", {},
                                                   value.span().line, value.span().column));
            }
        }
        return std::move(result_);
    }

private:
    void legacy_inputs(const Node& root) {
        const auto inputs = root.find_all("input");
        const auto dims = root.find_all("input_dim");
        const auto shapes = root.find_all("input_shape");
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            IRLayer layer;
            layer.type = LayerType::Input;
            layer.id = unique_id(inputs[i]->text());
            layer.display_name = layer.id;
            IntList shape;
            if (i < shapes.size()) {
                shape = without_batch(shape_dims(*shapes[i]));
            } else if (dims.size() >= 4 * (i + 1)) {
                for (std::size_t d = 4 * i + 1; d < 4 * (i + 1); ++d) shape.push_back(to_int(*dims[d], "input_dim"));
            }
            if (!shape.empty()) layer.params["shape"] = shape;
            producers_[inputs[i]->text()] = layer.id;
            result_.model.insert_layer(std::move(layer));
        }
    }

    std::string unique_id(std::string base) {
        if (base.empty()) base = "layer";
        std::string id = base;
        for (int n = 1; result_.model.contains(id); ++n) id = base + "_" + std::to_string(n);
        if (id != base)
            result_.warnings.push_back(warning("renamed_layer", "duplicate layer name '" + base + "' renamed to '" +
                                                                    id + "'", id));
        return id;
    }

    void import_layer(const Node& msg) {
        const Node* type_node = msg.find("type");
        if (!type_node) throw MalformedDocument("layer without a 'type'" + where(msg));
        const std::string caffe_type = type_node->text();
        const LayerName* row = caffe_names().by_name(caffe_type);
        if (!row)
            throw UnknownLayerType("unknown Caffe layer type '" + caffe_type + "'" + where(*type_node));
        const Node* name_node = msg.find("name");
        const std::string name = name_node ? name_node->text() : std::string{};

        std::vector<std::string> tops;
        for (const Node* t : msg.find_all("top")) tops.push_back(t->text());
        std::vector<std::string> bottoms;
        for (const Node* b : msg.find_all("bottom")) bottoms.push_back(b->text());

        if (row->type == LayerType::Input) {
            import_input(msg, *row, name, tops);
            return;
        }

        IRLayer layer;
        layer.type = row->type;
        layer.id = unique_id(name.empty() ? catalog_lookup(row->type).default_id : name);
        layer.display_name = layer.id;
        for (const auto& [key, value] : msg.fields()) {
            if (key == "name" || key == "type" || key == "top" || key == "bottom") continue;
            if (key == row->param_message) {
                if (!value.is_message()) throw MalformedDocument("'" + key + "' must be a message" + where(value));
                map_params(layer, *row, value);
                continue;
            }
            result_.warnings.push_back(warning("unmapped_field", "field '" + key + "' is ignored", layer.id,
                                               value.span().line, value.span().column));
        }
        check_required(layer, msg);

        for (const auto& bottom : bottoms) {
            auto it = producers_.find(bottom);
            if (it == producers_.end()) {
                result_.warnings.push_back(
                    warning("unknown_blob", "bottom blob '" + bottom + "' has no producer", layer.id));
                continue;
            }
            pending_connections_.push_back({it->second, layer.id});
        }
        const std::string id = layer.id;
        result_.model.insert_layer(std::move(layer));
        for (const auto& c : pending_connections_) {
            if (result_.model.has_connection(c.from, c.to)) {
                result_.warnings.push_back(
                    warning("duplicate_connection", "repeated bottom " + c.from + " -> " + c.to + " dropped", c.to));
                continue;
            }
            result_.model.insert_connection(c.from, c.to);
        }
        pending_connections_.clear();
        for (const auto& top : tops) producers_[top] = id;
    }

    void import_input(const Node& msg, const LayerName& row, const std::string& name,
                      const std::vector<std::string>& tops) {
        std::vector<IntList> shapes;
        if (const Node* p = msg.find(row.param_message)) {
            for (const Node* s : p->find_all("shape")) shapes.push_back(without_batch(shape_dims(*s)));
        } else if (const Node* p = msg.find("dummy_data_param")) {
            for (const Node* s : p->find_all("shape")) shapes.push_back(without_batch(shape_dims(*s)));
        }
        const std::string caffe_type = msg.find("type")->text();
        for (const auto& [key, value] : msg.fields()) {
            if (key == "name" || key == "type" || key == "top" || key == "bottom" || key == row.param_message ||
                key == "dummy_data_param")
                continue;
            result_.warnings.push_back(warning("unmapped_field", "field '" + key + "' is ignored", name,
                                               value.span().line, value.span().column));
        }
        if (caffe_type != "Input" && shapes.empty())
            result_.warnings.push_back(
                warning("data_layer", caffe_type + " layer imported as Input without a shape", name));

        // one IR Input per top; a single-top layer keeps the layer name
        const std::vector<std::string> blobs = tops.empty() ? std::vector<std::string>{name} : tops;
        for (std::size_t i = 0; i < blobs.size(); ++i) {
            IRLayer layer;
            layer.type = LayerType::Input;
            layer.id = unique_id(blobs.size() == 1 && !name.empty() ? name : blobs[i]);
            layer.display_name = layer.id;
            const IntList* shape = i < shapes.size() ? &shapes[i] : (shapes.size() == 1 ? &shapes[0] : nullptr);
            if (shape && !shape->empty()) layer.params["shape"] = *shape;
            producers_[blobs[i]] = layer.id;
            result_.model.insert_layer(std::move(layer));
        }
    }

    void map_params(IRLayer& layer, const LayerName& row, const Node& msg) {
        const LayerSpec& spec = layer.spec();
        std::set<std::string> used;

        const bool windowed = layer.type == LayerType::Convolution || layer.type == LayerType::Deconvolution ||
                              layer.type == LayerType::Pooling;
        if (windowed) {
            PerDim kernel = read_per_dim(msg, "kernel_size", "kernel", used);
            PerDim stride = read_per_dim(msg, "stride", "stride", used);
            PerDim pad = read_per_dim(msg, "pad", "pad", used);
            std::size_t dims = 0;
            for (const auto* p : {&kernel, &stride, &pad})
                if (p->values.size() > 1) dims = std::max(dims, p->values.size());
            if (dims == 0) dims = 2;
            auto store = [&](const std::string& key, PerDim& p) {
                if (!p.present) return;
                if (p.values.size() == 1) p.values.assign(dims, p.values.front());
                layer.params[key] = p.values;
            };
            store("kernel", kernel);
            store("stride", stride);
            store("pad", pad);
        }

        for (const auto& [key, value] : msg.fields()) {
            if (used.count(key)) continue;
            std::optional<std::string> ir_key = caffe_names().to_ir(layer.type, key);
            if (!ir_key && key == "concat_dim" && layer.type == LayerType::Concat) ir_key = "axis";
            if (!ir_key || (windowed && (*ir_key == "kernel" || *ir_key == "stride" || *ir_key == "pad"))) {
                result_.warnings.push_back(warning("unmapped_field",
                                                   "field '" + row.param_message + "." + key + "' is ignored",
                                                   layer.id, value.span().line, value.span().column));
                continue;
            }
            const ParamSchema& schema = *spec.find_param(*ir_key);
            if (schema.int_list) {
                if (!value.is_message()) throw MalformedDocument("'" + key + "' must be a shape message" + where(value));
                IntList dims = shape_dims(value);
                if (layer.type == LayerType::Reshape) dims = without_batch(dims);
                layer.params[*ir_key] = dims;
                continue;
            }
            switch (schema.kind) {
                case ParamKind::Number: layer.params[*ir_key] = to_number(value, key); break;
                case ParamKind::Checkbox: layer.params[*ir_key] = to_bool(value, key); break;
                case ParamKind::Text: layer.params[*ir_key] = value.text(); break;
                case ParamKind::Select: layer.params[*ir_key] = select_value(value, key, schema); break;
            }
        }
    }

    std::string select_value(const Node& value, const std::string& key, const ParamSchema& schema) {
        std::string text;
        if (value.kind() == Node::Kind::Num) {
            const auto& table = key == "pool" ? kPoolEnum : kEltwiseEnum;
            const std::int64_t i = to_int(value, key);
            if (i < 0 || static_cast<std::size_t>(i) >= table.size())
                throw MalformedDocument("enum value " + std::to_string(i) + " out of range for '" + key + "'" +
                                        where(value));
            text = table[static_cast<std::size_t>(i)];
        } else {
            text = value.text();
        }
        if (std::find(schema.options.begin(), schema.options.end(), text) == schema.options.end())
            throw MalformedDocument("unsupported value '" + text + "' for '" + key + "'" + where(value));
        return text;
    }

    void check_required(const IRLayer& layer, const Node& msg) {
        const LayerSpec& spec = layer.spec();
        for (const auto& schema : spec.params) {
            if (!schema.required) continue;
            auto it = layer.params.find(schema.key);
            bool missing = it == layer.params.end();
            if (!missing) {
                if (const auto* l = std::get_if<IntList>(&it->second)) missing = l->empty();
                if (const auto* s = std::get_if<std::string>(&it->second)) missing = s->empty();
            }
            if (missing)
                throw MissingRequiredField(spec.name + " layer '" + layer.id + "' is missing '" + schema.key + "'" +
                                           where(msg));
        }
        if (layer.type == LayerType::Pooling && !layer.flag("global_pooling") && !layer.params.count("kernel"))
            throw MissingRequiredField("Pooling layer '" + layer.id + "' needs kernel_size or global_pooling" +
                                       where(msg));
    }

    ImportResult result_;
    std::unordered_map<std::string, std::string> producers_;
    std::vector<Connection> pending_connections_;
};

// ---------------------------------------------------------------------------
// export

Node number_node(double v) {
    if (detail::is_integral(v)) return Node::num(static_cast<std::int64_t>(v));
    return Node::num(v);
}

/// BlobShape message; Input shapes get batch 1, Reshape targets 0 (copy).
Node shape_node(const IntList& dims, std::int64_t batch) {
    Node shape = Node::message();
    shape.add("dim", Node::num(batch));
    for (auto d : dims) shape.add("dim", Node::num(d));
    return shape;
}

void emit_per_dim(Node& msg, const std::string& base, const std::string& hw_base, const IntList& values) {
    if (std::all_of(values.begin(), values.end(), [&](auto v) { return v == values.front(); })) {
        msg.add(base, Node::num(values.front()));
    } else if (values.size() == 2) {
        msg.add(hw_base + "_h", Node::num(values[0]));
        msg.add(hw_base + "_w", Node::num(values[1]));
    } else {
        for (auto v : values) msg.add(base, Node::num(v));
    }
}

class CaffeExporter {
public:
    CaffeExporter(const IRModel& model, const ExportOptions& options) : model_(model), options_(options) {}

    std::string run() {
        Node root = Node::message();
        if (!model_.name().empty()) root.add("name", Node::str(model_.name()));
        for (const IRLayer* layer : detail::topological_order(model_)) root.add("layer", export_layer(*layer));
        return textproto::print(root);
    }

private:
    const ShapeMap& shapes() {
        if (!shapes_) shapes_ = infer_shapes_partial(model_, options_.input_shapes);
        return *shapes_;
    }

    Node export_layer(const IRLayer& layer) {
        detail::require_expressible(layer, Framework::Caffe);
        const LayerName& row = *caffe_names().by_type(layer.type);
        Node msg = Node::message();
        msg.add("name", Node::str(layer.id));
        msg.add("type", Node::str(row.framework));
        for (const auto& parent : model_.parents(layer.id)) msg.add("bottom", Node::str(parent));
        msg.add("top", Node::str(layer.id));
        Node params = layer_params(layer, row);
        if (!params.fields().empty()) msg.add(row.param_message, std::move(params));
        return msg;
    }

    Node layer_params(const IRLayer& layer, const LayerName& row) {
        const LayerSpec& spec = layer.spec();
        const auto canonical = canonical_params(layer);
        Node msg = Node::message();
        const std::size_t dims = layer.dimensionality();
        for (const auto& [ir_key, caffe_key] : row.params) {
            const ParamSchema& schema = *spec.find_param(ir_key);
            ParamValue value = canonical.at(ir_key);
            if (ir_key == "pad") value = detail::numeric_pads(model_, layer, shapes());
            if (schema.per_dimension) {
                const auto& list = std::get<IntList>(value);
                if (list.empty()) continue;
                IntList def = std::get<IntList>(schema.default_value);
                if (def.size() == 1) def.assign(dims, def.front());
                if (list == def && !schema.required) continue;
                const std::string hw = caffe_key == "kernel_size" ? "kernel" : caffe_key;
                emit_per_dim(msg, caffe_key, hw, list);
                continue;
            }
            if (value == schema.default_value && !schema.required) continue;
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        msg.add(caffe_key, number_node(v));
                    } else if constexpr (std::is_same_v<T, IntList>) {
                        msg.add(caffe_key, shape_node(v, layer.type == LayerType::Input ? 1 : 0));
                    } else if constexpr (std::is_same_v<T, bool>) {
                        msg.add(caffe_key, Node::ident(v ? "true" : "false"));
                    } else if (schema.kind == ParamKind::Select) {
                        msg.add(caffe_key, Node::ident(v));
                    } else {
                        msg.add(caffe_key, Node::str(v));
                    }
                },
                value);
        }
        return msg;
    }

    const IRModel& model_;
    const ExportOptions& options_;
    std::optional<ShapeMap> shapes_;
};

}  // namespace

ImportResult import_caffe(std::string_view text) { return CaffeImporter().run(text); }

std::string export_caffe(const IRModel& model, const ExportOptions& options) {
    return CaffeExporter(model, options).run();
}

}  // namespace nnedit::frontends
