#include "nnedit/ir/catalog.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "nnedit/error.hpp"

namespace nnedit {

std::string to_string(Framework f) {
    return f == Framework::Caffe ? "caffe" : "keras";
}

std::optional<Framework> parse_framework(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "caffe") return Framework::Caffe;
    if (lower == "keras") return Framework::Keras;
    return std::nullopt;
}

std::string to_string(ParamKind k) {
    switch (k) {
        case ParamKind::Number: return "number";
        case ParamKind::Text: return "text";
        case ParamKind::Checkbox: return "checkbox";
        case ParamKind::Select: return "select";
    }
    return "number";
}

std::string to_string(const ParamValue& v) {
    struct Visitor {
        std::string operator()(double d) const {
            if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 1e15)
                return std::to_string(static_cast<long long>(d));
            return std::to_string(d);
        }
        std::string operator()(const IntList& l) const {
            std::string out = "[";
            for (std::size_t i = 0; i < l.size(); ++i) {
                if (i) out += ",";
                out += std::to_string(l[i]);
            }
            return out + "]";
        }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(Visitor{}, v);
}

bool ParamSchema::accepts_type(const ParamValue& v) const {
    switch (kind) {
        case ParamKind::Number:
            return is_list() ? std::holds_alternative<IntList>(v) : std::holds_alternative<double>(v);
        case ParamKind::Text:
        case ParamKind::Select:
            return std::holds_alternative<std::string>(v);
        case ParamKind::Checkbox:
            return std::holds_alternative<bool>(v);
    }
    return false;
}

const ParamSchema* LayerSpec::find_param(std::string_view key) const {
    for (const auto& p : params)
        if (p.key == key) return &p;
    return nullptr;
}

namespace {

ParamSchema number(std::string key, std::string display, double def,
                   std::optional<double> min = std::nullopt, std::optional<double> max = std::nullopt) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = def;
    p.min = min;
    p.max = max;
    return p;
}

ParamSchema required_number(std::string key, std::string display, double min) {
    ParamSchema p = number(std::move(key), std::move(display), 0.0, min);
    p.required = true;
    return p;
}

ParamSchema per_dim(std::string key, std::string display, IntList def, std::optional<double> min,
                    bool required = false) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = std::move(def);
    p.per_dimension = true;
    p.min = min;
    p.required = required;
    return p;
}

ParamSchema shape_list(std::string key, std::string display, bool required) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = IntList{};
    p.int_list = true;
    p.required = required;
    return p;
}

ParamSchema checkbox(std::string key, std::string display, bool def) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = def;
    p.kind = ParamKind::Checkbox;
    return p;
}

ParamSchema text(std::string key, std::string display, std::string def, bool required = false) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = std::move(def);
    p.kind = ParamKind::Text;
    p.required = required;
    return p;
}

ParamSchema select(std::string key, std::string display, std::vector<std::string> options) {
    ParamSchema p;
    p.key = std::move(key);
    p.display_name = std::move(display);
    p.default_value = options.front();
    p.kind = ParamKind::Select;
    p.options = std::move(options);
    return p;
}

ParamSchema only(ParamSchema p, Framework f) {
    p.frameworks = FrameworkSet{f};
    return p;
}

const std::vector<std::string> kBottom{"Bottom"};
const std::vector<std::string> kTop{"Top"};
const std::vector<std::string> kNone{};

std::vector<ParamSchema> conv_params() {
    return {
        required_number("num_output", "No of outputs", 1),
        per_dim("kernel", "Kernel size", IntList{}, 1, true),
        per_dim("stride", "Stride", IntList{1}, 1),
        per_dim("pad", "Padding", IntList{0}, 0),
        checkbox("bias_term", "Bias term", true),
        select("padding_mode", "Padding mode", {"numeric", "same", "valid"}),
    };
}

std::vector<ParamSchema> recurrent_params() {
    return {
        required_number("num_output", "No of outputs", 1),
        only(checkbox("return_sequences", "Return sequences", false), Framework::Keras),
    };
}

std::vector<LayerSpec> build_catalog() {
    using enum LayerType;
    using C = LayerCategory;
    const FrameworkSet caffe_only{Framework::Caffe};
    const FrameworkSet keras_only{Framework::Keras};
    std::vector<LayerSpec> specs;
    auto add = [&](LayerType t, std::string id_prefix, std::string color, C cat,
                   std::vector<std::string> src, std::vector<std::string> trg,
                   std::vector<ParamSchema> params, bool learnable,
                   FrameworkSet fw = FrameworkSet::all()) {
        specs.push_back(LayerSpec{t, to_string(t), std::move(id_prefix), std::move(color), cat,
                                  std::move(src), std::move(trg), std::move(params), learnable, fw});
    };

    add(Input, "data", "#673ab7", C::Data, kBottom, kNone, {shape_list("shape", "Input shape", false)},
        false);
    add(Convolution, "conv", "#3f51b5", C::Vision, kBottom, kTop, conv_params(), true);
    add(Deconvolution, "deconv", "#5c6bc0", C::Vision, kBottom, kTop, conv_params(), true);
    add(Pooling, "pool", "#00bcd4", C::Vision, kBottom, kTop,
        {
            select("pool", "Pooling method", {"MAX", "AVE"}),
            per_dim("kernel", "Kernel size", IntList{}, 1),
            per_dim("stride", "Stride", IntList{1}, 1),
            per_dim("pad", "Padding", IntList{0}, 0),
            checkbox("global_pooling", "Global pooling", false),
            select("padding_mode", "Padding mode", {"numeric", "same", "valid"}),
        },
        false);
    add(InnerProduct, "fc", "#2196f3", C::Common, kBottom, kTop,
        {required_number("num_output", "No of outputs", 1), checkbox("bias_term", "Bias term", true)},
        true);
    add(ReLU, "relu", "#009688", C::Activation, kBottom, kTop, {}, false);
    add(Sigmoid, "sigmoid", "#4caf50", C::Activation, kBottom, kTop, {}, false);
    add(Tanh, "tanh", "#8bc34a", C::Activation, kBottom, kTop, {}, false);
    add(Softmax, "prob", "#cddc39", C::Activation, kBottom, kTop, {}, false);
    add(SoftmaxWithLoss, "loss", "#ff9800", C::Loss, kNone, kTop, {}, false, caffe_only);
    add(Accuracy, "acc", "#f44336", C::Loss, kNone, kTop,
        {only(number("top_k", "Top-K", 1, 1), Framework::Caffe),
         only(number("axis", "Axis", 1), Framework::Caffe)},
        false, caffe_only);
    add(LRN, "norm", "#ffc107", C::Normalization, kBottom, kTop,
        {number("local_size", "Local size", 5, 1), number("alpha", "Alpha", 1e-4),
         number("beta", "Beta", 0.75), number("k", "K", 1)},
        false, caffe_only);
    add(Dropout, "drop", "#795548", C::Common, kBottom, kTop,
        {number("dropout_ratio", "Dropout ratio", 0.5, 0, 1)}, false);
    add(BatchNorm, "bn", "#ffeb3b", C::Normalization, kBottom, kTop,
        {number("eps", "Epsilon", 1e-5, 0), number("momentum", "Moving average fraction", 0.999, 0, 1)},
        true);
    add(Scale, "scale", "#ff5722", C::Normalization, kBottom, kTop,
        {checkbox("bias_term", "Bias term", false)}, true, caffe_only);
    add(Concat, "concat", "#9c27b0", C::Utility, kBottom, kTop, {number("axis", "Axis", 1)}, false);
    add(Eltwise, "eltwise", "#e91e63", C::Utility, kBottom, kTop,
        {select("operation", "Operation", {"SUM", "PROD", "MAX"})}, false);
    add(Flatten, "flatten", "#607d8b", C::Utility, kBottom, kTop, {}, false);
    add(Reshape, "reshape", "#9e9e9e", C::Utility, kBottom, kTop,
        {shape_list("shape", "Target shape", true)}, false);
    add(Embedding, "embed", "#03a9f4", C::Common, kBottom, kTop,
        {required_number("input_dim", "Vocabulary size", 1), required_number("output_dim", "Embedding dim", 1)},
        true, keras_only);
    add(RNN, "rnn", "#1de9b6", C::Recurrent, kBottom, kTop, recurrent_params(), true);
    add(LSTM, "lstm", "#00e676", C::Recurrent, kBottom, kTop, recurrent_params(), true);
    add(GRU, "gru", "#76ff03", C::Recurrent, kBottom, kTop, recurrent_params(), true, keras_only);
    add(Python, "python", "#424242", C::Utility, kBottom, kTop,
        {text("module", "Module", "", true), text("layer", "Layer", "", true),
         text("param_str", "Parameter string", "")},
        false, caffe_only);
    return specs;
}

const std::vector<LayerSpec>& catalog_storage() {
    static const std::vector<LayerSpec> specs = build_catalog();
    return specs;
}

constexpr std::array<std::string_view, kLayerTypeCount> kTypeNames{
    "Input",    "Convolution", "Deconvolution", "Pooling", "InnerProduct", "ReLU",
    "Sigmoid",  "Tanh",        "Softmax",       "SoftmaxWithLoss", "Accuracy", "LRN",
    "Dropout",  "BatchNorm",   "Scale",         "Concat",  "Eltwise",      "Flatten",
    "Reshape",  "Embedding",   "RNN",           "LSTM",    "GRU",          "Python",
};

}  // namespace

std::string to_string(LayerType t) {
    return std::string(kTypeNames[static_cast<std::size_t>(t)]);
}

std::string to_string(LayerCategory c) {
    switch (c) {
        case LayerCategory::Data: return "Data";
        case LayerCategory::Vision: return "Vision";
        case LayerCategory::Recurrent: return "Recurrent";
        case LayerCategory::Activation: return "Activation/Neuron";
        case LayerCategory::Normalization: return "Normalization";
        case LayerCategory::Common: return "Common";
        case LayerCategory::Loss: return "Loss";
        case LayerCategory::Utility: return "Utility";
    }
    return "Utility";
}

std::optional<LayerType> try_parse_layer_type(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == name) return static_cast<LayerType>(i);
    return std::nullopt;
}

LayerType parse_layer_type(std::string_view name) {
    if (auto t = try_parse_layer_type(name)) return *t;
    throw UnknownLayerType("unknown layer type '" + std::string(name) + "'");
}

const LayerSpec& catalog_lookup(LayerType layer_type) {
    return catalog_storage()[static_cast<std::size_t>(layer_type)];
}

const LayerSpec& catalog_lookup(std::string_view layer_type) {
    return catalog_lookup(parse_layer_type(layer_type));
}

std::span<const LayerSpec> catalog() { return catalog_storage(); }

}  // namespace nnedit
