#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnedit/ir/param.hpp"

namespace nnedit {

enum class LayerType {
    Input,
    Convolution,
    Deconvolution,
    Pooling,
    InnerProduct,
    ReLU,
    Sigmoid,
    Tanh,
    Softmax,
    SoftmaxWithLoss,
    Accuracy,
    LRN,
    Dropout,
    BatchNorm,
    Scale,
    Concat,
    Eltwise,
    Flatten,
    Reshape,
    Embedding,
    RNN,
    LSTM,
    GRU,
    Python,
};

inline constexpr std::size_t kLayerTypeCount = 24;

enum class LayerCategory {
    Data,
    Vision,
    Recurrent,
    Activation,
    Normalization,
    Common,
    Loss,
    Utility,
};

std::string to_string(LayerType t);
std::string to_string(LayerCategory c);
/// Throws UnknownLayerType.
LayerType parse_layer_type(std::string_view name);
std::optional<LayerType> try_parse_layer_type(std::string_view name);

/// One catalog entry. Mirrors the editor's per-layer description: display
/// color, connection endpoints, the parameter schema, learnability and the
/// frameworks that can express the layer natively.
struct LayerSpec {
    LayerType type;
    std::string name;          // "Accuracy"
    std::string default_id;    // id prefix for new layers, e.g. "acc"
    std::string color;         // "#f44336"
    LayerCategory category;
    /// Outgoing endpoints. Empty means the layer feeds nothing.
    std::vector<std::string> src_endpoints;
    /// Incoming endpoints. Empty means the layer accepts no inputs.
    std::vector<std::string> trg_endpoints;
    std::vector<ParamSchema> params;
    bool learnable = false;
    FrameworkSet frameworks = FrameworkSet::all();

    const ParamSchema* find_param(std::string_view key) const;
    bool available_in(Framework f) const { return frameworks.contains(f); }
};

/// Throws UnknownLayerType for names outside the catalog.
const LayerSpec& catalog_lookup(std::string_view layer_type);
const LayerSpec& catalog_lookup(LayerType layer_type);
std::span<const LayerSpec> catalog();

}  // namespace nnedit
