#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnedit/ir/catalog.hpp"

namespace nnedit::frontends {

struct ParamName {
    std::string ir;         // IR schema key
    std::string framework;  // field name in the framework format
};

/// One row of a framework's name table.
struct LayerName {
    LayerType type;
    /// Primary identifier in the framework. Keras classes that vary with
    /// dimensionality use "2D"; activations are written "Activation:relu".
    std::string framework;
    /// Caffe: the `*_param` message holding the layer's fields.
    std::string param_message;
    std::vector<ParamName> params;
    /// Extra identifiers accepted on import only.
    std::vector<std::string> aliases;
};

/// Bidirectional identifier table for one framework. Lookups cover every
/// catalog member available in that framework; the Keras table also lists
/// LRN, which is only emitted as a registered custom layer.
class NameMap {
public:
    static const NameMap& get(Framework f);

    Framework framework() const { return framework_; }
    std::span<const LayerName> rows() const { return rows_; }

    const LayerName* by_type(LayerType t) const;
    /// Primary identifier or alias.
    const LayerName* by_name(std::string_view framework_name) const;

    /// Framework field name of an IR key for `t`, or nullopt when unmapped.
    std::optional<std::string> to_framework(LayerType t, std::string_view ir_key) const;
    std::optional<std::string> to_ir(LayerType t, std::string_view framework_key) const;

private:
    NameMap(Framework f, std::vector<LayerName> rows) : framework_(f), rows_(std::move(rows)) {}

    Framework framework_;
    std::vector<LayerName> rows_;
};

}  // namespace nnedit::frontends
