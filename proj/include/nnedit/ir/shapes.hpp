#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nnedit/ir/model.hpp"

namespace nnedit {

/// Per-sample tensor shape, channel first, batch dimension excluded
/// (C x H x W for 2-D vision layers, F x T for sequences).
struct TensorShape {
    std::vector<std::int64_t> dims;

    std::int64_t elements() const;
    std::string to_string() const;  // "3x224x224"
    bool operator==(const TensorShape&) const = default;
};

/// Parses "3,224,224" or "3x224x224". Throws ShapeConflict on non-positive
/// or malformed entries.
TensorShape parse_shape(std::string_view text);

using ShapeMap = std::map<std::string, TensorShape>;

/// Output shape of every layer, in topological order. `input_shapes` gives
/// the output of Input layers (falling back to their declared `shape`) and
/// the incoming shape of any other source layer.
/// Throws ShapeConflict, CyclicGraph, MissingInputShape.
ShapeMap infer_shapes(const IRModel& model, const ShapeMap& input_shapes = {});

/// `shape` for every layer without incoming connections.
ShapeMap uniform_source_shapes(const IRModel& model, const TensorShape& shape);

/// Best effort: shapes of every layer that could be inferred; never throws.
ShapeMap infer_shapes_partial(const IRModel& model, const ShapeMap& input_shapes = {});

/// Trainable parameters of one layer given the output shapes of the model.
/// Throws MissingShape when the input size is unknown for a learnable layer.
std::uint64_t layer_parameters(const IRModel& model, const IRLayer& layer, const ShapeMap& shapes);

/// Sum of layer_parameters over the model.
std::uint64_t count_parameters(const IRModel& model, const ShapeMap& shapes);

}  // namespace nnedit
