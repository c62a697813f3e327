#pragma once

#include <string>
#include <vector>

#include "nnedit/frontends/frontends.hpp"

namespace nnedit::frontends::detail {

/// Layers in topological order; ready layers are taken in declaration order.
/// Connections to unknown ids are ignored. Throws CyclicGraph.
std::vector<const IRLayer*> topological_order(const IRModel& model);

/// Throws UnsupportedLayer when `layer` or one of its non-default params has
/// no equivalent in `target`.
void require_expressible(const IRLayer& layer, Framework target);

/// Symmetric numeric pads of a Convolution/Deconvolution/Pooling layer,
/// resolving padding_mode same/valid from the first parent's shape.
/// Throws MissingShape / AsymmetricPadding.
IntList numeric_pads(const IRModel& model, const IRLayer& layer, const ShapeMap& shapes);

bool is_integral(double v);

Diagnostic warning(std::string code, std::string message, std::string layer_id = {},
                   std::optional<std::size_t> line = std::nullopt,
                   std::optional<std::size_t> column = std::nullopt);

}  // namespace nnedit::frontends::detail
