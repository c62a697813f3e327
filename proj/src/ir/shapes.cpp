#include "nnedit/ir/shapes.hpp"

#include <charconv>
#include <deque>
#include <numeric>
#include <unordered_map>

#include "nnedit/error.hpp"
#include "nnedit/frontends/padding.hpp"

namespace nnedit {

std::int64_t TensorShape::elements() const {
    return std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
}

std::string TensorShape::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(dims[i]);
    }
    return out;
}

TensorShape parse_shape(std::string_view text) {
    TensorShape shape;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find_first_of(",x", pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view part = text.substr(pos, end - pos);
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || ptr != part.data() + part.size() || value < 1)
            throw ShapeConflict("invalid shape '" + std::string(text) + "'");
        shape.dims.push_back(value);
        pos = end + 1;
    }
    return shape;
}

namespace {

using frontends::PaddingMode;

std::string shape_str(const TensorShape& s) { return "(" + s.to_string() + ")"; }

const TensorShape& single_input(const IRLayer& layer, const std::vector<TensorShape>& inputs) {
    if (inputs.size() != 1)
        throw ShapeConflict("layer '" + layer.id + "' (" + to_string(layer.type) +
                            ") expects exactly one input, got " + std::to_string(inputs.size()));
    return inputs.front();
}

PaddingMode padding_of(const IRLayer& layer, std::size_t dims) {
    const std::string mode = layer.text("padding_mode");
    if (mode == "same") return PaddingMode::same();
    if (mode == "valid") return PaddingMode::valid();
    return PaddingMode::numeric(layer.per_dim("pad", dims));
}

std::int64_t window_out(const IRLayer& layer, std::int64_t in, std::int64_t pad, std::int64_t kernel,
                        std::int64_t stride) {
    const std::int64_t span = in + 2 * pad - kernel;
    if (span < 0)
        throw ShapeConflict("layer '" + layer.id + "': kernel " + std::to_string(kernel) +
                            " does not fit input " + std::to_string(in) + " with padding " +
                            std::to_string(pad));
    return span / stride + 1;
}

TensorShape windowed(const IRLayer& layer, const TensorShape& in, std::int64_t channels) {
    const std::size_t dims = layer.dimensionality();
    if (in.dims.size() != dims + 1)
        throw ShapeConflict("layer '" + layer.id + "' is " + std::to_string(dims) +
                            "-D but its input has shape " + shape_str(in));
    const IntList kernel = layer.per_dim("kernel", dims);
    const IntList stride = layer.per_dim("stride", dims);
    if (kernel.size() != dims || stride.size() != dims)
        throw ShapeConflict("layer '" + layer.id + "' has inconsistent kernel/stride dimensionality");
    std::span<const std::int64_t> spatial(in.dims.data() + 1, dims);
    const IntList pad = frontends::resolve_padding(padding_of(layer, dims), spatial, kernel, stride);
    if (pad.size() != dims)
        throw ShapeConflict("layer '" + layer.id + "' has inconsistent padding dimensionality");
    TensorShape out{{channels}};
    for (std::size_t d = 0; d < dims; ++d)
        out.dims.push_back(window_out(layer, spatial[d], pad[d], kernel[d], stride[d]));
    return out;
}

TensorShape transposed(const IRLayer& layer, const TensorShape& in) {
    const std::size_t dims = layer.dimensionality();
    if (in.dims.size() != dims + 1)
        throw ShapeConflict("layer '" + layer.id + "' is " + std::to_string(dims) +
                            "-D but its input has shape " + shape_str(in));
    const IntList kernel = layer.per_dim("kernel", dims);
    const IntList stride = layer.per_dim("stride", dims);
    const std::string mode = layer.text("padding_mode");
    TensorShape out{{static_cast<std::int64_t>(layer.number("num_output"))}};
    if (mode == "same") {
        for (std::size_t d = 0; d < dims; ++d) out.dims.push_back(in.dims[d + 1] * stride[d]);
        return out;
    }
    const IntList pad = mode == "valid" ? IntList(dims, 0) : layer.per_dim("pad", dims);
    for (std::size_t d = 0; d < dims; ++d) {
        const std::int64_t v = (in.dims[d + 1] - 1) * stride[d] - 2 * pad[d] + kernel[d];
        if (v < 1) throw ShapeConflict("layer '" + layer.id + "' produces an empty output");
        out.dims.push_back(v);
    }
    return out;
}

TensorShape reshaped(const IRLayer& layer, const TensorShape& in) {
    const IntList target = layer.int_list("shape");
    TensorShape out;
    std::int64_t known = 1;
    int infer_at = -1;
    for (std::size_t i = 0; i < target.size(); ++i) {
        std::int64_t v = target[i];
        if (v == 0) {
            if (i >= in.dims.size()) throw ShapeConflict("layer '" + layer.id + "': 0 copies a missing dim");
            v = in.dims[i];
        }
        if (v == -1) {
            if (infer_at >= 0) throw ShapeConflict("layer '" + layer.id + "': more than one -1 in shape");
            infer_at = static_cast<int>(i);
            out.dims.push_back(1);
            continue;
        }
        if (v < 1) throw ShapeConflict("layer '" + layer.id + "': invalid target dim " + std::to_string(v));
        known *= v;
        out.dims.push_back(v);
    }
    if (infer_at >= 0) {
        if (in.elements() % known != 0)
            throw ShapeConflict("layer '" + layer.id + "' cannot reshape " + shape_str(in));
        out.dims[static_cast<std::size_t>(infer_at)] = in.elements() / known;
    }
    if (out.elements() != in.elements() || out.dims.empty())
        throw ShapeConflict("layer '" + layer.id + "' cannot reshape " + shape_str(in) + " to " +
                            shape_str(out));
    return out;
}

TensorShape concatenated(const IRLayer& layer, const std::vector<TensorShape>& inputs) {
    if (inputs.empty()) throw ShapeConflict("layer '" + layer.id + "' has no inputs");
    const std::size_t rank = inputs.front().dims.size();
    const auto axis = static_cast<std::int64_t>(layer.number("axis"));
    // axis counts the batch dimension, as in the source frameworks
    const std::int64_t idx = axis < 0 ? static_cast<std::int64_t>(rank) + axis : axis - 1;
    if (idx < 0 || idx >= static_cast<std::int64_t>(rank))
        throw ShapeConflict("layer '" + layer.id + "': concat axis " + std::to_string(axis) +
                            " out of range for rank " + std::to_string(rank));
    TensorShape out = inputs.front();
    out.dims[static_cast<std::size_t>(idx)] = 0;
    for (const auto& in : inputs) {
        if (in.dims.size() != rank)
            throw ShapeConflict("layer '" + layer.id + "': concat inputs differ in rank");
        for (std::size_t d = 0; d < rank; ++d) {
            if (static_cast<std::int64_t>(d) == idx) continue;
            if (in.dims[d] != inputs.front().dims[d])
                throw ShapeConflict("layer '" + layer.id + "': concat inputs " + shape_str(inputs.front()) +
                                    " and " + shape_str(in) + " disagree off-axis");
        }
        out.dims[static_cast<std::size_t>(idx)] += in.dims[static_cast<std::size_t>(idx)];
    }
    return out;
}

TensorShape layer_output(const IRLayer& layer, const std::vector<TensorShape>& inputs) {
    using enum LayerType;
    switch (layer.type) {
        case Input:
            return single_input(layer, inputs);
        case Convolution:
            return windowed(layer, single_input(layer, inputs),
                            static_cast<std::int64_t>(layer.number("num_output")));
        case Deconvolution:
            return transposed(layer, single_input(layer, inputs));
        case Pooling: {
            const TensorShape& in = single_input(layer, inputs);
            if (in.dims.empty()) throw ShapeConflict("layer '" + layer.id + "' needs a channel dimension");
            if (layer.flag("global_pooling")) {
                TensorShape out = in;
                std::fill(out.dims.begin() + 1, out.dims.end(), 1);
                return out;
            }
            if (layer.int_list("kernel").empty())
                throw ShapeConflict("layer '" + layer.id + "' has no kernel size");
            return windowed(layer, in, in.dims.front());
        }
        case InnerProduct:
            single_input(layer, inputs);
            return TensorShape{{static_cast<std::int64_t>(layer.number("num_output"))}};
        case ReLU:
        case Sigmoid:
        case Tanh:
        case Softmax:
        case LRN:
        case Dropout:
        case BatchNorm:
        case Scale:
            return single_input(layer, inputs);
        case SoftmaxWithLoss:
        case Accuracy:
            if (inputs.empty()) throw ShapeConflict("layer '" + layer.id + "' has no inputs");
            return TensorShape{{1}};
        case Python:
            if (inputs.empty()) throw ShapeConflict("layer '" + layer.id + "' has no inputs");
            return inputs.front();
        case Concat:
            return concatenated(layer, inputs);
        case Eltwise: {
            if (inputs.empty()) throw ShapeConflict("layer '" + layer.id + "' has no inputs");
            for (const auto& in : inputs)
                if (in != inputs.front())
                    throw ShapeConflict("layer '" + layer.id + "': eltwise inputs " + shape_str(inputs.front()) +
                                        " and " + shape_str(in) + " differ");
            return inputs.front();
        }
        case Flatten:
            return TensorShape{{single_input(layer, inputs).elements()}};
        case Reshape:
            return reshaped(layer, single_input(layer, inputs));
        case Embedding: {
            const TensorShape& in = single_input(layer, inputs);
            if (in.dims.size() != 1)
                throw ShapeConflict("layer '" + layer.id + "' expects a 1-D token sequence, got " + shape_str(in));
            return TensorShape{{static_cast<std::int64_t>(layer.number("output_dim")), in.dims[0]}};
        }
        case RNN:
        case LSTM:
        case GRU: {
            const TensorShape& in = single_input(layer, inputs);
            if (in.dims.size() != 2)
                throw ShapeConflict("layer '" + layer.id + "' expects a (features x time) input, got " +
                                    shape_str(in));
            const auto hidden = static_cast<std::int64_t>(layer.number("num_output"));
            if (layer.flag("return_sequences")) return TensorShape{{hidden, in.dims[1]}};
            return TensorShape{{hidden}};
        }
    }
    throw ShapeConflict("unhandled layer type");
}

ShapeMap infer(const IRModel& model, const ShapeMap& input_shapes, bool partial) {
    const auto& layers = model.layers();
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < layers.size(); ++i) slot.emplace(layers[i].id, i);
    std::vector<std::vector<std::size_t>> parents(layers.size());
    std::vector<std::vector<std::size_t>> children(layers.size());
    for (const auto& c : model.connections()) {
        auto f = slot.find(c.from);
        auto t = slot.find(c.to);
        if (f == slot.end() || t == slot.end()) continue;
        parents[t->second].push_back(f->second);
        children[f->second].push_back(t->second);
    }
    std::vector<std::size_t> pending(layers.size());
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        pending[i] = parents[i].size();
        if (pending[i] == 0) ready.push_back(i);
    }

    ShapeMap shapes;
    std::vector<bool> known(layers.size(), false);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::size_t u = ready.front();
        ready.pop_front();
        ++visited;
        const IRLayer& layer = layers[u];
        try {
            std::vector<TensorShape> inputs;
            bool inputs_known = true;
            if (parents[u].empty()) {
                auto given = input_shapes.find(layer.id);
                if (given != input_shapes.end()) {
                    inputs.push_back(given->second);
                } else if (layer.type == LayerType::Input && !layer.int_list("shape").empty()) {
                    inputs.push_back(TensorShape{layer.int_list("shape")});
                } else {
                    throw MissingInputShape("no input shape for source layer '" + layer.id + "'");
                }
                for (auto d : inputs.front().dims)
                    if (d < 1) throw ShapeConflict("non-positive input dim for '" + layer.id + "'");
            } else {
                for (std::size_t p : parents[u]) {
                    if (!known[p]) {
                        inputs_known = false;
                        break;
                    }
                    inputs.push_back(shapes.at(layers[p].id));
                }
            }
            if (inputs_known) {
                TensorShape out = layer_output(layer, inputs);
                for (auto d : out.dims)
                    if (d < 1)
                        throw ShapeConflict("layer '" + layer.id + "' produces non-positive dim in " +
                                            shape_str(out));
                shapes.emplace(layer.id, std::move(out));
                known[u] = true;
            }
        } catch (const Error&) {
            if (!partial) throw;
        }
        for (std::size_t v : children[u])
            if (--pending[v] == 0) ready.push_back(v);
    }
    if (visited != layers.size() && !partial)
        throw CyclicGraph("model '" + model.name() + "' contains a cycle");
    return shapes;
}

std::int64_t input_channels(const IRModel& model, const IRLayer& layer, const ShapeMap& shapes,
                            bool flatten) {
    const auto parents = model.parents(layer.id);
    if (parents.empty())
        throw MissingShape("input size of learnable layer '" + layer.id + "' is unknown (no parent)");
    auto it = shapes.find(parents.front());
    if (it == shapes.end() || it->second.dims.empty())
        throw MissingShape("shape of '" + parents.front() + "' feeding '" + layer.id + "' is unknown");
    return flatten ? it->second.elements() : it->second.dims.front();
}

}  // namespace

ShapeMap infer_shapes(const IRModel& model, const ShapeMap& input_shapes) {
    return infer(model, input_shapes, false);
}

ShapeMap uniform_source_shapes(const IRModel& model, const TensorShape& shape) {
    ShapeMap out;
    for (const auto& layer : model.layers())
        if (model.parents(layer.id).empty()) out[layer.id] = shape;
    return out;
}

ShapeMap infer_shapes_partial(const IRModel& model, const ShapeMap& input_shapes) {
    return infer(model, input_shapes, true);
}

std::uint64_t layer_parameters(const IRModel& model, const IRLayer& layer, const ShapeMap& shapes) {
    using enum LayerType;
    auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v); };
    switch (layer.type) {
        case Convolution:
        case Deconvolution: {
            const std::uint64_t in = u(input_channels(model, layer, shapes, false));
            const auto out = static_cast<std::uint64_t>(layer.number("num_output"));
            std::uint64_t window = 1;
            for (auto k : layer.per_dim("kernel", layer.dimensionality())) window *= u(k);
            return out * in * window + (layer.flag("bias_term") ? out : 0);
        }
        case InnerProduct: {
            const std::uint64_t in = u(input_channels(model, layer, shapes, true));
            const auto out = static_cast<std::uint64_t>(layer.number("num_output"));
            return in * out + (layer.flag("bias_term") ? out : 0);
        }
        case BatchNorm:
            return 2 * u(input_channels(model, layer, shapes, false));
        case Scale: {
            const std::uint64_t c = u(input_channels(model, layer, shapes, false));
            return c + (layer.flag("bias_term") ? c : 0);
        }
        case Embedding:
            return static_cast<std::uint64_t>(layer.number("input_dim")) *
                   static_cast<std::uint64_t>(layer.number("output_dim"));
        case RNN:
        case LSTM:
        case GRU: {
            const std::uint64_t gates = layer.type == LSTM ? 4 : layer.type == GRU ? 3 : 1;
            const std::uint64_t in = u(input_channels(model, layer, shapes, false));
            const auto hidden = static_cast<std::uint64_t>(layer.number("num_output"));
            return gates * hidden * (in + hidden + 1);
        }
        default:
            return 0;
    }
}

std::uint64_t count_parameters(const IRModel& model, const ShapeMap& shapes) {
    std::uint64_t total = 0;
    for (const auto& layer : model.layers()) total += layer_parameters(model, layer, shapes);
    return total;
}

}  // namespace nnedit
