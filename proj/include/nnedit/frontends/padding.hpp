#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "nnedit/ir/param.hpp"

namespace nnedit::frontends {

/// Numeric pads per spatial dimension, or an implicit mode resolved from
/// input size, kernel and stride.
struct PaddingMode {
    enum class Kind { Numeric, Same, Valid };
    Kind kind = Kind::Numeric;
    IntList pads;  // Numeric only

    static PaddingMode numeric(IntList pads) { return {Kind::Numeric, std::move(pads)}; }
    static PaddingMode same() { return {Kind::Same, {}}; }
    static PaddingMode valid() { return {Kind::Valid, {}}; }
};

/// Total padding "same" needs along one dimension:
/// max(0, (ceil(in/stride) - 1) * stride + kernel - in).
std::int64_t same_total_padding(std::int64_t in, std::int64_t kernel, std::int64_t stride);

/// Symmetric numeric padding for `mode` over the spatial dims `input`.
/// Throws AsymmetricPadding when "same" needs an odd total in any dimension.
IntList resolve_padding(const PaddingMode& mode, std::span<const std::int64_t> input,
                        std::span<const std::int64_t> kernel, std::span<const std::int64_t> stride);

/// "same" for transposed convolution (output = in * stride): pad = (k - s)/2.
/// Throws AsymmetricPadding when k - s is odd or negative.
IntList resolve_transposed_same(std::span<const std::int64_t> kernel,
                                std::span<const std::int64_t> stride);

}  // namespace nnedit::frontends
