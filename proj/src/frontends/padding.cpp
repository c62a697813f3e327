#include "nnedit/frontends/padding.hpp"

#include <algorithm>

#include "nnedit/error.hpp"

namespace nnedit::frontends {

std::int64_t same_total_padding(std::int64_t in, std::int64_t kernel, std::int64_t stride) {
    const std::int64_t out = (in + stride - 1) / stride;
    return std::max<std::int64_t>(0, (out - 1) * stride + kernel - in);
}

IntList resolve_padding(const PaddingMode& mode, std::span<const std::int64_t> input,
                        std::span<const std::int64_t> kernel, std::span<const std::int64_t> stride) {
    switch (mode.kind) {
        case PaddingMode::Kind::Numeric:
            return mode.pads;
        case PaddingMode::Kind::Valid:
            return IntList(kernel.size(), 0);
        case PaddingMode::Kind::Same:
            break;
    }
    if (input.size() != kernel.size() || stride.size() != kernel.size())
        throw ShapeConflict("'same' padding needs one input size, kernel and stride per dimension");
    IntList pads(kernel.size());
    for (std::size_t d = 0; d < kernel.size(); ++d) {
        const std::int64_t total = same_total_padding(input[d], kernel[d], stride[d]);
        if (total % 2 != 0)
            throw AsymmetricPadding("'same' padding needs " + std::to_string(total) +
                                    " pixels along dimension " + std::to_string(d) +
                                    " (input " + std::to_string(input[d]) + ", kernel " +
                                    std::to_string(kernel[d]) + ", stride " + std::to_string(stride[d]) +
                                    "); only symmetric padding is representable");
        pads[d] = total / 2;
    }
    return pads;
}

IntList resolve_transposed_same(std::span<const std::int64_t> kernel,
                                std::span<const std::int64_t> stride) {
    IntList pads(kernel.size());
    for (std::size_t d = 0; d < kernel.size(); ++d) {
        const std::int64_t total = kernel[d] - stride[d];
        if (total < 0 || total % 2 != 0)
            throw AsymmetricPadding("transposed 'same' padding with kernel " + std::to_string(kernel[d]) +
                                    " and stride " + std::to_string(stride[d]) + " is not symmetric");
        pads[d] = total / 2;
    }
    return pads;
}

}  // namespace nnedit::frontends
