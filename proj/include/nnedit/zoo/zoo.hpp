#pragma once

#include <span>
#include <string_view>

#include "nnedit/ir/param.hpp"

namespace nnedit::zoo {

/// A bundled architecture-only model definition.
struct Entry {
    std::string_view name;       // "vgg16"
    Framework framework;
    std::string_view filename;   // "vgg16.prototxt"
    std::string_view description;
    std::string_view text;
};

std::span<const Entry> entries();
/// nullptr when `name` is not bundled.
const Entry* find(std::string_view name);

}  // namespace nnedit::zoo
