#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nnedit {

enum class Framework { Caffe, Keras };

std::string to_string(Framework f);
/// Accepts "caffe" / "keras" (case-insensitive).
std::optional<Framework> parse_framework(std::string_view text);

/// Small set over Framework.
class FrameworkSet {
public:
    constexpr FrameworkSet() = default;
    constexpr FrameworkSet(std::initializer_list<Framework> fs) {
        for (auto f : fs) bits_ |= bit(f);
    }
    static constexpr FrameworkSet all() { return {Framework::Caffe, Framework::Keras}; }

    constexpr bool contains(Framework f) const { return (bits_ & bit(f)) != 0; }
    constexpr bool operator==(const FrameworkSet&) const = default;

private:
    static constexpr unsigned bit(Framework f) { return 1u << static_cast<unsigned>(f); }
    unsigned bits_ = 0;
};

using IntList = std::vector<std::int64_t>;

/// number | per-dimension integer list | text | boolean
using ParamValue = std::variant<double, IntList, std::string, bool>;

enum class ParamKind { Number, Text, Checkbox, Select };

std::string to_string(ParamKind k);
std::string to_string(const ParamValue& v);

struct ParamSchema {
    std::string key;
    std::string display_name;
    ParamValue default_value;
    ParamKind kind = ParamKind::Number;
    bool required = false;
    /// Integer list indexed by spatial dimension (kernel, stride, pad). A
    /// one-element value broadcasts over the layer's dimensionality.
    bool per_dimension = false;
    /// Integer list that is not per-dimension (shape vectors).
    bool int_list = false;
    std::vector<std::string> options;  // Select only
    std::optional<double> min;
    std::optional<double> max;
    FrameworkSet frameworks = FrameworkSet::all();

    bool is_list() const { return per_dimension || int_list; }
    /// True when `v` has the variant alternative this schema expects.
    bool accepts_type(const ParamValue& v) const;
};

}  // namespace nnedit
