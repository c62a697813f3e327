#pragma once

#include <stdexcept>
#include <string>

namespace nnedit {

/// Base of every domain error. `code()` is the stable machine-readable name
/// (e.g. "UnknownLayerType"); `what()` is the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

    /// "Code: message", the form printed by the CLI and returned over HTTP.
    std::string describe() const { return code_ + ": " + what(); }

private:
    std::string code_;
};

#define NNEDIT_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                     \
    public:                                                         \
        explicit Name(const std::string& message) : Error(#Name, message) {} \
    }

NNEDIT_DEFINE_ERROR(UnknownLayerType);
NNEDIT_DEFINE_ERROR(SchemaViolation);
NNEDIT_DEFINE_ERROR(NotFound);
NNEDIT_DEFINE_ERROR(DuplicateConnection);
NNEDIT_DEFINE_ERROR(ShapeConflict);
NNEDIT_DEFINE_ERROR(CyclicGraph);
NNEDIT_DEFINE_ERROR(MissingInputShape);
NNEDIT_DEFINE_ERROR(MissingShape);
NNEDIT_DEFINE_ERROR(MalformedDocument);
NNEDIT_DEFINE_ERROR(MissingRequiredField);
NNEDIT_DEFINE_ERROR(AsymmetricPadding);
NNEDIT_DEFINE_ERROR(VersionOutOfRange);

#undef NNEDIT_DEFINE_ERROR

class UnsupportedLayer : public Error {
public:
    UnsupportedLayer(std::string layer_id, std::string layer_type, std::string target,
                     const std::string& reason = {})
        : Error("UnsupportedLayer",
                layer_type + " (layer '" + layer_id + "') cannot be exported to " + target +
                    (reason.empty() ? std::string{} : ": " + reason)),
          layer_id_(std::move(layer_id)),
          layer_type_(std::move(layer_type)),
          target_(std::move(target)) {}

    const std::string& layer_id() const noexcept { return layer_id_; }
    const std::string& layer_type() const noexcept { return layer_type_; }
    const std::string& target() const noexcept { return target_; }

private:
    std::string layer_id_;
    std::string layer_type_;
    std::string target_;
};

}  // namespace nnedit
