#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nnedit/error.hpp"
#include "nnedit/ir/model.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/ir/validate.hpp"

namespace nnedit::frontends {

struct ImportResult {
    IRModel model;
    /// Unmapped fields and lossy conversions, severity Warning.
    std::vector<Diagnostic> warnings;
};

struct ExportOptions {
    /// Registry of third-party layer implementations. When set, LRN exports
    /// to Keras as the custom class "LRN".
    bool enable_custom_layers = false;
    /// Extra source shapes used to resolve implicit padding and channel
    /// ordering; Input layers with a declared shape need no entry.
    ShapeMap input_shapes;
};

/// Caffe prototxt -> IR. Throws textproto::SyntaxError, UnknownLayerType,
/// MissingRequiredField, MalformedDocument.
ImportResult import_caffe(std::string_view text);
/// IR -> prototxt. Throws UnsupportedLayer, CyclicGraph, AsymmetricPadding,
/// MissingShape.
std::string export_caffe(const IRModel& model, const ExportOptions& options = {});

/// Keras model JSON (functional or Sequential) -> IR. Throws
/// MalformedDocument, UnknownLayerType, AsymmetricPadding.
ImportResult import_keras(std::string_view text);
/// IR -> Keras functional JSON (channels_last). Throws UnsupportedLayer,
/// CyclicGraph.
std::string export_keras(const IRModel& model, const ExportOptions& options = {});

ImportResult import_model(std::string_view text, Framework source);

/// "caffe", "keras" or "ir" from the file extension, falling back to the
/// contents for ".json" and unknown names.
std::string guess_format(std::string_view filename, std::string_view text);
/// Imports `format` ("caffe", "keras" or "ir"). Throws MalformedDocument for
/// an unknown format, plus whatever the chosen importer throws.
ImportResult import_any(std::string_view text, std::string_view format);
std::string export_model(const IRModel& model, Framework target, const ExportOptions& options = {});

enum class Phase { Import, Export };
std::string to_string(Phase p);

/// A frontend error tagged with the phase it came from. code() and what()
/// are the underlying error's.
class ConversionError : public Error {
public:
    ConversionError(Phase phase, const Error& cause)
        : Error(cause.code(), cause.what()), phase_(phase) {}

    Phase phase() const noexcept { return phase_; }
    /// "export: UnsupportedLayer: LRN (layer 'norm1') cannot be ..."
    std::string tagged() const { return to_string(phase_) + ": " + describe(); }

private:
    Phase phase_;
};

/// export_model(import_model(text, source).model, target). Throws
/// ConversionError.
std::string convert(std::string_view text, Framework source, Framework target,
                    const ExportOptions& options = {});

}  // namespace nnedit::frontends
