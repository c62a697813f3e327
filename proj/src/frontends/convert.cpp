#include "nnedit/frontends/frontends.hpp"

#include "nnedit/ir/json_io.hpp"

namespace nnedit::frontends {

std::string to_string(Phase p) { return p == Phase::Import ? "import" : "export"; }

ImportResult import_model(std::string_view text, Framework source) {
    return source == Framework::Caffe ? import_caffe(text) : import_keras(text);
}

std::string guess_format(std::string_view filename, std::string_view text) {
    auto ends_with = [&](std::string_view suffix) {
        return filename.size() >= suffix.size() && filename.substr(filename.size() - suffix.size()) == suffix;
    };
    if (ends_with(".prototxt") || ends_with(".pbtxt")) return "caffe";
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos || text[first] != '{') return "caffe";
    return looks_like_ir_json(text) ? "ir" : "keras";
}

ImportResult import_any(std::string_view text, std::string_view format) {
    if (format == "ir") return {parse_model_json(text), {}};
    if (auto fw = parse_framework(format)) return import_model(text, *fw);
    throw MalformedDocument("unknown format '" + std::string(format) + "' (caffe, keras or ir)");
}

std::string export_model(const IRModel& model, Framework target, const ExportOptions& options) {
    return target == Framework::Caffe ? export_caffe(model, options) : export_keras(model, options);
}

std::string convert(std::string_view text, Framework source, Framework target, const ExportOptions& options) {
    ImportResult imported;
    try {
        imported = import_model(text, source);
    } catch (const Error& e) {
        throw ConversionError(Phase::Import, e);
    }
    try {
        return export_model(imported.model, target, options);
    } catch (const Error& e) {
        throw ConversionError(Phase::Export, e);
    }
}

}  // namespace nnedit::frontends
