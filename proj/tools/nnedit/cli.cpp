#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnedit/error.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/layout/layout.hpp"
#include "nnedit/service/service.hpp"
#include "nnedit/zoo/zoo.hpp"

namespace nnedit::cli {

namespace {

using nlohmann::ordered_json;

// Raised for unreadable or unwritable paths.
class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("IoError", message) {}
};

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    bool json = false;
};

std::string read_input(Io& io, const std::string& path) {
    std::ostringstream ss;
    if (path == "-") {
        ss << io.in.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    ss << f.rdbuf();
    return ss.str();
}

void write_output(Io& io, const std::string& path, const std::string& text) {
    if (path == "-") {
        io.out << text;
        io.out.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) throw IoError("cannot write " + path);
}

int report(Io& io, const std::string& code, const std::string& message, const std::string& phase = {}) {
    if (io.json) {
        ordered_json e{{"code", code}, {"message", message}};
        if (!phase.empty()) e["phase"] = phase;
        io.err << ordered_json{{"error", e}}.dump() << "\n";
    } else {
        io.err << "nnedit: " << (phase.empty() ? "" : phase + ": ") << code << ": " << message << "\n";
    }
    return 1;
}

IRModel load_model(Io& io, const std::string& path, const std::string& format) {
    const std::string text = read_input(io, path);
    const std::string fmt = format.empty() ? frontends::guess_format(path == "-" ? "" : path, text) : format;
    return frontends::import_any(text, fmt).model;
}

int cmd_convert(Io& io, const std::string& from, const std::string& to, const std::string& in,
                const std::string& out, bool custom) {
    frontends::ExportOptions options;
    options.enable_custom_layers = custom;
    const std::string text = read_input(io, in);
    try {
        write_output(io, out, frontends::convert(text, *parse_framework(from), *parse_framework(to), options));
    } catch (const frontends::ConversionError& e) {
        return report(io, e.code(), e.what(), to_string(e.phase()));
    }
    return 0;
}

int cmd_validate(Io& io, const std::string& in, const std::string& format) {
    const std::string text = read_input(io, in);
    auto imported = frontends::import_any(text, format.empty() ? frontends::guess_format(in, text) : format);
    auto diagnostics = std::move(imported.warnings);
    for (auto& d : validate(imported.model)) diagnostics.push_back(std::move(d));
    if (io.json) {
        ordered_json list = ordered_json::array();
        for (const auto& d : diagnostics) list.push_back(diagnostic_to_json(d));
        io.out << list.dump(2) << "\n";
    } else {
        for (const auto& d : diagnostics) {
            io.out << to_string(d.severity) << ": " << d.code;
            if (!d.layer_id.empty()) io.out << " [" << d.layer_id << "]";
            io.out << ": " << d.message << "\n";
        }
        if (diagnostics.empty()) io.out << "ok\n";
    }
    return has_errors(diagnostics) ? 1 : 0;
}

int cmd_layout(Io& io, const std::string& in, const std::string& format, const std::string& out_format,
               const std::string& out) {
    const IRModel model = load_model(io, in, format);
    const auto positions = layout::compute_layout(model);
    const auto paths = layout::route_connections(model, positions);
    if (out_format == "svg")
        write_output(io, out, layout::layout_to_svg(model, positions, paths));
    else
        write_output(io, out, layout::layout_to_json(positions, paths).dump(2) + "\n");
    return 0;
}

int cmd_params(Io& io, const std::string& in, const std::string& format, const std::string& input_shape) {
    const IRModel model = load_model(io, in, format);
    ShapeMap sources;
    if (!input_shape.empty()) sources = uniform_source_shapes(model, parse_shape(input_shape));
    const std::uint64_t total = count_parameters(model, infer_shapes_partial(model, sources));
    if (io.json)
        io.out << ordered_json{{"parameters", total}}.dump() << "\n";
    else
        io.out << total << "\n";
    return 0;
}

int cmd_zoo_list(Io& io) {
    if (io.json) {
        ordered_json list = ordered_json::array();
        for (const auto& e : zoo::entries())
            list.push_back({{"name", e.name},
                            {"framework", to_string(e.framework)},
                            {"filename", e.filename},
                            {"description", e.description}});
        io.out << list.dump(2) << "\n";
        return 0;
    }
    for (const auto& e : zoo::entries())
        io.out << e.name << "\t" << to_string(e.framework) << "\t" << e.description << "\n";
    return 0;
}

int cmd_zoo_fetch(Io& io, const std::string& name, const std::string& out) {
    const auto* e = zoo::find(name);
    if (!e) throw NotFound("no bundled model named '" + name + "' (see `nnedit zoo list`)");
    const std::string path = out.empty() ? std::string(e->filename) : out;
    write_output(io, path, std::string(e->text));
    if (path != "-") io.err << "wrote " << path << "\n";
    return 0;
}

int cmd_serve(Io& io, const std::string& bind, const std::string& store) {
    service::Config config = service::Config::from_env();
    if (!bind.empty()) {
        const std::string env_bind = bind;
        config = service::Config::from_env([&](const char* k) -> const char* {
            return std::string(k) == "NNEDIT_BIND" ? env_bind.c_str() : std::getenv(k);
        });
    }
    if (!store.empty()) config.store_path = store;

    // SIGINT/SIGTERM are taken by a waiter thread; block them before any
    // other thread starts so they inherit the mask.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    service::Service svc(config);
    service::HttpServer http(svc);
    const int port = http.bind(config.host, config.port);
    io.out << "listening on http://" << config.host << ":" << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        http.stop();
    });
    http.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    Io io{in, out, err};
    CLI::App app{"Neural network model editor: convert, validate, lay out and serve models", "nnedit"};
    app.require_subcommand(1);
    app.add_flag("--json", io.json, "Machine-readable output and diagnostics");

    const std::vector<std::string> frameworks{"caffe", "keras"};
    const std::vector<std::string> formats{"caffe", "keras", "ir"};

    std::string from, to, in_path = "-", out_path = "-", format, out_format = "json", shape, name, bind, store;
    bool custom = false;

    auto* convert = app.add_subcommand("convert", "Convert a model between frameworks");
    convert->add_option("--from", from, "Source framework")->required()->check(CLI::IsMember(frameworks));
    convert->add_option("--to", to, "Target framework")->required()->check(CLI::IsMember(frameworks));
    convert->add_option("--in", in_path, "Input path, - for stdin")->capture_default_str();
    convert->add_option("--out", out_path, "Output path, - for stdout")->capture_default_str();
    convert->add_flag("--enable-custom-layers", custom, "Export LRN to Keras as a custom layer");

    auto* validate_cmd = app.add_subcommand("validate", "Import a model and report diagnostics");
    validate_cmd->add_option("--in", in_path, "Input path, - for stdin")->capture_default_str();
    validate_cmd->add_option("--from", format, "Input format (guessed when omitted)")->check(CLI::IsMember(formats));

    auto* layout_cmd = app.add_subcommand("layout", "Compute the canvas layout of a model");
    layout_cmd->add_option("--in", in_path, "Input path, - for stdin")->capture_default_str();
    layout_cmd->add_option("--from", format, "Input format (guessed when omitted)")->check(CLI::IsMember(formats));
    layout_cmd->add_option("--format", out_format, "Output format")
        ->check(CLI::IsMember({"svg", "json"}))
        ->capture_default_str();
    layout_cmd->add_option("--out", out_path, "Output path, - for stdout")->capture_default_str();

    auto* params_cmd = app.add_subcommand("params", "Print the total trainable parameter count");
    params_cmd->add_option("--in", in_path, "Input path, - for stdin")->capture_default_str();
    params_cmd->add_option("--from", format, "Input format (guessed when omitted)")->check(CLI::IsMember(formats));
    params_cmd->add_option("--input-shape", shape, "Shape of every source layer, e.g. 3,224,224");

    auto* zoo_cmd = app.add_subcommand("zoo", "Bundled model definitions");
    zoo_cmd->require_subcommand(1);
    auto* zoo_list = zoo_cmd->add_subcommand("list", "List bundled models");
    auto* zoo_fetch = zoo_cmd->add_subcommand("fetch", "Write a bundled model definition");
    zoo_fetch->add_option("name", name, "Model name")->required();
    zoo_fetch->add_option("--out", out_path, "Output path (default: the bundled file name), - for stdout");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service (configured from NNEDIT_* variables)");
    serve->add_option("--bind", bind, "host:port, overrides NNEDIT_BIND");
    serve->add_option("--store", store, "Store directory, overrides NNEDIT_STORE");

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (*convert) return cmd_convert(io, from, to, in_path, out_path, custom);
        if (*validate_cmd) return cmd_validate(io, in_path, format);
        if (*layout_cmd) return cmd_layout(io, in_path, format, out_format, out_path);
        if (*params_cmd) return cmd_params(io, in_path, format, shape);
        if (*zoo_list) return cmd_zoo_list(io);
        if (*zoo_fetch) return cmd_zoo_fetch(io, name, zoo_fetch->count("--out") ? out_path : "");
        if (*serve) return cmd_serve(io, bind, store);
    } catch (const Error& e) {
        return report(io, e.code(), e.what());
    } catch (const std::exception& e) {
        return report(io, "InternalError", e.what());
    }
    return 2;
}

}  // namespace nnedit::cli
