#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/layout/layout.hpp"
#include "nnedit/zoo/zoo.hpp"

using namespace nnedit;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result nnedit_cli(std::vector<std::string> args, const std::string& stdin_text = {}) {
    args.insert(args.begin(), "nnedit");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream in(stdin_text);
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
    return {code, out.str(), err.str()};
}

std::string fixture_path(const zoo::Entry& e) { return std::string(NNEDIT_ZOO_DIR) + "/" + std::string(e.filename); }

const char* kUnshapedConv = R"(
layer { name: "data" type: "Input" top: "data" }
layer { name: "c" type: "Convolution" bottom: "data" top: "c"
        convolution_param { num_output: 4 kernel_size: 3 } }
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("convert output equals the direct conversion on every fixture") {
    for (const auto& e : zoo::entries()) {
        for (const char* target : {"caffe", "keras"}) {
            CAPTURE(e.name);
            CAPTURE(target);
            const auto r = nnedit_cli({"convert", "--from", to_string(e.framework), "--to", target, "--in",
                                       fixture_path(e), "--out", "-"});
            try {
                const std::string direct = frontends::convert(e.text, e.framework, *parse_framework(target));
                CHECK(r.code == 0);
                CHECK(r.out == direct);
            } catch (const frontends::ConversionError& err) {
                CHECK(r.code == 1);
                CHECK(r.err.find(err.tagged()) != std::string::npos);
            }
        }
    }
}

TEST_CASE("convert reports phase-tagged failures") {
    auto r = nnedit_cli({"convert", "--from", "caffe", "--to", "keras", "--in", "-"},
                        std::string(zoo::find("googlenet")->text));
    CHECK(r.code == 1);
    CHECK(r.err.find("export: UnsupportedLayer: LRN") != std::string::npos);
    CHECK(r.out.empty());

    r = nnedit_cli({"convert", "--from", "caffe", "--to", "keras", "--enable-custom-layers"},
                   std::string(zoo::find("googlenet")->text));
    CHECK(r.code == 0);

    r = nnedit_cli({"--json", "convert", "--from", "caffe", "--to", "keras"}, "layer { name: \"x\" type: \"Warp\" }");
    CHECK(r.code == 1);
    const json err = json::parse(r.err);
    CHECK(err["error"]["phase"] == "import");
    CHECK(err["error"]["code"] == "UnknownLayerType");

    r = nnedit_cli({"convert", "--from", "caffe", "--to", "keras", "--in", "/nonexistent/file"});
    CHECK(r.code == 1);
}

TEST_CASE("caffe to caffe canonicalizes and writes files") {
    const std::filesystem::path out = std::filesystem::temp_directory_path() / "nnedit-cli-vgg.prototxt";
    const std::string vgg(zoo::find("vgg16")->text);
    auto r = nnedit_cli({"convert", "--from", "caffe", "--to", "caffe", "--out", out.string()}, vgg);
    REQUIRE(r.code == 0);
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == frontends::export_caffe(frontends::import_caffe(vgg).model));
    std::filesystem::remove(out);
}

TEST_CASE("layout output equals the direct layout") {
    for (const auto& e : zoo::entries()) {
        CAPTURE(e.name);
        const IRModel m = frontends::import_model(e.text, e.framework).model;
        const auto pos = layout::compute_layout(m);
        const auto paths = layout::route_connections(m, pos);
        auto r = nnedit_cli({"layout", "--in", fixture_path(e), "--format", "json"});
        CHECK(r.code == 0);
        CHECK(r.out == layout::layout_to_json(pos, paths).dump(2) + "\n");
        r = nnedit_cli({"layout", "--in", fixture_path(e), "--format", "svg"});
        CHECK(r.code == 0);
        CHECK(r.out == layout::layout_to_svg(m, pos, paths));
    }
}

TEST_CASE("layout of a cyclic model succeeds") {
    IRModel m("loop");
    const char* doc = R"({"name":"loop","layers":[
        {"id":"a","type":"ReLU","params":{}},{"id":"b","type":"ReLU","params":{}},
        {"id":"c","type":"ReLU","params":{}}],
        "connections":[["a","b"],["b","c"],["c","b"]]})";
    auto r = nnedit_cli({"layout", "--from", "ir"}, doc);
    CHECK(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["positions"].size() == 3);
    CHECK(j["paths"].size() == 3);
}

TEST_CASE("params matches the library count") {
    for (const auto& e : zoo::entries()) {
        CAPTURE(e.name);
        const IRModel m = frontends::import_model(e.text, e.framework).model;
        auto r = nnedit_cli({"params", "--in", fixture_path(e)});
        try {
            const auto n = count_parameters(m, infer_shapes_partial(m));
            CHECK(r.code == 0);
            CHECK(r.out == std::to_string(n) + "\n");
        } catch (const Error& err) {
            CHECK(r.code == 1);
            CHECK(r.err.find(err.code()) != std::string::npos);
        }
    }
    auto r = nnedit_cli({"params", "--input-shape", "3,224,224"}, std::string(zoo::find("vgg16")->text));
    CHECK(r.out == "138357544\n");
    r = nnedit_cli({"--json", "params", "--in", fixture_path(*zoo::find("vgg16"))});
    CHECK(json::parse(r.out)["parameters"] == 138357544);
}

TEST_CASE("params edge cases") {
    auto r = nnedit_cli({"params"}, "layer { name: \"r\" type: \"ReLU\" bottom: \"x\" top: \"r\" }");
    CHECK(r.code == 0);
    CHECK(r.out == "0\n");

    r = nnedit_cli({"params"}, kUnshapedConv);
    CHECK(r.code == 1);
    CHECK(r.err.find("MissingShape") != std::string::npos);

    r = nnedit_cli({"params", "--input-shape", "3,8,8"}, kUnshapedConv);
    CHECK(r.code == 0);
    CHECK(r.out == std::to_string(4 * 3 * 3 * 3 + 4) + "\n");

    r = nnedit_cli({"params", "--input-shape", "3,0,8"}, kUnshapedConv);
    CHECK(r.code == 1);
}

TEST_CASE("validate reports diagnostics") {
    auto r = nnedit_cli({"validate", "--in", fixture_path(*zoo::find("lenet"))});
    CHECK(r.code == 0);

    const char* dangling = R"({"layers":[{"id":"a","type":"ReLU","params":{}}],"connections":[["a","ghost"]]})";
    r = nnedit_cli({"--json", "validate"}, dangling);
    CHECK(r.code == 1);
    const json list = json::parse(r.out);
    std::vector<json> direct;
    for (const auto& d : validate(parse_model_json(dangling))) direct.push_back(json::parse(diagnostic_to_json(d).dump()));
    CHECK(list == json(direct));
    CHECK(list[0]["code"] == "dangling_connection");
}

TEST_CASE("zoo list and fetch") {
    auto r = nnedit_cli({"zoo", "list"});
    CHECK(r.code == 0);
    for (const char* name : {"vgg16", "alexnet", "googlenet", "squeezenet"})
        CHECK(r.out.find(std::string(name) + "\t") != std::string::npos);

    r = nnedit_cli({"zoo", "fetch", "vgg16", "--out", "-"});
    CHECK(r.code == 0);
    CHECK(r.out == zoo::find("vgg16")->text);

    r = nnedit_cli({"zoo", "fetch", "unknown"});
    CHECK(r.code == 1);

    r = nnedit_cli({"--json", "zoo", "list"});
    CHECK(json::parse(r.out).size() == zoo::entries().size());
}

TEST_CASE("usage errors exit with 2") {
    CHECK(nnedit_cli({}).code == 2);
    CHECK(nnedit_cli({"frobnicate"}).code == 2);
    CHECK(nnedit_cli({"convert", "--from", "caffe"}).code == 2);
    CHECK(nnedit_cli({"convert", "--from", "onnx", "--to", "caffe"}).code == 2);
    CHECK(nnedit_cli({"layout", "--format", "png"}).code == 2);
    CHECK(nnedit_cli({"zoo"}).code == 2);
    CHECK(nnedit_cli({"--help"}).code == 0);
}

}  // TEST_SUITE
