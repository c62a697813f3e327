#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "nnedit/error.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/frontends/name_map.hpp"
#include "nnedit/frontends/padding.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/ir/validate.hpp"
#include "nnedit/textproto/textproto.hpp"
#include "nnedit/zoo/zoo.hpp"
#include "oracles.hpp"

using namespace nnedit;
using namespace nnedit::frontends;
using nlohmann::json;

namespace {

std::string read_data(const std::string& name) {
    std::ifstream in(std::string(NNEDIT_TEST_DATA) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

IRModel zoo_model(std::string_view name) {
    const auto* e = zoo::find(name);
    REQUIRE(e != nullptr);
    return import_model(e->text, e->framework).model;
}

bool has_code(const std::vector<Diagnostic>& ds, const std::string& code) {
    for (const auto& d : ds)
        if (d.code == code) return true;
    return false;
}

IRModel roundtrip(const IRModel& m, Framework f, const ExportOptions& opt = {}) {
    return import_model(export_model(m, f, opt), f).model;
}

}  // namespace

TEST_SUITE("frontends") {

TEST_CASE("caffe convolution mapping") {
    const auto r = import_caffe(R"(
        layer { name:"data" type:"Input" top:"data" input_param { shape { dim: 1 dim: 3 dim: 8 dim: 8 } } }
        layer { name:"conv1" type:"Convolution" bottom:"data" top:"conv1" convolution_param { num_output: 64 kernel_size: 3 } })");
    const IRLayer& c = r.model.at("conv1");
    CHECK(c.type == LayerType::Convolution);
    CHECK(c.number("num_output") == 64);
    CHECK(c.int_list("kernel") == IntList{3, 3});
    CHECK(r.model.at("data").int_list("shape") == IntList{3, 8, 8});
    CHECK(r.model.has_connection("data", "conv1"));
}

TEST_CASE("caffe accuracy top_k") {
    const auto r = import_caffe(R"(layer { name:"acc" type:"Accuracy" accuracy_param { top_k: 5 } })");
    CHECK(r.model.at("acc").number("top_k") == 5);
    CHECK(r.model.at("acc").number("axis") == 1);
}

TEST_CASE("vgg16 fixture") {
    const IRModel m = zoo_model("vgg16");
    int learnable = 0;
    for (const auto& l : m.layers()) learnable += l.spec().learnable;
    CHECK(learnable == 16);
    CHECK(validate(m).empty());
    CHECK(count_parameters(m, infer_shapes(m)) == 138357544);
}

TEST_CASE("in-place layers chain sequentially") {
    const auto r = import_caffe(R"(
        layer { name:"data" type:"Input" top:"data" input_param { shape { dim: 1 dim: 4 } } }
        layer { name:"fc" type:"InnerProduct" bottom:"data" top:"fc" inner_product_param { num_output: 2 } }
        layer { name:"relu" type:"ReLU" bottom:"fc" top:"fc" }
        layer { name:"drop" type:"Dropout" bottom:"fc" top:"fc" }
        layer { name:"out" type:"Softmax" bottom:"fc" top:"out" })");
    const auto& m = r.model;
    CHECK(m.has_connection("data", "fc"));
    CHECK(m.has_connection("fc", "relu"));
    CHECK(m.has_connection("relu", "drop"));
    CHECK(m.has_connection("drop", "out"));
    CHECK(m.connections().size() == 4);
}

TEST_CASE("caffe import errors and warnings") {
    CHECK_THROWS_AS(import_caffe(R"(layer { name:"x" type:"Fancy" })"), UnknownLayerType);
    CHECK_THROWS_AS(import_caffe(R"(layer { name:"c" type:"Convolution" convolution_param { kernel_size: 3 } })"),
                    MissingRequiredField);
    CHECK_THROWS_AS(import_caffe(R"(layer { name:"c" )"), textproto::SyntaxError);
    const auto r = import_caffe(R"(
        layer { name:"r" type:"ReLU" bottom:"x" top:"r" relu_param { negative_slope: 0 } mystery: 3 })");
    CHECK(has_code(r.warnings, "unmapped_field"));
    for (const auto& w : r.warnings) CHECK(w.severity == Severity::Warning);
    try {
        import_caffe("layer { name:\"a\" type:\"ReLU\" }\nlayer { name:\"b\" type:\"Nope\" }");
        FAIL("expected UnknownLayerType");
    } catch (const UnknownLayerType& e) {
        CHECK(std::string(e.what()).find("Nope") != std::string::npos);
    }
}

TEST_CASE("caffe export is minimal") {
    IRModel m("m");
    IRLayer in;
    in.id = "data";
    in.type = LayerType::Input;
    in.params["shape"] = IntList{4};
    m.insert_layer(in);
    IRLayer acc;
    acc.id = "acc";
    acc.type = LayerType::Accuracy;
    m.insert_layer(acc);
    m.insert_connection("data", "acc");
    std::string text = export_caffe(m);
    CHECK(text.find("accuracy_param") == std::string::npos);
    m.at("acc").params["top_k"] = 5.0;
    text = export_caffe(m);
    const auto root = textproto::parse(text);
    const auto layers = root.find_all("layer");
    REQUIRE(layers.size() == 2);
    CHECK(layers[1]->find("accuracy_param")->find("top_k")->as_double() == 5);
}

TEST_CASE("caffe export rejects keras-only layers") {
    const IRModel m = zoo_model("imdb_lstm");
    try {
        export_caffe(m);
        FAIL("expected UnsupportedLayer");
    } catch (const UnsupportedLayer& e) {
        CHECK(e.layer_type() == "Embedding");
        CHECK(e.target() == "caffe");
    }
}

TEST_CASE("keras dense mapping") {
    const auto r = import_keras(R"({"class_name":"Model","config":{"layers":[
        {"name":"in","class_name":"InputLayer","config":{"batch_input_shape":[null,4096]},"inbound_nodes":[]},
        {"name":"fc","class_name":"Dense","config":{"units":1000},"inbound_nodes":[[["in",0,0,{}]]]}]}})");
    CHECK(r.model.at("fc").type == LayerType::InnerProduct);
    CHECK(r.model.at("fc").number("num_output") == 1000);
}

TEST_CASE("keras same padding becomes numeric") {
    const auto r = import_keras(R"({"class_name":"Model","config":{"layers":[
        {"name":"in","class_name":"InputLayer","config":{"batch_input_shape":[null,224,224,3]},"inbound_nodes":[]},
        {"name":"c","class_name":"Conv2D","config":{"filters":64,"kernel_size":[3,3],"strides":[1,1],"padding":"same"},
         "inbound_nodes":[[["in",0,0,{}]]]}]}})");
    const IRLayer& c = r.model.at("c");
    CHECK(c.int_list("pad") == IntList{1, 1});
    CHECK(c.text("padding_mode") == "numeric");
    CHECK(r.model.at("in").int_list("shape") == IntList{3, 224, 224});
}

TEST_CASE("keras sequential becomes a chain") {
    const auto r = import_keras(R"({"class_name":"Sequential","config":[
        {"class_name":"Dense","config":{"name":"a","units":3}},
        {"class_name":"Dense","config":{"name":"b","units":2}}]})");
    CHECK(r.model.size() == 2);
    REQUIRE(r.model.connections().size() == 1);
    CHECK(r.model.connections()[0] == Connection{"a", "b"});
}

TEST_CASE("keras import errors") {
    CHECK_THROWS_AS(import_keras("[1,2"), MalformedDocument);
    CHECK_THROWS_AS(import_keras(R"({"class_name":"Graph","config":{}})"), MalformedDocument);
    CHECK_THROWS_AS(import_keras(R"({"class_name":"Model","config":{"layers":[
        {"name":"x","class_name":"Lambda","config":{},"inbound_nodes":[]}]}})"),
                    UnknownLayerType);
    CHECK_THROWS_AS(import_keras(R"({"class_name":"Model","config":{"layers":[
        {"name":"in","class_name":"InputLayer","config":{"batch_input_shape":[null,224,224,3]},"inbound_nodes":[]},
        {"name":"c","class_name":"Conv2D","config":{"filters":4,"kernel_size":[2,2],"padding":"same"},
         "inbound_nodes":[[["in",0,0,{}]]]}]}})"),
                    AsymmetricPadding);
}

TEST_CASE("keras 3 fixtures") {
    const auto seq = import_keras(read_data("keras3_sequential.json"));
    CHECK(validate(seq.model).empty());
    CHECK(count_parameters(seq.model, infer_shapes(seq.model)) == 54410);

    // Keras reports 701 including 48 non-trainable moving statistics.
    const auto fun = import_keras(read_data("keras3_functional.json"));
    CHECK(validate(fun.model).empty());
    CHECK(count_parameters(fun.model, infer_shapes(fun.model)) == 653);
    CHECK(oracle::parameters(fun.model) == 653);
    // ZeroPadding2D(1) is folded into the valid convolution that follows it
    bool folded = false;
    for (const auto& l : fun.model.layers())
        if (l.type == LayerType::Convolution && l.int_list("pad") == IntList{1, 1}) folded = true;
    CHECK(folded);
}

TEST_CASE("keras export expresses odd padding with a padding layer") {
    IRModel m = import_caffe(R"(
        layer { name:"data" type:"Input" top:"data" input_param { shape { dim: 1 dim: 3 dim: 10 dim: 10 } } }
        layer { name:"c" type:"Convolution" bottom:"data" top:"c" convolution_param { num_output: 2 kernel_size: 3 pad: 2 } })")
                    .model;
    const json doc = json::parse(export_keras(m));
    bool pad_layer = false;
    for (const auto& l : doc["config"]["layers"]) {
        if (l["class_name"] == "ZeroPadding2D") pad_layer = true;
        if (l["name"] == "c") CHECK(l["config"]["padding"] == "valid");
    }
    CHECK(pad_layer);
    CHECK(import_keras(doc.dump()).model.isomorphic_to(m));

    m.at("c").params["pad"] = IntList{1, 1};
    for (const auto& l : json::parse(export_keras(m))["config"]["layers"])
        if (l["name"] == "c") CHECK(l["config"]["padding"] == "same");
}

TEST_CASE("unsupported layers for keras") {
    const auto* g = zoo::find("googlenet");
    try {
        export_keras(import_caffe(g->text).model);
        FAIL("expected UnsupportedLayer");
    } catch (const UnsupportedLayer& e) {
        CHECK(e.layer_type() == "LRN");
        CHECK(std::string(e.what()).find(e.layer_id()) != std::string::npos);
    }
    ExportOptions reg;
    reg.enable_custom_layers = true;
    const json doc = json::parse(export_keras(import_caffe(g->text).model, reg));
    bool custom = false;
    for (const auto& l : doc["config"]["layers"]) custom = custom || l["class_name"] == "LRN";
    CHECK(custom);

    const auto py = import_caffe(R"(
        layer { name:"data" type:"Input" top:"data" input_param { shape { dim: 1 dim: 4 } } }
        layer { name:"py" type:"Python" bottom:"data" top:"py" python_param { module:"m" layer:"L" } })");
    for (bool flag : {false, true}) {
        ExportOptions o;
        o.enable_custom_layers = flag;
        try {
            export_keras(py.model, o);
            FAIL("expected UnsupportedLayer");
        } catch (const UnsupportedLayer& e) {
            CHECK(e.layer_id() == "py");
            CHECK(e.layer_type() == "Python");
        }
    }
}

TEST_CASE("framework-exclusive parameter values are rejected") {
    IRModel m = zoo_model("imdb_lstm");
    std::string lstm;
    for (const auto& l : m.layers())
        if (l.type == LayerType::LSTM) lstm = l.id;
    REQUIRE(!lstm.empty());
    m.at(lstm).params["return_sequences"] = true;
    // the embedding is already Keras-only; use a model without it
    IRModel r("r");
    IRLayer in;
    in.id = "in";
    in.type = LayerType::Input;
    in.params["shape"] = IntList{8, 5};
    r.insert_layer(in);
    IRLayer rnn = m.at(lstm);
    r.insert_layer(rnn);
    r.insert_connection("in", rnn.id);
    CHECK_THROWS_AS(export_caffe(r), UnsupportedLayer);
    r.at(rnn.id).params.erase("return_sequences");
    CHECK_NOTHROW(export_caffe(r));
}

TEST_CASE("padding examples") {
    const std::int64_t in224[] = {224}, k3[] = {3}, k2[] = {2}, s1[] = {1};
    CHECK(resolve_padding(PaddingMode::same(), in224, k3, s1) == IntList{1});
    CHECK(resolve_padding(PaddingMode::valid(), in224, k3, s1) == IntList{0});
    CHECK_THROWS_AS(resolve_padding(PaddingMode::same(), in224, k2, s1), AsymmetricPadding);
    CHECK(resolve_padding(PaddingMode::numeric({4}), in224, k3, s1) == IntList{4});
    CHECK(same_total_padding(224, 3, 1) == 2);
    CHECK(same_total_padding(5, 1, 4) == 0);
}

TEST_CASE("same padding property") {
    for (std::int64_t in = 1; in <= 64; ++in)
        for (std::int64_t k = 1; k <= in; ++k)
            for (std::int64_t s = 1; s <= 8; ++s) {
                const std::int64_t i[] = {in}, kk[] = {k}, ss[] = {s};
                CHECK(resolve_padding(PaddingMode::valid(), i, kk, ss) == IntList{0});
                try {
                    const auto p = resolve_padding(PaddingMode::same(), i, kk, ss)[0];
                    REQUIRE((in + 2 * p - k) / s + 1 == (in + s - 1) / s);
                } catch (const AsymmetricPadding&) {
                    // the smallest total padding giving ceil(in/s) outputs is odd
                    std::int64_t t = 0;
                    while ((in + t - k) / s + 1 < (in + s - 1) / s || in + t < k) ++t;
                    REQUIRE(t % 2 == 1);
                }
            }
}

TEST_CASE("name map is a bijection on supported types") {
    for (Framework f : {Framework::Caffe, Framework::Keras}) {
        const NameMap& map = NameMap::get(f);
        std::set<std::string> names;
        std::set<LayerType> types;
        for (const auto& row : map.rows()) {
            CHECK(names.insert(row.framework).second);
            CHECK(types.insert(row.type).second);
            CHECK(map.by_name(row.framework) == &row);
            CHECK(map.by_type(row.type) == &row);
            std::set<std::string> fw_keys;
            for (const auto& p : row.params) {
                CHECK(fw_keys.insert(p.framework).second);
                CHECK(map.to_ir(row.type, p.framework) == p.ir);
                CHECK(map.to_framework(row.type, p.ir) == p.framework);
            }
        }
        for (const auto& spec : catalog())
            if (spec.available_in(f)) CHECK_MESSAGE(map.by_type(spec.type) != nullptr, spec.name);
    }
    const auto& keras = NameMap::get(Framework::Keras);
    CHECK(keras.by_type(LayerType::InnerProduct)->framework == "Dense");
    CHECK(keras.to_framework(LayerType::InnerProduct, "num_output") == "units");
    CHECK(keras.to_framework(LayerType::Convolution, "num_output") == "filters");
    CHECK(NameMap::get(Framework::Caffe).to_framework(LayerType::InnerProduct, "num_output") == "num_output");
}

TEST_CASE("convert tags the phase") {
    const auto* g = zoo::find("googlenet");
    try {
        convert(g->text, Framework::Caffe, Framework::Keras);
        FAIL("expected ConversionError");
    } catch (const ConversionError& e) {
        CHECK(e.phase() == Phase::Export);
        CHECK(e.code() == "UnsupportedLayer");
        CHECK(e.tagged().rfind("export: UnsupportedLayer: LRN", 0) == 0);
    }
    try {
        convert("layer {", Framework::Caffe, Framework::Keras);
        FAIL("expected ConversionError");
    } catch (const ConversionError& e) {
        CHECK(e.phase() == Phase::Import);
    }
}

TEST_CASE("convert is export after import") {
    for (const auto& e : zoo::entries()) {
        CAPTURE(e.name);
        for (Framework t : {Framework::Caffe, Framework::Keras}) {
            ExportOptions o;
            o.enable_custom_layers = true;
            std::string direct, composed;
            try {
                direct = convert(e.text, e.framework, t, o);
            } catch (const ConversionError&) {
                direct = "error";
            }
            try {
                composed = export_model(import_model(e.text, e.framework).model, t, o);
            } catch (const Error&) {
                composed = "error";
            }
            CHECK(direct == composed);
        }
    }
}

TEST_CASE("zoo round trips in the native framework") {
    for (const auto& e : zoo::entries()) {
        CAPTURE(e.name);
        const IRModel m = import_model(e.text, e.framework).model;
        CHECK(roundtrip(m, e.framework).isomorphic_to(m));
        // the canonical re-export is a fixpoint
        const std::string once = export_model(m, e.framework);
        CHECK(export_model(import_model(once, e.framework).model, e.framework) == once);
    }
}

TEST_CASE("random models round trip") {
    for (Framework f : {Framework::Caffe, Framework::Keras}) {
        gen::Rng rng(f == Framework::Caffe ? 101 : 202);
        for (int i = 0; i < 100; ++i) {
            const IRModel m = gen::random_model(rng, {.framework = f, .max_layers = 40, .allow_lrn = f == Framework::Caffe});
            CAPTURE(to_canonical_json(m));
            const std::string text = export_model(m, f);
            CAPTURE(text);
            CHECK(import_model(text, f).model.isomorphic_to(m));
        }
    }
}

}  // TEST_SUITE
