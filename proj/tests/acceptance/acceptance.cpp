// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "collab_sim.hpp"
#include "generators.hpp"
#include "nnedit/collab/events.hpp"
#include "nnedit/frontends/frontends.hpp"
#include "nnedit/frontends/padding.hpp"
#include "nnedit/ir/json_io.hpp"
#include "nnedit/ir/shapes.hpp"
#include "nnedit/layout/layout.hpp"
#include "nnedit/service/service.hpp"
#include "nnedit/zoo/zoo.hpp"
#include "oracles.hpp"
#include "stream_client.hpp"

using namespace nnedit;
using nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> problems;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (problems.size() < 5) problems.push_back(what);
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

IRModel fixture(const char* name) {
    const auto* e = zoo::find(name);
    return frontends::import_model(e->text, e->framework).model;
}

std::string canonical(const IRModel& m) { return json::parse(to_canonical_json(m)).dump(); }

// ---------------------------------------------------------------------------

Outcome conversion_matrix() {
    Outcome o;
    const auto t0 = Clock::now();
    struct Cell {
        const char* model;
        bool registry;
        bool expect_ok;
        const char* failing_type;
    };
    const Cell cells[] = {
        {"vgg16", false, true, nullptr},        {"alexnet", true, true, nullptr},
        {"inception_v3", false, true, nullptr}, {"resnet50", false, true, nullptr},
        {"googlenet", false, false, "LRN"},     {"squeezenet", false, false, nullptr},
        {"alexnet", false, false, "LRN"},
    };
    int good = 0;
    for (const auto& c : cells) {
        const auto* e = zoo::find(c.model);
        frontends::ExportOptions opt;
        opt.enable_custom_layers = c.registry;
        const std::string label = std::string(c.model) + (c.registry ? "+registry" : "");
        try {
            const std::string keras = frontends::convert(e->text, Framework::Caffe, Framework::Keras, opt);
            const std::string back = frontends::convert(keras, Framework::Keras, Framework::Caffe, opt);
            const IRModel src = frontends::import_caffe(e->text).model;
            const IRModel round = frontends::import_caffe(back).model;
            const bool same_size = round.size() == src.size() && oracle::parameters(round) == oracle::parameters(src);
            o.require(c.expect_ok, label + " converted but should fail");
            o.require(same_size, label + " lost layers or parameters on the way back");
            if (c.expect_ok && same_size) ++good;
        } catch (const frontends::ConversionError& err) {
            const bool type_ok = err.code() == "UnsupportedLayer" &&
                                 (!c.failing_type || std::string(err.what()).rfind(c.failing_type, 0) == 0);
            o.require(!c.expect_ok && type_ok, label + ": " + err.tagged());
            if (!c.expect_ok && type_ok) ++good;
        }
    }
    const double secs = seconds_since(t0);
    o.require(secs < 5.0, "took " + fmt(secs) + " s");
    o.detail = std::to_string(good) + "/" + std::to_string(std::size(cells)) + " cells as expected in " + fmt(secs) + " s";
    return o;
}

Outcome round_trips() {
    Outcome o;
    int checked = 0, skipped = 0;
    for (const auto& e : zoo::entries()) {
        const IRModel m = frontends::import_model(e.text, e.framework).model;
        for (Framework f : {Framework::Caffe, Framework::Keras}) {
            frontends::ExportOptions opt;
            opt.enable_custom_layers = true;
            std::string text;
            try {
                text = frontends::export_model(m, f, opt);
            } catch (const UnsupportedLayer&) {
                ++skipped;  // not expressible in f
                continue;
            }
            ++checked;
            o.require(frontends::import_model(text, f).model.isomorphic_to(m),
                      std::string(e.name) + " via " + to_string(f));
        }
    }
    for (Framework f : {Framework::Caffe, Framework::Keras}) {
        gen::Rng rng(f == Framework::Caffe ? 7001 : 7002);
        for (int i = 0; i < 200; ++i) {
            const IRModel m =
                gen::random_model(rng, {.framework = f, .max_layers = 60, .allow_lrn = f == Framework::Caffe});
            ++checked;
            o.require(frontends::import_model(frontends::export_model(m, f), f).model.isomorphic_to(m),
                      "random model " + std::to_string(i) + " via " + to_string(f));
        }
    }
    o.detail = std::to_string(checked) + " round trips (" + std::to_string(skipped) + " fixture/framework pairs not expressible)";
    return o;
}

Outcome parameter_count(const std::string& cli) {
    Outcome o;
    const std::uint64_t oracle_vgg = oracle::parameters(fixture("vgg16"));
    o.require(oracle_vgg == 138357544, "oracle gives " + std::to_string(oracle_vgg));

    const std::string cmd =
        cli + " params --in " + std::string(NNEDIT_ZOO_DIR) + "/vgg16.prototxt --input-shape 3,224,224";
    std::string printed;
    if (FILE* p = popen(cmd.c_str(), "r")) {
        char buf[256];
        while (fgets(buf, sizeof buf, p)) printed += buf;
        o.require(pclose(p) == 0, "nnedit params exited non-zero");
    } else {
        o.require(false, "cannot run " + cmd);
    }
    o.require(printed == "138357544\n", "nnedit params printed '" + printed + "'");

    gen::Rng rng(9001);
    int matches = 0;
    for (int i = 0; i < 100; ++i) {
        const IRModel m = gen::random_model(rng);
        const auto got = count_parameters(m, infer_shapes(m));
        const auto want = oracle::parameters(m);
        o.require(got == want, "random model " + std::to_string(i) + ": " + std::to_string(got) + " vs oracle " +
                                   std::to_string(want));
        matches += got == want;
    }
    printed.erase(std::remove(printed.begin(), printed.end(), '\n'), printed.end());
    o.detail = "VGG-16 prints " + printed + ", " + std::to_string(matches) + "/100 random models match the oracle";
    return o;
}

Outcome padding() {
    Outcome o;
    std::size_t same = 0, asymmetric = 0;
    for (std::int64_t in = 1; in <= 64; ++in)
        for (std::int64_t k = 1; k <= in; ++k)
            for (std::int64_t s = 1; s <= 8; ++s) {
                const std::int64_t i[] = {in}, kk[] = {k}, ss[] = {s};
                o.require(frontends::resolve_padding(frontends::PaddingMode::valid(), i, kk, ss) == IntList{0},
                          "valid padding nonzero");
                try {
                    const auto p = frontends::resolve_padding(frontends::PaddingMode::same(), i, kk, ss)[0];
                    o.require((in + 2 * p - k) / s + 1 == (in + s - 1) / s,
                              "in=" + std::to_string(in) + " k=" + std::to_string(k) + " s=" + std::to_string(s));
                    ++same;
                } catch (const AsymmetricPadding&) {
                    ++asymmetric;
                }
            }
    o.detail = std::to_string(same) + " symmetric cases give ceil(in/s), " + std::to_string(asymmetric) +
               " need asymmetric padding";
    return o;
}

Outcome layout_invariants() {
    Outcome o;
    const layout::LayoutConfig cfg;
    auto check = [&](const IRModel& m, const std::string& label) {
        const auto pos = layout::compute_layout(m, cfg);
        const auto v = oracle::layout_violations(m, pos, cfg);
        o.require(v.empty(), label + ": " + (v.empty() ? "" : v.front()));
        const auto again = layout::compute_layout(m, cfg);
        o.require(layout::layout_to_json(again, layout::route_connections(m, again, cfg)).dump() ==
                      layout::layout_to_json(pos, layout::route_connections(m, pos, cfg)).dump(),
                  label + ": repeated layout differs");
    };
    for (const auto& e : zoo::entries()) check(frontends::import_model(e.text, e.framework).model, e.name.data());
    gen::Rng rng(5150);
    std::uniform_int_distribution<int> nodes(2, 500);
    for (int i = 0; i < 500; ++i)
        check(gen::random_dag(rng, {.nodes = nodes(rng), .extra_edge_rate = 0.35, .source_rate = 0.05}),
              "dag " + std::to_string(i));

    auto time_chain = [&](int n) {
        const IRModel m = gen::chain(n);
        std::vector<double> runs;
        for (int r = 0; r < 5; ++r) {
            const auto t0 = Clock::now();
            layout::compute_layout(m, cfg);
            runs.push_back(seconds_since(t0));
        }
        return median(runs);
    };
    const double t1000 = time_chain(1000), t2000 = time_chain(2000);
    o.require(t1000 < 1.0 && t2000 < 1.0, "chain layout over 1 s");
    o.require(t2000 <= 4 * t1000, "2000-node chain " + fmt(t2000 / t1000) + "x the 1000-node time");
    o.detail = std::to_string(zoo::entries().size()) + " fixtures + 500 DAGs clean; chain 1000: " +
               fmt(t1000 * 1000, 3) + " ms, 2000: " + fmt(t2000 * 1000, 3) + " ms (" + fmt(t2000 / t1000) + "x)";
    return o;
}

Outcome routing() {
    Outcome o;
    const layout::LayoutConfig cfg;
    std::size_t paths = 0;
    for (const auto& e : zoo::entries()) {
        const IRModel m = frontends::import_model(e.text, e.framework).model;
        const auto pos = layout::compute_layout(m, cfg);
        const auto routed = layout::route_connections(m, pos, cfg);
        paths += routed.size();
        const auto v = oracle::routing_violations(m, pos, routed, cfg);
        o.require(v.empty(), std::string(e.name) + ": " + (v.empty() ? "" : v.front()));
    }
    o.detail = std::to_string(paths) + " paths on " + std::to_string(zoo::entries().size()) +
               " fixtures, no segment enters a non-incident layer";
    return o;
}

Outcome collaboration() {
    Outcome o;
    const auto t0 = Clock::now();
    sim::Options opt;
    opt.clients = 5;
    opt.events = 1000;
    opt.seed = 2024;
    sim::Simulation s(sim::starter_model(), opt);
    s.run();
    auto& hub = s.hub;
    const std::string id = s.model_id;
    const auto final_version = hub.version(id);
    const std::string final_json = canonical(hub.snapshot(id).model);
    for (const auto& c : s.clients) {
        o.require(c->replica.version() == final_version, c->name + " at version " + std::to_string(c->replica.version()));
        o.require(canonical(c->replica.model()) == final_json, c->name + " diverged");
    }
    for (const auto& [kind, n] : s.submitted) o.require(n > 0, "no " + kind + " submitted");
    o.require(s.duplicated > 0, "no duplicated deliveries");

    std::vector<json> events;
    for (const auto& e : hub.log(id)) events.push_back(json::parse(collab::event_to_json(e).dump()));
    const auto states = oracle::fold_log(hub.initial(id), events);
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::uint64_t> pick(0, final_version);
    for (int i = 0; i < 50; ++i) {
        const auto k = pick(rng);
        o.require(canonical(hub.replay(id, k)) == canonical(states[k]), "replay(" + std::to_string(k) + ") != fold");
    }
    // revert targets drawn from the original history
    const auto base = hub.version(id);
    for (int i = 0; i < 50; ++i) {
        const auto k = pick(rng);
        hub.revert(id, k, "checker");
        o.require(canonical(hub.snapshot(id).model) == canonical(states[k]),
                  "revert(" + std::to_string(k) + ") != replay");
    }
    o.require(hub.version(id) == base + 50, "reverts did not append");
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "took " + fmt(secs) + " s");
    std::size_t submitted = 0;
    for (const auto& [kind, n] : s.submitted) submitted += n;
    o.detail = std::to_string(s.clients.size()) + " clients, " + std::to_string(submitted) + " submissions, " +
               std::to_string(final_version) + " versions, " + std::to_string(s.duplicated) +
               " duplicated deliveries; 50 replays and 50 reverts match the fold in " + fmt(secs) + " s";
    return o;
}

IRModel conv_stack(int layers) {
    IRModel m("stack" + std::to_string(layers));
    IRLayer in;
    in.id = "data";
    in.type = LayerType::Input;
    in.params = {{"shape", IntList{3, 32, 32}}};
    m.insert_layer(in);
    std::string prev = "data";
    for (int i = 1; i < layers; ++i) {
        IRLayer l;
        l.id = "l" + std::to_string(i);
        if (i % 2) {
            l.type = LayerType::Convolution;
            l.params = {{"num_output", 8.0}, {"kernel", IntList{3, 3}}, {"pad", IntList{1, 1}}};
        } else {
            l.type = LayerType::ReLU;
        }
        m.insert_layer(l);
        m.insert_connection(prev, l.id);
        prev = l.id;
    }
    return m;
}

Outcome async_export() {
    Outcome o;
    service::Config cfg;
    cfg.port = 0;
    cfg.workers = 2;
    service::Service svc(cfg);
    service::HttpServer http(svc);
    const int port = http.bind("127.0.0.1", 0);
    http.start();
    httplib::Client client("127.0.0.1", port);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);

    auto import = [&](const IRModel& m) {
        service::ImportRequest r;
        r.format = "ir";
        r.source = to_canonical_json(m);
        return svc.import_model(r)["model_id"].get<std::string>();
    };
    const std::string small = import(conv_stack(10)), large = import(conv_stack(1000));

    auto measure = [&](const std::string& id, std::vector<double>& submit, std::vector<double>& complete) {
        const auto t0 = Clock::now();
        auto res = client.Post("/api/models/" + id + "/export", R"({"target":"caffe"})", "application/json");
        submit.push_back(seconds_since(t0));
        if (!res || res->status != 202) {
            o.require(false, "export submission failed");
            return;
        }
        const std::string job = json::parse(res->body)["job_id"];
        auto done = svc.wait_for_job(job, std::chrono::seconds(60));
        complete.push_back(seconds_since(t0));
        o.require(done && done->state == service::JobState::Done, "export job did not finish");
    };
    std::vector<double> submit_small, submit_large, done_small, done_large;
    for (int i = 0; i < 3; ++i) {  // warm-up
        std::vector<double> a, b;
        measure(small, a, b);
        measure(large, a, b);
    }
    for (int i = 0; i < 31; ++i) {
        measure(small, submit_small, done_small);
        measure(large, submit_large, done_large);
    }
    client.stop();  // close the keep-alive connection so stop() does not wait it out
    http.stop();
    if (!o.pass) return o;
    const double ss = median(submit_small), sl = median(submit_large);
    const double ds = median(done_small), dl = median(done_large);
    o.require(sl <= 2 * ss, "submission latency ratio " + fmt(sl / ss));
    o.require(dl >= 5 * ds, "completion ratio " + fmt(dl / ds));
    o.detail = "median submit 10 layers " + fmt(ss * 1e3, 3) + " ms, 1000 layers " + fmt(sl * 1e3, 3) + " ms (" +
               fmt(sl / ss) + "x); completion " + fmt(ds * 1e3, 3) + " ms vs " + fmt(dl * 1e3, 3) + " ms (" +
               fmt(dl / ds) + "x)";
    return o;
}

// `nnedit serve` as a child process; the listening line gives the port.
struct Server {
    pid_t pid = -1;
    int port = 0;

    Server(const std::string& cli, const fs::path& store) {
        int out[2];
        if (pipe(out) != 0) return;
        pid = fork();
        if (pid == 0) {
            dup2(out[1], STDOUT_FILENO);
            close(out[0]);
            close(out[1]);
            setenv("NNEDIT_STORE", store.c_str(), 1);
            setenv("NNEDIT_BIND", "127.0.0.1:0", 1);
            execl(cli.c_str(), cli.c_str(), "serve", static_cast<char*>(nullptr));
            _exit(127);
        }
        close(out[1]);
        std::string line;
        char ch;
        while (read(out[0], &ch, 1) == 1 && ch != '\n') line += ch;
        close(out[0]);
        const auto colon = line.rfind(':');
        if (colon != std::string::npos) port = std::atoi(line.c_str() + colon + 1);
    }
    void kill_hard() {
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
            pid = -1;
        }
    }
    ~Server() {
        if (pid > 0) {
            ::kill(pid, SIGTERM);
            waitpid(pid, nullptr, 0);
        }
    }
};

Outcome store_recovery(const std::string& cli) {
    Outcome o;
    const fs::path store = fs::temp_directory_path() / ("nnedit-acceptance-" + std::to_string(getpid()));
    fs::remove_all(store);
    std::string id, token, acked_json;
    std::uint64_t acked = 0;
    {
        Server server(cli, store);
        if (server.port == 0) {
            o.require(false, "first server did not start");
            return o;
        }
        httplib::Client c("127.0.0.1", server.port);
        service::ImportRequest r;
        auto res = c.Post("/api/models", json{{"format", "caffe"}, {"source", zoo::find("lenet")->text}}.dump(),
                          "application/json");
        id = json::parse(res->body)["model_id"];
        token = json::parse(c.Post("/api/models/" + id + "/share", "{}", "application/json")->body)["token"];

        streamtest::StreamClient client("127.0.0.1", server.port, id, token, "ann");
        o.require(client.wait_for([](const auto& rep) { return rep.joined(); }), "first join");
        const char* layers[] = {"conv1", "conv2", "ip1"};
        for (int i = 0; i < 60; ++i) {
            json msg = client.with_replica([&](auto& rep) {
                if (i % 10 == 9) return rep.submit(collab::EventKind::LayerAdd, {{"layer", {{"type", "ReLU"}}}});
                return rep.submit(collab::EventKind::ParamUpdate,
                                  {{"layer_id", layers[i % 3]}, {"key", "num_output"}, {"value", 4 + i}});
            });
            client.send(msg);
            const auto want = static_cast<std::uint64_t>(i + 1);
            o.require(client.wait_for([&](const auto& rep) { return rep.version() >= want; }), "no ack");
        }
        client.with_replica([&](auto& rep) {
            acked = rep.version();
            acked_json = canonical(rep.model());
            return 0;
        });
        // unacknowledged traffic in flight when the process dies
        for (int i = 0; i < 5; ++i)
            client.send(client.with_replica([&](auto& rep) {
                return rep.submit(collab::EventKind::ParamUpdate,
                                  {{"layer_id", "ip2"}, {"key", "num_output"}, {"value", 100 + i}});
            }));
        server.kill_hard();
        client.stop();
    }
    Server server(cli, store);
    if (server.port == 0) {
        o.require(false, "restarted server did not start");
        return o;
    }
    streamtest::StreamClient client("127.0.0.1", server.port, id, token, "ann");
    o.require(client.wait_for([](const auto& rep) { return rep.joined(); }), "join after restart");
    const auto recovered = client.with_replica([](auto& rep) { return rep.version(); });
    o.require(recovered >= acked, "restart lost acknowledged versions");
    client.send(client.with_replica([&](auto& rep) { return rep.replay_request(acked); }));
    o.require(client.wait_for([&](const auto& rep) { return rep.replays().count(acked) == 1; }), "no replay answer");
    const std::string replayed =
        client.with_replica([&](auto& rep) { return canonical(rep.replays().at(acked)); });
    o.require(replayed == acked_json, "replay of version " + std::to_string(acked) + " differs");
    client.stop();
    fs::remove_all(store);
    o.detail = "killed at acknowledged version " + std::to_string(acked) + ", restart recovered version " +
               std::to_string(recovered) + ", replay(" + std::to_string(acked) + ") is byte-identical";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : NNEDIT_BIN;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"conversion-matrix", conversion_matrix},
        {"round-trip", round_trips},
        {"parameter-count", [&] { return parameter_count(cli); }},
        {"padding", padding},
        {"layout-invariants", layout_invariants},
        {"routing", routing},
        {"collaboration-convergence", collaboration},
        {"async-export", async_export},
        {"store-recovery", [&] { return store_recovery(cli); }},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.problems.push_back(std::string("exception: ") + e.what());
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(seconds_since(t0))
                  << " s]\n";
        for (const auto& p : o.problems) std::cout << "    " << p << "\n";
        std::cout.flush();
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
