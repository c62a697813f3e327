#include <httplib.h>

#include <atomic>
#include <deque>
#include <thread>

#include "nnedit/service/service.hpp"

namespace nnedit::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kId = "([A-Za-z0-9_-]+)";

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

int status_for(const Error& e) {
    if (e.code() == "NotFound") return 404;
    return 400;
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw ServiceError(400, "MalformedDocument", "request body is not valid JSON");
    return body;
}

// Lines queued for one stream connection.
struct Outbox {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> lines;
};

}  // namespace

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    std::atomic<bool> stopping{false};
    std::thread thread;

    explicit Impl(Service& s) : service(s) {}

    template <class F>
    httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const ServiceError& e) {
                send_json(res, e.status(), error_body(e));
            } catch (const Error& e) {
                send_json(res, status_for(e), error_body(ServiceError(status_for(e), e.code(), e.what())));
            } catch (const json::exception& e) {
                send_json(res, 400, error_body(ServiceError(400, "MalformedDocument", e.what())));
            } catch (const std::exception& e) {
                send_json(res, 500, error_body(ServiceError(500, "InternalError", e.what())));
            }
        };
    }

    void routes() {
        server.new_task_queue = [] { return new httplib::ThreadPool(64); };
        server.set_tcp_nodelay(true);
        server.set_payload_max_length(2 * service.config().fetch_cap + (1u << 16));
        server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
        });
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        server.Post("/api/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service.import_model(parse_import_request(parse_body(req))));
        }));

        server.Get(std::string("/api/models/") + kId, guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, service.get_model(req.matches[1]));
        }));

        server.Post(std::string("/api/models/") + kId + "/export",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const json body = parse_body(req);
                        if (!body.is_object() || !body.contains("target") || !body["target"].is_string())
                            throw ServiceError(400, "MalformedDocument", "body needs a string 'target'");
                        const auto target = parse_framework(body["target"].get<std::string>());
                        if (!target)
                            throw ServiceError(400, "MalformedDocument",
                                               "unknown target '" + body["target"].get<std::string>() + "'");
                        const std::string id =
                            service.export_model(req.matches[1], *target, body.value("enable_custom_layers", false));
                        send_json(res, 202,
                                  {{"job_id", id}, {"state", "pending"}, {"status_url", "/api/jobs/" + id}});
                    }));

        server.Get(std::string("/api/jobs/") + kId, guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, job_to_json(service.job(req.matches[1])));
        }));

        server.Get(std::string("/api/jobs/") + kId + "/result",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const ExportJob j = service.job_result(req.matches[1]);
                       res.set_header("Content-Disposition", "attachment; filename=\"" + j.filename + "\"");
                       res.set_content(j.result, j.target == Framework::Caffe ? "text/plain" : "application/json");
                   }));

        server.Post(std::string("/api/models/") + kId + "/share",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string model = req.matches[1];
                        const std::string token = service.share(model);
                        send_json(res, 200, {{"model_id", model}, {"token", token}, {"url", "/s/" + token}});
                    }));

        server.Get(std::string("/s/") + kId, guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string token = req.matches[1];
            const std::string model = service.resolve_share(token);
            send_json(res, 200,
                      {{"model_id", model},
                       {"token", token},
                       {"stream_url", "/ws/models/" + model + "?token=" + token}});
        }));

        server.Get(std::string("/ws/models/") + kId, guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto box = std::make_shared<Outbox>();
            auto session = service.open_session(req.matches[1], req.get_param_value("token"),
                                                req.get_param_value("user"), [box](const ordered_json& m) {
                                                    std::lock_guard lock(box->mu);
                                                    box->lines.push_back(m.dump() + "\n");
                                                    box->cv.notify_one();
                                                });
            res.set_header("Cache-Control", "no-store");
            res.set_header("X-Session-Id", session->id());
            res.set_chunked_content_provider(
                "application/x-ndjson",
                [this, box](std::size_t, httplib::DataSink& sink) {
                    std::deque<std::string> out;
                    {
                        std::unique_lock lock(box->mu);
                        box->cv.wait_for(lock, std::chrono::milliseconds(200),
                                         [&] { return !box->lines.empty() || stopping.load(); });
                        out.swap(box->lines);
                    }
                    if (stopping) return false;
                    for (const auto& line : out)
                        if (!sink.write(line.data(), line.size())) return false;
                    return sink.is_writable();
                },
                [this, session](bool) { service.close_session(*session); });
        }));

        server.Post(std::string("/ws/models/") + kId, guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string model = req.matches[1];
            auto owner = service.resolve_share(req.get_param_value("token"));
            auto session = service.find_session(req.get_param_value("session"));
            if (owner != model || !session || session->model_id() != model)
                throw ServiceError(404, "NotFound", "no such session for this model");
            std::vector<json> messages;
            std::size_t at = 0;
            while (at < req.body.size()) {
                std::size_t nl = req.body.find('\n', at);
                if (nl == std::string::npos) nl = req.body.size();
                const std::string line = req.body.substr(at, nl - at);
                at = nl + 1;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                json m = json::parse(line, nullptr, false);
                if (m.is_discarded()) throw ServiceError(400, "MalformedDocument", "message is not valid JSON");
                messages.push_back(std::move(m));
            }
            for (const auto& m : messages) session->receive(m);
            send_json(res, 202, {{"accepted", messages.size()}});
        }));
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p <= 0) throw std::runtime_error("cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
    impl_->thread = std::thread([this] { run(); });
    impl_->server.wait_until_ready();
}

void HttpServer::stop() {
    impl_->stopping = true;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace nnedit::service
