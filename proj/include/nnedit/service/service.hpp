#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "nnedit/collab/hub.hpp"
#include "nnedit/error.hpp"
#include "nnedit/service/jobs.hpp"

namespace nnedit::service {

struct Config {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::size_t workers = 2;
    /// Directory of the file store; empty keeps everything in memory.
    std::string store_path;
    std::size_t fetch_cap = 16 * 1024 * 1024;
    std::chrono::milliseconds job_retention = std::chrono::hours(24);

    /// Reads NNEDIT_BIND ("host:port" or "port"), NNEDIT_WORKERS,
    /// NNEDIT_STORE, NNEDIT_FETCH_CAP (bytes) and NNEDIT_JOB_RETENTION
    /// (seconds) on top of the defaults. Throws SchemaViolation on bad values.
    static Config from_env(const std::function<const char*(const char*)>& lookup = std::getenv);
};

/// A domain error paired with the HTTP status it is reported with. `detail`
/// is merged into the error object of the response body.
class ServiceError : public Error {
public:
    ServiceError(int status, std::string code, const std::string& message, nlohmann::ordered_json detail = {})
        : Error(std::move(code), message), status_(status), detail_(std::move(detail)) {}
    int status() const noexcept { return status_; }
    const nlohmann::ordered_json& detail() const noexcept { return detail_; }

private:
    int status_;
    nlohmann::ordered_json detail_;
};

/// {"error": {code, message, ...detail}}
nlohmann::ordered_json error_body(const ServiceError& e);

/// Fetches `url` with a plain GET. Throws ServiceError: 400 for a malformed
/// or unsupported URL, 413 when the body exceeds `cap` bytes, 502 when the
/// host is unreachable or answers with a non-2xx status.
std::string fetch_url(const std::string& url, std::size_t cap);

struct ImportRequest {
    std::string format;  // caffe | keras | ir
    std::optional<std::string> source;
    std::optional<std::string> url;
    std::string name;
};

/// Accepts {format, source} or {format, url}, plus an optional name.
/// Throws ServiceError 400.
ImportRequest parse_import_request(const nlohmann::json& body);

/// Transport-independent operations behind the HTTP API.
class Service {
public:
    explicit Service(Config config, std::unique_ptr<JobQueue> queue = nullptr);
    ~Service();

    const Config& config() const { return config_; }
    collab::Hub& hub() { return *hub_; }

    /// {model_id, version, diagnostics, layout, parameters}
    nlohmann::ordered_json import_model(const ImportRequest& request);
    /// {model_id, version, model, layout, parameters, shapes, diagnostics,
    ///  history, comments, share_token}
    nlohmann::ordered_json get_model(const std::string& model_id);

    /// Enqueues an export and returns the job id without waiting.
    std::string export_model(const std::string& model_id, Framework target, bool enable_custom_layers = false);
    /// Throws ServiceError 404.
    ExportJob job(const std::string& job_id);
    /// The finished job. Throws ServiceError 404, or 409 unless done.
    ExportJob job_result(const std::string& job_id);
    /// Blocks until the job has finished or the timeout passes.
    std::optional<ExportJob> wait_for_job(const std::string& job_id, std::chrono::milliseconds timeout);

    /// Same token on every call for a model.
    std::string share(const std::string& model_id);
    /// Throws ServiceError 404.
    std::string resolve_share(const std::string& token);

    /// Opens a collaboration session; the token must be the model's share
    /// token. Throws ServiceError 404.
    std::shared_ptr<collab::Session> open_session(const std::string& model_id, const std::string& token,
                                                  const std::string& user, collab::Session::Sink sink);
    std::shared_ptr<collab::Session> find_session(const std::string& session_id);
    void close_session(const collab::Session& session);

private:
    void run_job(const std::string& job_id);
    void purge_jobs();

    Config config_;
    std::shared_ptr<collab::Store> store_;
    std::unique_ptr<collab::Hub> hub_;
    JobTable jobs_;
    std::mutex jobs_cv_mu_;
    std::condition_variable jobs_cv_;
    std::mutex share_mu_;
    std::mutex sessions_mu_;
    std::map<std::string, std::weak_ptr<collab::Session>> sessions_;
    std::unique_ptr<JobQueue> queue_;  // last: workers stop before the rest goes away
};

/// HTTP front end:
///   POST /api/models                  import
///   GET  /api/models/{id}
///   POST /api/models/{id}/export      {target, enable_custom_layers?} -> 202 {job_id}
///   GET  /api/jobs/{id}
///   GET  /api/jobs/{id}/result
///   POST /api/models/{id}/share
///   GET  /s/{token}
///   GET  /ws/models/{id}?token=&user= session stream, one JSON message per line
///   POST /ws/models/{id}?token=&session= client messages (one JSON value per line)
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();

    /// Binds and returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); bind() first.
    void run();
    void start();  // run() on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace nnedit::service
